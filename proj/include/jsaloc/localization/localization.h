/* Copyright 2026 The jsaloc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef JSALOC_LOCALIZATION_LOCALIZATION_H_
#define JSALOC_LOCALIZATION_LOCALIZATION_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "jsaloc/diffcore/graph.h"
#include "jsaloc/diffcore/tensor.h"

namespace jsaloc::localization {

using diffcore::Tensor;
using diffcore::Var;

// Attention between another modality's slot queries and this modality's
// keys, computed exactly like the intra-modal slot attention; returns the
// target column of the key-normalized map (sums to 1 over keys).
Var CrossModalAttention(Var queries, Var keys, int n_target);
std::vector<double> CrossModalAttention(const Tensor& queries,
                                        const Tensor& keys, int n_target);

// alpha * ca + (1 - alpha) * ia, element-wise. alpha outside [0, 1] is a
// configuration error.
std::vector<double> RefineIqr(std::span<const double> ca,
                              std::span<const double> ia, double alpha);

// Bilinear resize with half-pixel centers (corners not aligned); source
// coordinates below zero are clamped to the first row/column.
Tensor UpsampleBilinear(const Tensor& heat, int height, int width);

struct ThresholdPolicy {
  enum class Kind { kMeanPlusStd, kAbsolute };
  Kind kind = Kind::kMeanPlusStd;
  // Number of standard deviations above the mean, or the absolute value.
  double value = 1.0;

  static ThresholdPolicy MeanPlusStd(double k = 1.0) {
    return {Kind::kMeanPlusStd, k};
  }
  static ThresholdPolicy Absolute(double theta) {
    return {Kind::kAbsolute, theta};
  }
};

double ResolveThreshold(const Tensor& upsampled, const ThresholdPolicy& policy);

struct LocalizationMap {
  Tensor heat;       // [h x w]
  Tensor upsampled;  // [H x W]
  std::vector<uint8_t> mask;  // H*W, row-major, 1 where upsampled > theta
  double theta = 0.0;
  double alpha = 1.0;

  int height() const { return upsampled.rows(); }
  int width() const { return upsampled.cols(); }
};

// Upsamples `heat` and keeps pixels strictly above theta. Thresholds that
// select nothing or everything are logged, not rejected.
LocalizationMap UpsampleAndThreshold(const Tensor& heat, int height, int width,
                                     double theta);
LocalizationMap UpsampleAndThreshold(const Tensor& heat, int height, int width,
                                     const ThresholdPolicy& policy);

// 8-bit binary PGM (P5, maxval 255, pixels 0 or 255).
void WriteMaskPgm(const std::filesystem::path& path,
                  std::span<const uint8_t> mask, int height, int width);
std::vector<uint8_t> ReadMaskPgm(const std::filesystem::path& path,
                                 int* height, int* width);

// Row-major CSV of a matrix, one line per row.
void WriteHeatCsv(const std::filesystem::path& path, const Tensor& heat);

}  // namespace jsaloc::localization

#endif  // JSALOC_LOCALIZATION_LOCALIZATION_H_
