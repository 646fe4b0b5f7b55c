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

#ifndef JSALOC_EVALUATION_EVALUATION_H_
#define JSALOC_EVALUATION_EVALUATION_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "jsaloc/diffcore/tensor.h"

namespace jsaloc::evaluation {

using diffcore::Tensor;

// |pred & gt| / |pred | gt|; 1 when both masks are empty.
double Ciou(std::span<const uint8_t> pred, std::span<const uint8_t> gt);

// Fraction of scores >= threshold.
double SuccessRate(std::span<const double> scores, double threshold);

// Trapezoidal area under success(t) on t = 0, 0.05, ..., 1.
inline constexpr int kAucSteps = 20;
double SuccessAuc(std::span<const double> scores);

struct MaskScores {
  double iou = 0.0;
  double fscore = 0.0;
};
// Pixel IoU and F1 of one prediction. Precision of an empty prediction and
// recall of an empty ground truth are taken as 0, except that two empty masks
// score 1 on both.
MaskScores MaskIouFscore(std::span<const uint8_t> pred,
                         std::span<const uint8_t> gt);

struct RecallReport {
  std::map<int, double> audio_to_image;
  std::map<int, double> image_to_audio;
};
// Queries of one modality rank every item of the other by cosine similarity
// (ties to the lower index); a query hits when any of its top K shares its
// label.
RecallReport RetrievalRecall(const Tensor& image_targets,
                             const Tensor& audio_targets,
                             std::span<const int> labels,
                             std::span<const int> ks);

struct EvalReport {
  double ciou_at_050 = 0.0;
  double auc = 0.0;
  double miou = 0.0;
  double fscore = 0.0;
  RecallReport recall;
  int n_samples = 0;
  bool iqr = false;

  // Flat key/value view, keys in a fixed order.
  std::vector<std::pair<std::string, double>> Flatten() const;
};

struct SampleScore {
  int id = 0;
  double ciou = 0.0;
  double fscore = 0.0;
};

// Localization part of the report from per-sample scores.
void FillLocalization(std::span<const SampleScore> scores, EvalReport& report);

void WriteScoresCsv(const std::string& path,
                    std::span<const SampleScore> scores);

}  // namespace jsaloc::evaluation

#endif  // JSALOC_EVALUATION_EVALUATION_H_
