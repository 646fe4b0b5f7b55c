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

#include "jsaloc/localization/localization.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "jsaloc/error.h"
#include "jsaloc/jsa/joint_slot_attention.h"
#include "jsaloc/log.h"

namespace jsaloc::localization {

using diffcore::Graph;
using diffcore::Shape;

Var CrossModalAttention(Var queries, Var keys, int n_target) {
  if (n_target < 1 || n_target > queries.value().rows()) {
    throw Error(ErrorKind::kConfig,
                "target slot count " + std::to_string(n_target) +
                    " out of range for " + queries.value().ShapeString());
  }
  jsa::AttentionMaps maps = jsa::ComputeAttention(keys, queries);
  return jsa::TargetColumn(maps.normalized, n_target);
}

std::vector<double> CrossModalAttention(const Tensor& queries,
                                        const Tensor& keys, int n_target) {
  Graph graph;
  Var out = CrossModalAttention(graph.Constant(queries), graph.Constant(keys),
                                n_target);
  const auto flat = out.value().flat();
  return {flat.begin(), flat.end()};
}

std::vector<double> RefineIqr(std::span<const double> ca,
                              std::span<const double> ia, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(ErrorKind::kConfig,
                "iqr alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  if (ca.size() != ia.size()) {
    throw Error(ErrorKind::kDimension,
                "cross-modal map has " + std::to_string(ca.size()) +
                    " entries, intra-modal map has " +
                    std::to_string(ia.size()));
  }
  std::vector<double> out(ca.size());
  for (size_t i = 0; i < ca.size(); ++i) {
    out[i] = alpha * ca[i] + (1.0 - alpha) * ia[i];
  }
  return out;
}

namespace {

struct Tap {
  int lo;
  int hi;
  double frac;
};

std::vector<Tap> Taps(int source, int target) {
  std::vector<Tap> taps(target);
  const double scale = static_cast<double>(source) / target;
  for (int i = 0; i < target; ++i) {
    double src = (i + 0.5) * scale - 0.5;
    if (src < 0.0) src = 0.0;
    int lo = static_cast<int>(std::floor(src));
    if (lo > source - 1) lo = source - 1;
    const int hi = std::min(lo + 1, source - 1);
    taps[i] = {lo, hi, src - lo};
  }
  return taps;
}

}  // namespace

Tensor UpsampleBilinear(const Tensor& heat, int height, int width) {
  if (heat.rank() != 2 || heat.rows() < 1 || heat.cols() < 1) {
    throw Error(ErrorKind::kDimension,
                "upsample expects a non-empty matrix, got " +
                    heat.ShapeString());
  }
  if (height < 1 || width < 1) {
    throw Error(ErrorKind::kConfig, "upsample target must be positive");
  }
  const std::vector<Tap> ty = Taps(heat.rows(), height);
  const std::vector<Tap> tx = Taps(heat.cols(), width);
  Tensor out(Shape{height, width});
  for (int y = 0; y < height; ++y) {
    const Tap& a = ty[y];
    for (int x = 0; x < width; ++x) {
      const Tap& b = tx[x];
      const double top =
          (1.0 - b.frac) * heat(a.lo, b.lo) + b.frac * heat(a.lo, b.hi);
      const double bottom =
          (1.0 - b.frac) * heat(a.hi, b.lo) + b.frac * heat(a.hi, b.hi);
      out(y, x) = (1.0 - a.frac) * top + a.frac * bottom;
    }
  }
  return out;
}

double ResolveThreshold(const Tensor& upsampled,
                        const ThresholdPolicy& policy) {
  if (policy.kind == ThresholdPolicy::Kind::kAbsolute) return policy.value;
  const auto flat = upsampled.flat();
  if (flat.empty()) {
    throw Error(ErrorKind::kDegenerateInput, "threshold of an empty map");
  }
  double mean = 0.0;
  for (double v : flat) mean += v;
  mean /= static_cast<double>(flat.size());
  double var = 0.0;
  for (double v : flat) var += (v - mean) * (v - mean);
  var /= static_cast<double>(flat.size());
  return mean + policy.value * std::sqrt(var);
}

LocalizationMap UpsampleAndThreshold(const Tensor& heat, int height, int width,
                                     double theta) {
  LocalizationMap map;
  map.heat = heat;
  map.upsampled = UpsampleBilinear(heat, height, width);
  map.theta = theta;
  const auto flat = map.upsampled.flat();
  map.mask.resize(flat.size());
  size_t kept = 0;
  for (size_t i = 0; i < flat.size(); ++i) {
    map.mask[i] = flat[i] > theta ? 1 : 0;
    kept += map.mask[i];
  }
  if (kept == 0 || kept == flat.size()) {
    LogWarning("threshold " + std::to_string(theta) + " keeps " +
               std::to_string(kept) + " of " + std::to_string(flat.size()) +
               " pixels");
  }
  return map;
}

LocalizationMap UpsampleAndThreshold(const Tensor& heat, int height, int width,
                                     const ThresholdPolicy& policy) {
  const Tensor up = UpsampleBilinear(heat, height, width);
  return UpsampleAndThreshold(heat, height, width,
                              ResolveThreshold(up, policy));
}

void WriteMaskPgm(const std::filesystem::path& path,
                  std::span<const uint8_t> mask, int height, int width) {
  if (height < 1 || width < 1 ||
      mask.size() != static_cast<size_t>(height) * width) {
    throw Error(ErrorKind::kDimension,
                "mask of " + std::to_string(mask.size()) +
                    " pixels does not fit " + std::to_string(height) + "x" +
                    std::to_string(width));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << "P5\n" << width << " " << height << "\n255\n";
  std::vector<char> bytes(mask.size());
  for (size_t i = 0; i < mask.size(); ++i) {
    bytes[i] = static_cast<char>(mask[i] ? 255 : 0);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

std::vector<uint8_t> ReadMaskPgm(const std::filesystem::path& path,
                                 int* height, int* width) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w < 1 || h < 1 || maxval != 255) {
    throw Error(ErrorKind::kIo, path.string() + " is not an 8-bit P5 mask");
  }
  in.get();
  std::vector<char> bytes(static_cast<size_t>(w) * h);
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw Error(ErrorKind::kIo, path.string() + " is truncated");
  }
  std::vector<uint8_t> mask(bytes.size());
  for (size_t i = 0; i < bytes.size(); ++i) {
    mask[i] = static_cast<uint8_t>(bytes[i]) >= 128 ? 1 : 0;
  }
  if (height) *height = h;
  if (width) *width = w;
  return mask;
}

void WriteHeatCsv(const std::filesystem::path& path, const Tensor& heat) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (int r = 0; r < heat.rows(); ++r) {
    for (int c = 0; c < heat.cols(); ++c) {
      if (c) out << ",";
      out << heat(r, c);
    }
    out << "\n";
  }
}

}  // namespace jsaloc::localization
