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

#include "jsaloc/fnmitigation/fnmitigation.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "jsaloc/error.h"
#include "jsaloc/log.h"
#include "nlohmann/json.hpp"

namespace jsaloc::fnmitigation {
namespace {

std::vector<double> RowNorms(const Tensor& x) {
  std::vector<double> norms(static_cast<size_t>(x.rows()));
  for (int i = 0; i < x.rows(); ++i) {
    double ss = 0.0;
    for (double v : x.row(i)) ss += v * v;
    norms[i] = std::sqrt(ss);
    if (!(norms[i] > 1e-12)) {
      throw Error(ErrorKind::kDegenerateInput,
                  "knn: row " + std::to_string(i) + " has zero norm");
    }
  }
  return norms;
}

}  // namespace

IndexLists KnnCosine(const Tensor& x, int k) {
  if (x.rank() != 2) {
    throw Error(ErrorKind::kDimension,
                "knn expects a matrix, got " + x.ShapeString());
  }
  const int n = x.rows();
  if (k < 1 || k >= n) {
    throw Error(ErrorKind::kConfig, "knn: k = " + std::to_string(k) +
                                        " must lie in [1, " +
                                        std::to_string(n) + ")");
  }
  const std::vector<double> norms = RowNorms(x);
  IndexLists out(static_cast<size_t>(n));
  std::vector<double> cos(static_cast<size_t>(n));
  std::vector<int> order;
  for (int i = 0; i < n; ++i) {
    const auto xi = x.row(i);
    for (int j = 0; j < n; ++j) {
      const auto xj = x.row(j);
      double dot = 0.0;
      for (size_t c = 0; c < xi.size(); ++c) dot += xi[c] * xj[c];
      cos[j] = dot / (norms[i] * norms[j]);
    }
    order.clear();
    for (int j = 0; j < n; ++j) {
      if (j != i) order.push_back(j);
    }
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](int a, int b) {
                        if (cos[a] != cos[b]) return cos[a] > cos[b];
                        return a < b;
                      });
    out[i].assign(order.begin(), order.begin() + k);
  }
  return out;
}

IndexLists ReciprocalSets(const IndexLists& neighbours) {
  const int n = static_cast<int>(neighbours.size());
  std::vector<uint8_t> adjacent(static_cast<size_t>(n) * n, 0);
  for (int i = 0; i < n; ++i) {
    for (int j : neighbours[i]) adjacent[static_cast<size_t>(i) * n + j] = 1;
  }
  IndexLists out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (adjacent[static_cast<size_t>(i) * n + j] &&
          adjacent[static_cast<size_t>(j) * n + i]) {
        out[i].push_back(j);
      }
    }
  }
  return out;
}

int EffectiveK(int k, int batch) {
  if (k < 0) {
    throw Error(ErrorKind::kConfig,
                "neighbour count must be non-negative, got " +
                    std::to_string(k));
  }
  if (k > batch - 1) {
    LogWarning("neighbour count " + std::to_string(k) + " clamped to " +
               std::to_string(batch - 1) + " for batch " +
               std::to_string(batch));
    return std::max(batch - 1, 0);
  }
  return k;
}

std::vector<uint8_t> FullNegativeMask(int batch) {
  return std::vector<uint8_t>(static_cast<size_t>(batch) * batch, 1);
}

std::vector<uint8_t> MaskFromSets(const IndexLists& excluded, int batch) {
  std::vector<uint8_t> mask = FullNegativeMask(batch);
  for (int i = 0; i < batch; ++i) {
    for (int j : excluded[i]) {
      if (j != i) mask[static_cast<size_t>(i) * batch + j] = 0;
    }
  }
  return mask;
}

NeighborSets ReciprocalFilter(const Tensor& image_targets,
                              const Tensor& audio_targets, int k) {
  if (!image_targets.SameShape(audio_targets) || image_targets.rank() != 2) {
    throw Error(ErrorKind::kDimension,
                "reciprocal filter: " + image_targets.ShapeString() + " vs " +
                    audio_targets.ShapeString());
  }
  NeighborSets sets;
  sets.batch = image_targets.rows();
  sets.k = EffectiveK(k, sets.batch);
  const size_t n = static_cast<size_t>(sets.batch);
  if (sets.k == 0) {
    sets.knn_image.assign(n, {});
    sets.knn_audio.assign(n, {});
  } else {
    sets.knn_image = KnnCosine(image_targets, sets.k);
    sets.knn_audio = KnnCosine(audio_targets, sets.k);
  }
  sets.reciprocal_image = ReciprocalSets(sets.knn_image);
  sets.reciprocal_audio = ReciprocalSets(sets.knn_audio);
  sets.reciprocal.resize(n);
  for (size_t i = 0; i < n; ++i) {
    std::set_intersection(sets.reciprocal_image[i].begin(),
                          sets.reciprocal_image[i].end(),
                          sets.reciprocal_audio[i].begin(),
                          sets.reciprocal_audio[i].end(),
                          std::back_inserter(sets.reciprocal[i]));
  }
  sets.negative_mask = MaskFromSets(sets.reciprocal, sets.batch);
  return sets;
}

void WriteNeighborRecord(std::ostream& out, int64_t step,
                         const NeighborSets& sets,
                         std::span<const int> sample_ids) {
  if (sample_ids.size() != static_cast<size_t>(sets.batch)) {
    throw Error(ErrorKind::kDimension, "neighbour record: id count mismatch");
  }
  nlohmann::json record;
  record["step"] = step;
  nlohmann::json entries = nlohmann::json::array();
  for (int i = 0; i < sets.batch; ++i) {
    std::vector<int> ids;
    for (int j : sets.reciprocal[i]) ids.push_back(sample_ids[j]);
    entries.push_back({{"id", sample_ids[i]}, {"neighbors", ids}});
  }
  record["sets"] = std::move(entries);
  out << record.dump() << "\n";
}

}  // namespace jsaloc::fnmitigation
