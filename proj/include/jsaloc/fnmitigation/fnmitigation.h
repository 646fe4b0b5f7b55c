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

#ifndef JSALOC_FNMITIGATION_FNMITIGATION_H_
#define JSALOC_FNMITIGATION_FNMITIGATION_H_

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "jsaloc/diffcore/tensor.h"

namespace jsaloc::fnmitigation {

using diffcore::Tensor;
using IndexLists = std::vector<std::vector<int>>;

// For every row i, the k other rows with the largest cosine similarity, most
// similar first; equal similarities go to the lower index. Requires
// 1 <= k < rows and non-zero rows.
IndexLists KnnCosine(const Tensor& x, int k);

// j is kept for i when j is among i's neighbours and i among j's. Output
// lists are ascending.
IndexLists ReciprocalSets(const IndexLists& neighbours);

struct NeighborSets {
  int batch = 0;
  int k = 0;  // after clamping
  IndexLists knn_image;
  IndexLists knn_audio;
  IndexLists reciprocal_image;
  IndexLists reciprocal_audio;
  IndexLists reciprocal;  // intersection of the two modalities
  // Row-major [batch x batch]; false marks a predicted false negative.
  std::vector<uint8_t> negative_mask;
};

// k clamped to batch - 1, with a warning when clamping happens.
int EffectiveK(int k, int batch);

// Predicted false negatives from the target slots of both modalities.
NeighborSets ReciprocalFilter(const Tensor& image_targets,
                              const Tensor& audio_targets, int k);

std::vector<uint8_t> FullNegativeMask(int batch);
std::vector<uint8_t> MaskFromSets(const IndexLists& excluded, int batch);

// One JSON line per step: {"step":s,"sets":[{"id":..,"neighbors":[..]},..]}
// with dataset ids in place of batch positions.
void WriteNeighborRecord(std::ostream& out, int64_t step,
                         const NeighborSets& sets,
                         std::span<const int> sample_ids);

}  // namespace jsaloc::fnmitigation

#endif  // JSALOC_FNMITIGATION_FNMITIGATION_H_
