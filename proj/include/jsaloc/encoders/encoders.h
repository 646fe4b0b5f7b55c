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

#ifndef JSALOC_ENCODERS_ENCODERS_H_
#define JSALOC_ENCODERS_ENCODERS_H_

#include <span>
#include <vector>

#include "jsaloc/diffcore/graph.h"
#include "jsaloc/diffcore/parameter.h"
#include "jsaloc/diffcore/tensor.h"
#include "jsaloc/random.h"

namespace jsaloc::encoders {

using diffcore::Graph;
using diffcore::ParameterStore;
using diffcore::Tensor;
using diffcore::Var;

enum class Modality { kImage, kAudio };

const char* ModalityName(Modality m);

// Encoder output: [h*w x c] for images (row index i*w + j), [t x c] for
// audio.
struct FeatureGrid {
  Var data;
  Modality modality = Modality::kImage;
  int h = 0;
  int w = 0;
  int t = 0;
  int c = 0;

  int rows() const { return modality == Modality::kImage ? h * w : t; }
};

// Two-layer patch encoder: patchify, project, ReLU, project.
struct ImageEncoderConfig {
  int height = 28;
  int width = 28;
  int channels = 1;
  int patch = 4;
  int hidden = 64;
  int c = 32;
};

struct AudioEncoderConfig {
  int freq_bins = 64;
  int frames = 64;
  // The frequency axis is max-pooled into this many equal bands before the
  // temporal patches are projected.
  int freq_bands = 8;
  int temporal_patch = 4;
  int hidden = 64;
  int c = 32;
};

void ValidateImageEncoder(const ImageEncoderConfig& config);
void ValidateAudioEncoder(const AudioEncoderConfig& config);

void AddImageEncoder(ParameterStore& store, const ImageEncoderConfig& config,
                     Rng& rng);
void AddAudioEncoder(ParameterStore& store, const AudioEncoderConfig& config,
                     Rng& rng);

// Raw image [H x W x ch] -> [(H/p)*(W/p) x p*p*ch], patch-major, each patch
// flattened as (row, col, channel).
Tensor PatchifyImage(const Tensor& raw, const ImageEncoderConfig& config);
// Raw spectrogram [F x T] -> band max-pool -> [T/p x bands*p], each patch
// flattened as (band, frame).
Tensor PoolAndPatchifyAudio(const Tensor& raw,
                            const AudioEncoderConfig& config);

FeatureGrid EncodeImage(Graph& graph, const ParameterStore& store,
                        const ImageEncoderConfig& config, const Tensor& raw);
FeatureGrid EncodeAudio(Graph& graph, const ParameterStore& store,
                        const AudioEncoderConfig& config, const Tensor& raw);

// Learnable mask tokens "mask_token/image" and "mask_token/audio", one
// c-vector per modality.
void AddMaskTokens(ParameterStore& store, int c, Rng& rng);

// floor(ratio * rows) distinct row indices, uniformly chosen, ascending.
// Drawn by a partial Fisher-Yates shuffle over [0, rows).
std::vector<int> SampleMaskedRows(int rows, double ratio, Rng& rng);

// Replaces `rows` of the grid with the modality's token. An empty row set
// returns the input grid itself.
FeatureGrid ApplyMaskTokens(Graph& graph, const ParameterStore& store,
                            const FeatureGrid& grid,
                            std::span<const int> rows);

}  // namespace jsaloc::encoders

#endif  // JSALOC_ENCODERS_ENCODERS_H_
