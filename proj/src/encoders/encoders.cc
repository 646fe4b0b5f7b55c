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

#include "jsaloc/encoders/encoders.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "jsaloc/diffcore/layers.h"
#include "jsaloc/diffcore/ops.h"
#include "jsaloc/error.h"

namespace jsaloc::encoders {
namespace {

using diffcore::Shape;

void RequirePositive(int value, const char* field) {
  if (value <= 0) {
    throw Error(ErrorKind::kConfig,
                std::string(field) + " must be positive, got " +
                    std::to_string(value));
  }
}

void RequireDivisible(int total, int part, const char* what) {
  if (total % part != 0) {
    throw Error(ErrorKind::kConfig, std::string(what) + ": " +
                                        std::to_string(total) +
                                        " is not divisible by " +
                                        std::to_string(part));
  }
}

diffcore::Var TwoLayer(Graph& graph, const ParameterStore& store,
                       const std::string& prefix, Tensor patches) {
  Var x = graph.Constant(std::move(patches));
  Var h = diffcore::Relu(
      diffcore::Linear(x, diffcore::BindLinear(graph, store, prefix + "/layer1")));
  return diffcore::Linear(h,
                          diffcore::BindLinear(graph, store, prefix + "/layer2"));
}

}  // namespace

const char* ModalityName(Modality m) {
  return m == Modality::kImage ? "image" : "audio";
}

void ValidateImageEncoder(const ImageEncoderConfig& config) {
  RequirePositive(config.height, "image height");
  RequirePositive(config.width, "image width");
  RequirePositive(config.channels, "image channels");
  RequirePositive(config.patch, "image patch");
  RequirePositive(config.hidden, "image encoder hidden width");
  RequirePositive(config.c, "feature width c");
  RequireDivisible(config.height, config.patch, "image height vs patch");
  RequireDivisible(config.width, config.patch, "image width vs patch");
}

void ValidateAudioEncoder(const AudioEncoderConfig& config) {
  RequirePositive(config.freq_bins, "audio frequency bins");
  RequirePositive(config.frames, "audio frames");
  RequirePositive(config.freq_bands, "audio frequency bands");
  RequirePositive(config.temporal_patch, "audio temporal patch");
  RequirePositive(config.hidden, "audio encoder hidden width");
  RequirePositive(config.c, "feature width c");
  RequireDivisible(config.frames, config.temporal_patch,
                   "audio frames vs temporal patch");
  RequireDivisible(config.freq_bins, config.freq_bands,
                   "audio frequency bins vs bands");
}

void AddImageEncoder(ParameterStore& store, const ImageEncoderConfig& config,
                     Rng& rng) {
  ValidateImageEncoder(config);
  const int in = config.patch * config.patch * config.channels;
  diffcore::AddLinear(store, "image_encoder/layer1", in, config.hidden, rng);
  diffcore::AddLinear(store, "image_encoder/layer2", config.hidden, config.c,
                      rng);
}

void AddAudioEncoder(ParameterStore& store, const AudioEncoderConfig& config,
                     Rng& rng) {
  ValidateAudioEncoder(config);
  const int in = config.freq_bands * config.temporal_patch;
  diffcore::AddLinear(store, "audio_encoder/layer1", in, config.hidden, rng);
  diffcore::AddLinear(store, "audio_encoder/layer2", config.hidden, config.c,
                      rng);
}

Tensor PatchifyImage(const Tensor& raw, const ImageEncoderConfig& config) {
  ValidateImageEncoder(config);
  if (raw.shape() != Shape{config.height, config.width, config.channels}) {
    throw Error(ErrorKind::kDimension,
                "image of shape " + raw.ShapeString() + ", expected " +
                    diffcore::ShapeToString(
                        {config.height, config.width, config.channels}));
  }
  const int p = config.patch;
  const int ch = config.channels;
  const int h = config.height / p;
  const int w = config.width / p;
  Tensor out(Shape{h * w, p * p * ch});
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      int k = 0;
      for (int dy = 0; dy < p; ++dy) {
        for (int dx = 0; dx < p; ++dx) {
          for (int c = 0; c < ch; ++c) {
            const size_t src =
                (static_cast<size_t>(i * p + dy) * config.width + j * p + dx) *
                    ch +
                c;
            out(i * w + j, k++) = raw[src];
          }
        }
      }
    }
  }
  return out;
}

Tensor PoolAndPatchifyAudio(const Tensor& raw,
                            const AudioEncoderConfig& config) {
  ValidateAudioEncoder(config);
  if (raw.shape() != Shape{config.freq_bins, config.frames}) {
    throw Error(ErrorKind::kDimension,
                "spectrogram of shape " + raw.ShapeString() + ", expected " +
                    diffcore::ShapeToString({config.freq_bins, config.frames}));
  }
  const int bands = config.freq_bands;
  const int per_band = config.freq_bins / bands;
  Tensor pooled(Shape{bands, config.frames});
  for (int b = 0; b < bands; ++b) {
    for (int t = 0; t < config.frames; ++t) {
      double mx = raw(b * per_band, t);
      for (int f = b * per_band + 1; f < (b + 1) * per_band; ++f) {
        mx = std::max(mx, raw(f, t));
      }
      pooled(b, t) = mx;
    }
  }
  const int p = config.temporal_patch;
  const int steps = config.frames / p;
  Tensor out(Shape{steps, bands * p});
  for (int s = 0; s < steps; ++s) {
    for (int b = 0; b < bands; ++b) {
      for (int u = 0; u < p; ++u) out(s, b * p + u) = pooled(b, s * p + u);
    }
  }
  return out;
}

FeatureGrid EncodeImage(Graph& graph, const ParameterStore& store,
                        const ImageEncoderConfig& config, const Tensor& raw) {
  FeatureGrid grid;
  grid.data = TwoLayer(graph, store, "image_encoder", PatchifyImage(raw, config));
  grid.modality = Modality::kImage;
  grid.h = config.height / config.patch;
  grid.w = config.width / config.patch;
  grid.c = config.c;
  return grid;
}

FeatureGrid EncodeAudio(Graph& graph, const ParameterStore& store,
                        const AudioEncoderConfig& config, const Tensor& raw) {
  FeatureGrid grid;
  grid.data = TwoLayer(graph, store, "audio_encoder",
                       PoolAndPatchifyAudio(raw, config));
  grid.modality = Modality::kAudio;
  grid.t = config.frames / config.temporal_patch;
  grid.c = config.c;
  return grid;
}

void AddMaskTokens(ParameterStore& store, int c, Rng& rng) {
  for (const char* name : {"mask_token/image", "mask_token/audio"}) {
    Tensor token(Shape{c});
    for (double& v : token.flat()) v = Normal(rng, 0.0, 0.02);
    store.Add(name, std::move(token));
  }
}

std::vector<int> SampleMaskedRows(int rows, double ratio, Rng& rng) {
  if (!(ratio >= 0.0) || ratio >= 1.0) {
    throw Error(ErrorKind::kConfig, "mask ratio must lie in [0, 1), got " +
                                        std::to_string(ratio));
  }
  const int count = static_cast<int>(std::floor(ratio * rows));
  std::vector<int> order(static_cast<size_t>(rows));
  std::iota(order.begin(), order.end(), 0);
  for (int i = 0; i < count; ++i) {
    const int j =
        i + static_cast<int>(UniformIndex(rng, static_cast<uint64_t>(rows - i)));
    std::swap(order[i], order[j]);
  }
  order.resize(static_cast<size_t>(count));
  std::sort(order.begin(), order.end());
  return order;
}

FeatureGrid ApplyMaskTokens(Graph& graph, const ParameterStore& store,
                            const FeatureGrid& grid,
                            std::span<const int> rows) {
  if (rows.empty()) return grid;
  Var token = graph.Bind(store, grid.modality == Modality::kImage
                                    ? "mask_token/image"
                                    : "mask_token/audio");
  FeatureGrid out = grid;
  out.data = diffcore::ReplaceRows(grid.data, rows, token);
  return out;
}

}  // namespace jsaloc::encoders
