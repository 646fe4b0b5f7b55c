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

#ifndef JSALOC_HARNESS_MODEL_H_
#define JSALOC_HARNESS_MODEL_H_

#include <vector>

#include "jsaloc/diffcore/graph.h"
#include "jsaloc/diffcore/parameter.h"
#include "jsaloc/harness/config.h"
#include "jsaloc/jsa/joint_slot_attention.h"
#include "jsaloc/random.h"
#include "jsaloc/synthbench/synthbench.h"

namespace jsaloc::harness {

using diffcore::Graph;
using diffcore::ParameterStore;
using diffcore::Tensor;
using diffcore::Var;
using synthbench::SynthSample;

// Encoders, mask tokens, shared initial slots, per-modality slot attention
// and decoders, drawn in that order from a stream derived from the seed.
ParameterStore InitializeModel(const TrainConfig& config);

// Rejects samples whose raw shapes do not match the configured encoders.
void CheckSampleShapes(const TrainConfig& config, const SynthSample& sample);

struct SampleMasks {
  std::vector<int> image_rows;
  std::vector<int> audio_rows;
};

SampleMasks DrawMasks(const TrainConfig& config, Rng& rng);

struct SampleForward {
  encoders::FeatureGrid image;  // unmasked encodings
  encoders::FeatureGrid audio;
  jsa::JsaOutput jsa;
  Var image_target;  // [d], mean of the target slots
  Var audio_target;
  Var ca_av;  // audio target query against image keys, [h*w]
  Var ia_vv;  // image target query against image keys, [h*w]
  Var ca_va;  // image target query against audio keys, [t]
  Var ia_aa;
  // Per-sample loss terms; invalid unless requested.
  Var match;
  Var div;
  Var recon;
};

// Intra-modal maps held at fixed values. The matching loss never
// differentiates through them, so a finite-difference check of the objective
// must hold them at the unperturbed point.
struct FrozenIntraAttention {
  Tensor image;  // ia_vv
  Tensor audio;  // ia_aa
};

SampleForward ForwardSample(Graph& graph, const ParameterStore& store,
                            const TrainConfig& config,
                            const SynthSample& sample,
                            const SampleMasks& masks, bool with_losses,
                            const FrozenIntraAttention* frozen = nullptr);

// lambda1 * match + lambda2 * div + lambda3 * recon of one sample, scaled by
// 1 / batch.
Var SampleLossShare(const SampleForward& forward, const TrainConfig& config,
                    int batch);

// The whole objective of a batch in one graph. Used as the reference for the
// sharded trainer and by the finite-difference suite.
Var BatchLoss(Graph& graph, const ParameterStore& store,
              const TrainConfig& config,
              std::span<const SynthSample* const> samples,
              std::span<const SampleMasks> masks,
              std::span<const uint8_t> negative_mask,
              objectives::LossReport* report,
              std::span<const FrozenIntraAttention> frozen = {});

}  // namespace jsaloc::harness

#endif  // JSALOC_HARNESS_MODEL_H_
