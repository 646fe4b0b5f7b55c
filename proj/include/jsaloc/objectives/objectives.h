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

#ifndef JSALOC_OBJECTIVES_OBJECTIVES_H_
#define JSALOC_OBJECTIVES_OBJECTIVES_H_

#include <cstdint>
#include <span>
#include <string>

#include "jsaloc/diffcore/graph.h"
#include "jsaloc/diffcore/layers.h"
#include "jsaloc/diffcore/parameter.h"
#include "jsaloc/encoders/encoders.h"
#include "jsaloc/random.h"

namespace jsaloc::objectives {

using diffcore::Graph;
using diffcore::ParameterStore;
using diffcore::Var;
using encoders::FeatureGrid;
using encoders::Modality;

struct LossWeights {
  double match = 100.0;
  double div = 0.1;
  double recon = 0.1;
};

// Symmetric InfoNCE over cosine logits / temperature. `negative_mask` is
// row-major [B x B]; a false entry (i, j) drops pair j from both the i-th
// row denominator and the i-th column denominator. The diagonal must be
// true. Loss is summed over both directions and averaged over the batch.
Var ContrastiveLoss(Var image_targets, Var audio_targets, double temperature,
                    std::span<const uint8_t> negative_mask);
Var ContrastiveLoss(Var image_targets, Var audio_targets, double temperature);

// ||ca_av - sg(ia_vv)||^2 + ||ca_va - sg(ia_aa)||^2.
Var AttentionMatchingLoss(Var ca_av, Var ia_vv, Var ca_va, Var ia_aa);

// Per modality, the mean of max(0, cos(target, off_target)) over all pairs;
// the two modalities are summed. Rank-1 inputs are single slots.
Var DivergenceLoss(Var image_targets, Var image_off, Var audio_targets,
                   Var audio_off);

struct DecoderConfig {
  int positions = 49;  // rows of the feature grid
  int d = 32;          // slot width
  int c = 32;          // feature width
  int hidden = 64;
};

// Spatial-broadcast decoder: every slot plus a learned positional embedding
// goes through a three-layer ReLU MLP to c feature channels and one alpha
// logit; alphas are softmaxed over slots and weight the per-slot features.
void AddDecoder(ParameterStore& store, const std::string& prefix,
                const DecoderConfig& config, Rng& rng);
std::string DecoderPrefix(Modality modality);

struct DecoderParams {
  Var positions;  // [P x d]
  diffcore::LinearParams layer1;
  diffcore::LinearParams layer2;
  diffcore::LinearParams layer3;
};
DecoderParams BindDecoder(Graph& graph, const ParameterStore& store,
                          const std::string& prefix);

struct Decoded {
  Var features;  // [P x c]
  Var alpha;     // [P x slots]
};
Decoded DecodeSlots(Var slots, const DecoderParams& p);

// Squared reconstruction error of one grid.
Var ReconstructionError(const FeatureGrid& grid, Var slots,
                        const DecoderParams& p);
// Image plus audio reconstruction error.
Var ReconstructionLoss(const FeatureGrid& image, const FeatureGrid& audio,
                       Var image_slots, Var audio_slots,
                       const DecoderParams& image_decoder,
                       const DecoderParams& audio_decoder);

struct LossTerms {
  Var cotr;
  Var match;
  Var div;
  Var recon;
};

struct LossReport {
  double cotr = 0.0;
  double match = 0.0;
  double div = 0.0;
  double recon = 0.0;
  double total = 0.0;
  LossWeights weights;
  double temperature = 0.0;
};

// cotr + w.match * match + w.div * div + w.recon * recon, summed in that
// order. Components must be finite; a NaN or infinity names the component.
double ComposeTotal(double cotr, double match, double div, double recon,
                    const LossWeights& weights);
void CheckFinite(const LossReport& report);
Var TotalLoss(const LossTerms& terms, const LossWeights& weights,
              double temperature, LossReport* report);

}  // namespace jsaloc::objectives

#endif  // JSALOC_OBJECTIVES_OBJECTIVES_H_
