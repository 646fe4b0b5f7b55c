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

#ifndef JSALOC_JSA_JOINT_SLOT_ATTENTION_H_
#define JSALOC_JSA_JOINT_SLOT_ATTENTION_H_

#include <string>
#include <vector>

#include "jsaloc/diffcore/graph.h"
#include "jsaloc/diffcore/layers.h"
#include "jsaloc/diffcore/parameter.h"
#include "jsaloc/encoders/encoders.h"
#include "jsaloc/random.h"

namespace jsaloc::jsa {

using diffcore::Graph;
using diffcore::ParameterStore;
using diffcore::Var;
using encoders::FeatureGrid;
using encoders::Modality;

struct SlotConfig {
  int n_target = 1;
  int n_off = 1;
  int c = 32;  // input feature width
  int d = 32;  // slot width
  int iterations = 5;

  int slots() const { return n_target + n_off; }
  int mlp_hidden() const { return 2 * d; }
};

void ValidateSlotConfig(const SlotConfig& config);

// "jsa/initial_slots", [slots x d], shared by both modalities.
void AddInitialSlots(ParameterStore& store, const SlotConfig& config,
                     Rng& rng);
// Per-modality projections, GRU and MLP under `prefix` ("jsa/image" or
// "jsa/audio").
void AddSlotAttention(ParameterStore& store, const std::string& prefix,
                      const SlotConfig& config, Rng& rng);
std::string SlotAttentionPrefix(Modality modality);

struct SlotAttentionParams {
  diffcore::LayerNormParams input_norm;
  diffcore::LinearParams key;
  diffcore::LinearParams value;
  diffcore::LayerNormParams slot_norm;
  diffcore::LinearParams query;
  diffcore::GruParams gru;
  diffcore::LayerNormParams mlp_norm;
  diffcore::LinearParams mlp_hidden;
  diffcore::LinearParams mlp_out;
};
SlotAttentionParams BindSlotAttention(Graph& graph,
                                      const ParameterStore& store,
                                      const std::string& prefix);

struct KeyValue {
  Var keys;    // [rows x d]
  Var values;  // [rows x d]
};
// K = W^k(LayerNorm(features)), V = W^v(LayerNorm(features)).
KeyValue ProjectKeyValue(const FeatureGrid& grid, const SlotAttentionParams& p);

// Q = W^q(LayerNorm(slots)).
Var ComputeQueries(Var slots, const SlotAttentionParams& p);

struct AttentionMaps {
  Var raw;         // A: [rows x slots], softmax over slots for every key
  Var normalized;  // A_hat: A with every slot column divided by its sum
};
// M = K Q^T / sqrt(d); A = softmax over slots; A_hat = column-normalized A.
AttentionMaps ComputeAttention(Var keys, Var queries);

// Attention column of the target slots: the first column when there is one
// target slot, the element-wise maximum over target columns otherwise.
Var TargetColumn(Var normalized, int n_target);

struct StepResult {
  Var slots;  // S_n
  Var query;  // Q_n, computed from S_{n-1}
  AttentionMaps attention;
};
// One refinement: queries from the previous slots, attention, weighted-mean
// updates A_hat^T V, GRU, then a residual MLP on the layer-normed state.
StepResult AttentionStep(Var previous_slots, const KeyValue& kv,
                         const SlotAttentionParams& p);

struct SlotBundle {
  Var slots;  // S_N; first n_target rows are target slots
  Var query;  // Q_N
  Modality modality = Modality::kImage;
  int n_target = 1;

  Var target_slots() const;      // [n_target x d]
  Var off_target_slots() const;  // [n_off x d]
};

struct ModalityTrace {
  SlotBundle bundle;
  KeyValue kv;
  std::vector<AttentionMaps> iterations;  // one entry per step

  // Intra-modal attention from the final query: the last step's maps.
  const AttentionMaps& final_attention() const { return iterations.back(); }
};

ModalityTrace RunSlotAttention(Var initial_slots, const FeatureGrid& grid,
                               const SlotAttentionParams& p,
                               const SlotConfig& config);

struct JsaOutput {
  ModalityTrace image;
  ModalityTrace audio;
};

// Runs both modalities from the shared initial slots.
JsaOutput RunJsa(Graph& graph, const ParameterStore& store,
                 const FeatureGrid& image, const FeatureGrid& audio,
                 const SlotConfig& config);

}  // namespace jsaloc::jsa

#endif  // JSALOC_JSA_JOINT_SLOT_ATTENTION_H_
