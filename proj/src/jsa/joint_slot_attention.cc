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

#include "jsaloc/jsa/joint_slot_attention.h"

#include <cmath>

#include "jsaloc/diffcore/ops.h"
#include "jsaloc/error.h"

namespace jsaloc::jsa {

using diffcore::Shape;
using diffcore::Tensor;

void ValidateSlotConfig(const SlotConfig& config) {
  if (config.n_target < 1 || config.n_off < 1) {
    throw Error(ErrorKind::kConfig,
                "need at least one target and one off-target slot");
  }
  if (config.d < 2 || config.c < 2) {
    throw Error(ErrorKind::kConfig, "feature and slot widths must be >= 2");
  }
  if (config.iterations < 1) {
    throw Error(ErrorKind::kConfig, "slot attention needs >= 1 iteration");
  }
}

void AddInitialSlots(ParameterStore& store, const SlotConfig& config,
                     Rng& rng) {
  ValidateSlotConfig(config);
  Tensor slots(Shape{config.slots(), config.d});
  for (double& v : slots.flat()) v = Normal(rng);
  store.Add("jsa/initial_slots", std::move(slots));
}

std::string SlotAttentionPrefix(Modality modality) {
  return std::string("jsa/") + encoders::ModalityName(modality);
}

void AddSlotAttention(ParameterStore& store, const std::string& prefix,
                      const SlotConfig& config, Rng& rng) {
  ValidateSlotConfig(config);
  const int c = config.c;
  const int d = config.d;
  diffcore::AddLayerNorm(store, prefix + "/input_norm", c);
  diffcore::AddLinear(store, prefix + "/key", c, d, rng);
  diffcore::AddLinear(store, prefix + "/value", c, d, rng);
  diffcore::AddLayerNorm(store, prefix + "/slot_norm", d);
  diffcore::AddLinear(store, prefix + "/query", d, d, rng);
  diffcore::AddGru(store, prefix + "/gru", d, rng);
  diffcore::AddLayerNorm(store, prefix + "/mlp_norm", d);
  diffcore::AddLinear(store, prefix + "/mlp/hidden", d, config.mlp_hidden(),
                      rng);
  diffcore::AddLinear(store, prefix + "/mlp/out", config.mlp_hidden(), d, rng);
}

SlotAttentionParams BindSlotAttention(Graph& graph,
                                      const ParameterStore& store,
                                      const std::string& prefix) {
  using diffcore::BindLayerNorm;
  using diffcore::BindLinear;
  return {BindLayerNorm(graph, store, prefix + "/input_norm"),
          BindLinear(graph, store, prefix + "/key"),
          BindLinear(graph, store, prefix + "/value"),
          BindLayerNorm(graph, store, prefix + "/slot_norm"),
          BindLinear(graph, store, prefix + "/query"),
          diffcore::BindGru(graph, store, prefix + "/gru"),
          BindLayerNorm(graph, store, prefix + "/mlp_norm"),
          BindLinear(graph, store, prefix + "/mlp/hidden"),
          BindLinear(graph, store, prefix + "/mlp/out")};
}

KeyValue ProjectKeyValue(const FeatureGrid& grid,
                         const SlotAttentionParams& p) {
  const int expected = p.key.weight.value().rows();
  if (grid.data.value().cols() != expected) {
    throw Error(ErrorKind::kDimension,
                "features " + grid.data.value().ShapeString() +
                    " do not match projection input width " +
                    std::to_string(expected));
  }
  Var normed = diffcore::ApplyLayerNorm(grid.data, p.input_norm);
  return {diffcore::Linear(normed, p.key), diffcore::Linear(normed, p.value)};
}

Var ComputeQueries(Var slots, const SlotAttentionParams& p) {
  return diffcore::Linear(diffcore::ApplyLayerNorm(slots, p.slot_norm),
                          p.query);
}

AttentionMaps ComputeAttention(Var keys, Var queries) {
  const int d = keys.value().cols();
  if (queries.value().cols() != d) {
    throw Error(ErrorKind::kDimension,
                "keys " + keys.value().ShapeString() + " vs queries " +
                    queries.value().ShapeString());
  }
  Var logits = diffcore::Scale(diffcore::MatMul(keys, diffcore::Transpose(queries)),
                               1.0 / std::sqrt(static_cast<double>(d)));
  Var raw = diffcore::SoftmaxRows(logits);
  return {raw, diffcore::NormalizeColumns(raw)};
}

Var TargetColumn(Var normalized, int n_target) {
  if (n_target == 1) return diffcore::Column(normalized, 0);
  return diffcore::RowMaxOverColumns(normalized, 0, n_target);
}

StepResult AttentionStep(Var previous_slots, const KeyValue& kv,
                         const SlotAttentionParams& p) {
  Var query = ComputeQueries(previous_slots, p);
  AttentionMaps attention = ComputeAttention(kv.keys, query);
  Var updates =
      diffcore::MatMul(diffcore::Transpose(attention.normalized), kv.values);
  Var gated = diffcore::GruCell(previous_slots, updates, p.gru);
  Var mlp = diffcore::Linear(
      diffcore::Relu(diffcore::Linear(
          diffcore::ApplyLayerNorm(gated, p.mlp_norm), p.mlp_hidden)),
      p.mlp_out);
  return {diffcore::Add(gated, mlp), query, attention};
}

Var SlotBundle::target_slots() const {
  return diffcore::SliceRows(slots, 0, n_target);
}

Var SlotBundle::off_target_slots() const {
  return diffcore::SliceRows(slots, n_target,
                             slots.value().rows() - n_target);
}

ModalityTrace RunSlotAttention(Var initial_slots, const FeatureGrid& grid,
                               const SlotAttentionParams& p,
                               const SlotConfig& config) {
  ValidateSlotConfig(config);
  if (initial_slots.value().rows() != config.slots() ||
      initial_slots.value().cols() != config.d) {
    throw Error(ErrorKind::kDimension,
                "initial slots " + initial_slots.value().ShapeString() +
                    " do not match the slot configuration");
  }
  ModalityTrace trace;
  trace.kv = ProjectKeyValue(grid, p);
  Var slots = initial_slots;
  Var query;
  for (int n = 0; n < config.iterations; ++n) {
    StepResult step = AttentionStep(slots, trace.kv, p);
    slots = step.slots;
    query = step.query;
    trace.iterations.push_back(step.attention);
  }
  trace.bundle = SlotBundle{slots, query, grid.modality, config.n_target};
  return trace;
}

JsaOutput RunJsa(Graph& graph, const ParameterStore& store,
                 const FeatureGrid& image, const FeatureGrid& audio,
                 const SlotConfig& config) {
  if (image.c != audio.c) {
    throw Error(ErrorKind::kDimension,
                "image and audio feature widths differ: " +
                    std::to_string(image.c) + " vs " + std::to_string(audio.c));
  }
  Var initial = graph.Bind(store, "jsa/initial_slots");
  JsaOutput out;
  out.image = RunSlotAttention(
      initial, image,
      BindSlotAttention(graph, store, SlotAttentionPrefix(Modality::kImage)),
      config);
  out.audio = RunSlotAttention(
      initial, audio,
      BindSlotAttention(graph, store, SlotAttentionPrefix(Modality::kAudio)),
      config);
  return out;
}

}  // namespace jsaloc::jsa
