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

#include "jsaloc/objectives/objectives.h"

#include <cmath>
#include <vector>

#include "jsaloc/diffcore/ops.h"
#include "jsaloc/error.h"

namespace jsaloc::objectives {

using diffcore::Shape;
using diffcore::Tensor;
namespace ops = diffcore;

namespace {

Var AsRows(Var x) {
  if (x.value().rank() == 1) {
    return ops::Reshape(x, Shape{1, static_cast<int>(x.value().size())});
  }
  return x;
}

void RequireSameLength(Var a, Var b, const char* what) {
  if (a.value().size() != b.value().size()) {
    throw Error(ErrorKind::kDimension,
                std::string(what) + ": " + a.value().ShapeString() + " vs " +
                    b.value().ShapeString());
  }
}

Var HingeCosineMean(Var targets, Var off) {
  Var t = ops::NormalizeRowsL2(AsRows(targets));
  Var o = ops::NormalizeRowsL2(AsRows(off));
  if (t.value().cols() != o.value().cols()) {
    throw Error(ErrorKind::kDimension,
                "divergence: slot widths " + t.value().ShapeString() +
                    " vs " + o.value().ShapeString());
  }
  Var cos = ops::MatMul(t, ops::Transpose(o));
  const double pairs = static_cast<double>(cos.value().size());
  return ops::Scale(ops::Sum(ops::Relu(cos)), 1.0 / pairs);
}

}  // namespace

Var ContrastiveLoss(Var image_targets, Var audio_targets, double temperature,
                    std::span<const uint8_t> negative_mask) {
  if (!(temperature > 0.0)) {
    throw Error(ErrorKind::kConfig, "temperature must be positive, got " +
                                        std::to_string(temperature));
  }
  const Tensor& pv = image_targets.value();
  const Tensor& pa = audio_targets.value();
  if (pv.rank() != 2 || !pv.SameShape(pa)) {
    throw Error(ErrorKind::kDimension, "contrastive: target slots " +
                                           pv.ShapeString() + " vs " +
                                           pa.ShapeString());
  }
  const int batch = pv.rows();
  if (negative_mask.size() != static_cast<size_t>(batch) * batch) {
    throw Error(ErrorKind::kDimension,
                "contrastive: mask of " + std::to_string(negative_mask.size()) +
                    " entries for batch " + std::to_string(batch));
  }
  for (int i = 0; i < batch; ++i) {
    if (!negative_mask[static_cast<size_t>(i) * batch + i]) {
      throw Error(ErrorKind::kContract,
                  "contrastive: positive pair " + std::to_string(i) +
                      " is masked out");
    }
  }
  Var logits = ops::Scale(
      ops::MatMul(ops::NormalizeRowsL2(image_targets),
                  ops::Transpose(ops::NormalizeRowsL2(audio_targets))),
      1.0 / temperature);
  Var rows = ops::Sum(ops::MaskedLogSumExpRows(logits, negative_mask));
  Var cols = ops::Sum(
      ops::MaskedLogSumExpRows(ops::Transpose(logits), negative_mask));
  Var positives = ops::Sum(ops::Diagonal(logits));
  const Var terms[] = {rows, cols, positives};
  const double inv = 1.0 / batch;
  const double weights[] = {inv, inv, -2.0 * inv};
  return ops::WeightedSum(terms, weights);
}

Var ContrastiveLoss(Var image_targets, Var audio_targets, double temperature) {
  const int batch = image_targets.value().rows();
  std::vector<uint8_t> mask(static_cast<size_t>(batch) * batch, 1);
  return ContrastiveLoss(image_targets, audio_targets, temperature, mask);
}

Var AttentionMatchingLoss(Var ca_av, Var ia_vv, Var ca_va, Var ia_aa) {
  RequireSameLength(ca_av, ia_vv, "matching (image)");
  RequireSameLength(ca_va, ia_aa, "matching (audio)");
  Graph& g = *ca_av.graph();
  Var image = ops::SumSquares(ops::Sub(ca_av, g.StopGradient(ia_vv)));
  Var audio = ops::SumSquares(ops::Sub(ca_va, g.StopGradient(ia_aa)));
  return ops::Add(image, audio);
}

Var DivergenceLoss(Var image_targets, Var image_off, Var audio_targets,
                   Var audio_off) {
  return ops::Add(HingeCosineMean(image_targets, image_off),
                  HingeCosineMean(audio_targets, audio_off));
}

void AddDecoder(ParameterStore& store, const std::string& prefix,
                const DecoderConfig& config, Rng& rng) {
  if (config.positions < 1 || config.d < 1 || config.c < 1 ||
      config.hidden < 1) {
    throw Error(ErrorKind::kConfig, "decoder sizes must be positive");
  }
  Tensor positions(Shape{config.positions, config.d});
  const double scale = 1.0 / std::sqrt(static_cast<double>(config.d));
  for (double& v : positions.flat()) v = Normal(rng, 0.0, scale);
  store.Add(prefix + "/positions", std::move(positions));
  ops::AddLinear(store, prefix + "/layer1", config.d, config.hidden, rng);
  ops::AddLinear(store, prefix + "/layer2", config.hidden, config.hidden, rng);
  ops::AddLinear(store, prefix + "/layer3", config.hidden, config.c + 1, rng);
}

std::string DecoderPrefix(Modality modality) {
  return std::string("decoder/") + encoders::ModalityName(modality);
}

DecoderParams BindDecoder(Graph& graph, const ParameterStore& store,
                          const std::string& prefix) {
  return {graph.Bind(store, prefix + "/positions"),
          ops::BindLinear(graph, store, prefix + "/layer1"),
          ops::BindLinear(graph, store, prefix + "/layer2"),
          ops::BindLinear(graph, store, prefix + "/layer3")};
}

Decoded DecodeSlots(Var slots, const DecoderParams& p) {
  const int n_slots = slots.value().rows();
  const int n_pos = p.positions.value().rows();
  const int c = p.layer3.weight.value().cols() - 1;
  if (slots.value().cols() != p.positions.value().cols()) {
    throw Error(ErrorKind::kDimension,
                "decoder: slots " + slots.value().ShapeString() +
                    " vs positional embedding " +
                    p.positions.value().ShapeString());
  }
  // layer1(slot + pos) = pos W + (slot W + b)
  Var pos_hidden = ops::MatMul(p.positions, p.layer1.weight);
  Var slot_hidden = ops::Linear(slots, p.layer1);
  std::vector<Var> broadcast;
  broadcast.reserve(static_cast<size_t>(n_slots));
  for (int s = 0; s < n_slots; ++s) {
    broadcast.push_back(ops::AddRow(pos_hidden, ops::Row(slot_hidden, s)));
  }
  Var h = ops::Relu(ops::ConcatRows(broadcast));
  h = ops::Relu(ops::Linear(h, p.layer2));
  Var out = ops::Linear(h, p.layer3);

  std::vector<Var> contents;
  std::vector<Var> logits;
  for (int s = 0; s < n_slots; ++s) {
    Var block = ops::SliceRows(out, s * n_pos, n_pos);
    contents.push_back(ops::SliceColumns(block, 0, c));
    logits.push_back(ops::SliceColumns(block, c, 1));
  }
  Var alpha = ops::SoftmaxRows(ops::ConcatColumns(logits));
  Var features = ops::ScaleRows(contents[0], ops::Column(alpha, 0));
  for (int s = 1; s < n_slots; ++s) {
    features =
        ops::Add(features, ops::ScaleRows(contents[s], ops::Column(alpha, s)));
  }
  return {features, alpha};
}

Var ReconstructionError(const FeatureGrid& grid, Var slots,
                        const DecoderParams& p) {
  Decoded decoded = DecodeSlots(slots, p);
  if (!decoded.features.value().SameShape(grid.data.value())) {
    throw Error(ErrorKind::kDimension,
                std::string("reconstruction (") +
                    encoders::ModalityName(grid.modality) + "): decoded " +
                    decoded.features.value().ShapeString() + " vs features " +
                    grid.data.value().ShapeString());
  }
  return ops::SumSquares(ops::Sub(grid.data, decoded.features));
}

Var ReconstructionLoss(const FeatureGrid& image, const FeatureGrid& audio,
                       Var image_slots, Var audio_slots,
                       const DecoderParams& image_decoder,
                       const DecoderParams& audio_decoder) {
  return ops::Add(ReconstructionError(image, image_slots, image_decoder),
                  ReconstructionError(audio, audio_slots, audio_decoder));
}

double ComposeTotal(double cotr, double match, double div, double recon,
                    const LossWeights& weights) {
  double total = 0.0;
  total += 1.0 * cotr;
  total += weights.match * match;
  total += weights.div * div;
  total += weights.recon * recon;
  return total;
}

void CheckFinite(const LossReport& report) {
  const std::pair<const char*, double> parts[] = {{"cotr", report.cotr},
                                                  {"match", report.match},
                                                  {"div", report.div},
                                                  {"recon", report.recon},
                                                  {"total", report.total}};
  for (const auto& [name, value] : parts) {
    if (!std::isfinite(value)) {
      throw Error(ErrorKind::kNumeric, std::string("loss component ") + name +
                                           " is " + std::to_string(value));
    }
  }
}

Var TotalLoss(const LossTerms& terms, const LossWeights& weights,
              double temperature, LossReport* report) {
  LossReport r;
  r.cotr = terms.cotr.value().item();
  r.match = terms.match.value().item();
  r.div = terms.div.value().item();
  r.recon = terms.recon.value().item();
  r.weights = weights;
  r.temperature = temperature;
  r.total = ComposeTotal(r.cotr, r.match, r.div, r.recon, weights);
  CheckFinite(r);
  const Var parts[] = {terms.cotr, terms.match, terms.div, terms.recon};
  const double w[] = {1.0, weights.match, weights.div, weights.recon};
  Var total = ops::WeightedSum(parts, w);
  if (report) *report = r;
  return total;
}

}  // namespace jsaloc::objectives
