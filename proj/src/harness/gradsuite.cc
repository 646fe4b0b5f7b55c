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

#include "jsaloc/harness/gradsuite.h"

#include <span>

#include "jsaloc/diffcore/gradcheck.h"
#include "jsaloc/diffcore/layers.h"
#include "jsaloc/diffcore/ops.h"
#include "jsaloc/encoders/encoders.h"
#include "jsaloc/fnmitigation/fnmitigation.h"
#include "jsaloc/harness/model.h"
#include "jsaloc/jsa/joint_slot_attention.h"
#include "jsaloc/localization/localization.h"
#include "jsaloc/objectives/objectives.h"
#include "jsaloc/synthbench/synthbench.h"

namespace jsaloc::harness {
namespace {

using namespace diffcore;  // NOLINT: the suite exercises the whole op set
using encoders::FeatureGrid;
using encoders::Modality;

using Inputs = std::span<const Var>;

GradSuiteRow ToRow(const std::string& name, const GradCheckResult& r) {
  return {name, r.max_relative_error, r.max_absolute_error, r.entries_checked,
          r.nonsmooth_entries, r.worst_entry};
}

struct InputCase {
  const char* name;
  InputFn fn;
  std::vector<Tensor> inputs;
};

std::vector<InputCase> PrimitiveCases(Rng& rng) {
  std::vector<uint8_t> mask(16, 1);
  mask[1] = mask[6] = mask[11] = 0;
  const std::vector<int> rows = {1, 3};
  return {
      {"matmul",
       [](Graph&, Inputs in) {
         return RandomContraction(MatMul(in[0], in[1]), 1);
       },
       {UniformTensor({4, 3}, rng), UniformTensor({3, 2}, rng)}},
      {"transpose",
       [](Graph&, Inputs in) { return RandomContraction(Transpose(in[0]), 2); },
       {UniformTensor({3, 5}, rng)}},
      {"add_sub_mul_scale",
       [](Graph&, Inputs in) {
         return RandomContraction(
             Sub(Add(Mul(in[0], in[1]), Scale(in[0], 0.3)), in[1]), 3);
       },
       {UniformTensor({3, 3}, rng), UniformTensor({3, 3}, rng)}},
      {"add_row_scale_rows",
       [](Graph&, Inputs in) {
         return RandomContraction(ScaleRows(AddRow(in[0], in[1]), in[2]), 4);
       },
       {UniformTensor({4, 3}, rng), UniformTensor({3}, rng),
        UniformTensor({4}, rng)}},
      {"relu",
       [](Graph&, Inputs in) { return RandomContraction(Relu(in[0]), 5); },
       {Tensor::FromRows({{0.5, -0.7, 1.3}, {-0.2, 0.9, -1.1}})}},
      {"sigmoid",
       [](Graph&, Inputs in) { return RandomContraction(Sigmoid(in[0]), 6); },
       {UniformTensor({3, 4}, rng, -3, 3)}},
      {"tanh",
       [](Graph&, Inputs in) { return RandomContraction(Tanh(in[0]), 7); },
       {UniformTensor({3, 4}, rng, -3, 3)}},
      {"softmax_rows",
       [](Graph&, Inputs in) {
         return RandomContraction(SoftmaxRows(in[0]), 8);
       },
       {UniformTensor({5, 3}, rng, -3, 3)}},
      {"normalize_columns",
       [](Graph&, Inputs in) {
         return RandomContraction(NormalizeColumns(in[0]), 9);
       },
       {UniformTensor({6, 2}, rng, 0.1, 1.0)}},
      {"layer_norm",
       [](Graph&, Inputs in) {
         return RandomContraction(LayerNorm(in[0], in[1], in[2]), 10);
       },
       {UniformTensor({4, 6}, rng), UniformTensor({6}, rng),
        UniformTensor({6}, rng)}},
      {"sum_sum_squares_weighted_sum",
       [](Graph&, Inputs in) {
         const Var terms[] = {Sum(in[0]), SumSquares(in[0])};
         const double w[] = {0.7, -1.3};
         return WeightedSum(terms, w);
       },
       {UniformTensor({2, 3}, rng)}},
      {"slices_concat_stack_reshape",
       [](Graph&, Inputs in) {
         const Var cols[] = {SliceColumns(in[0], 1, 2), in[0]};
         const Var wide = ConcatColumns(cols);
         const Var parts[] = {SliceRows(wide, 0, 2), wide};
         const Var stacked[] = {Row(in[0], 1), Column(in[0], 2)};
         return Add(RandomContraction(ConcatRows(parts), 11),
                    Add(RandomContraction(StackRows(stacked), 12),
                        RandomContraction(Reshape(in[0], Shape{9}), 13)));
       },
       {UniformTensor({3, 3}, rng)}},
      {"diagonal",
       [](Graph&, Inputs in) { return RandomContraction(Diagonal(in[0]), 14); },
       {UniformTensor({4, 4}, rng)}},
      {"replace_rows",
       [rows](Graph&, Inputs in) {
         return RandomContraction(ReplaceRows(in[0], rows, in[1]), 15);
       },
       {UniformTensor({4, 3}, rng), UniformTensor({3}, rng)}},
      {"cosine_sim",
       [](Graph&, Inputs in) { return CosineSim(in[0], in[1]); },
       {UniformTensor({8}, rng), UniformTensor({8}, rng)}},
      {"normalize_rows_l2",
       [](Graph&, Inputs in) {
         return RandomContraction(NormalizeRowsL2(in[0]), 16);
       },
       {UniformTensor({3, 5}, rng)}},
      {"masked_logsumexp_rows",
       [mask](Graph&, Inputs in) {
         return RandomContraction(MaskedLogSumExpRows(in[0], mask), 17);
       },
       {UniformTensor({4, 4}, rng, -3, 3)}},
      {"row_max_over_columns",
       [](Graph&, Inputs in) {
         return RandomContraction(RowMaxOverColumns(in[0], 0, 3), 18);
       },
       // Well-separated maxima keep the difference away from ties.
       {Tensor::FromRows({{0.1, 0.9, -0.4}, {1.2, -0.3, 0.2}})}},
      {"linear",
       [](Graph&, Inputs in) {
         return RandomContraction(Linear(in[0], {in[1], in[2]}), 19);
       },
       {UniformTensor({3, 4}, rng), UniformTensor({4, 5}, rng),
        UniformTensor({5}, rng)}},
      {"gru_cell",
       [](Graph&, Inputs in) {
         return RandomContraction(
             GruCell(in[0], in[1], {in[2], in[3], in[4], in[5]}), 20);
       },
       {UniformTensor({2, 4}, rng), UniformTensor({2, 4}, rng),
        UniformTensor({4, 12}, rng), UniformTensor({4, 12}, rng),
        UniformTensor({12}, rng), UniformTensor({12}, rng)}},
      {"cross_modal_attention",
       [](Graph&, Inputs in) {
         return RandomContraction(
             localization::CrossModalAttention(in[0], in[1], 1), 21);
       },
       {UniformTensor({2, 6}, rng), UniformTensor({7, 6}, rng)}},
      {"contrastive_loss",
       [](Graph&, Inputs in) {
         return objectives::ContrastiveLoss(in[0], in[1], 0.5);
       },
       {UniformTensor({4, 5}, rng), UniformTensor({4, 5}, rng)}},
      {"contrastive_loss_filtered",
       [](Graph&, Inputs in) {
         std::vector<uint8_t> keep(16, 1);
         keep[1] = keep[4] = keep[14] = 0;
         return objectives::ContrastiveLoss(in[0], in[1], 0.5, keep);
       },
       {UniformTensor({4, 5}, rng), UniformTensor({4, 5}, rng)}},
      {"attention_matching_loss",
       [ia_v = UniformTensor({6}, rng, 0, 1),
        ia_a = UniformTensor({4}, rng, 0, 1)](Graph& g, Inputs in) {
         return objectives::AttentionMatchingLoss(in[0], g.Constant(ia_v),
                                                  in[1], g.Constant(ia_a));
       },
       {UniformTensor({6}, rng, 0, 1), UniformTensor({4}, rng, 0, 1)}},
      {"divergence_loss",
       [](Graph&, Inputs in) {
         return objectives::DivergenceLoss(in[0], in[1], in[2], in[3]);
       },
       // Positive entries keep every cosine clear of the hinge.
       {UniformTensor({1, 5}, rng, 0.1, 1), UniformTensor({2, 5}, rng, 0.1, 1),
        UniformTensor({1, 5}, rng, 0.1, 1),
        UniformTensor({1, 5}, rng, 0.1, 1)}},
  };
}

struct ParameterCase {
  std::string name;
  ParameterStore store;
  ParameterFn fn;
};

std::vector<ParameterCase> ComponentCases(uint64_t seed) {
  Rng rng(seed);
  std::vector<ParameterCase> cases;

  encoders::ImageEncoderConfig image_cfg{8, 8, 1, 4, 6, 5};
  encoders::AudioEncoderConfig audio_cfg{8, 8, 2, 4, 6, 5};
  {
    ParameterCase c{"image_encoder", {}, {}};
    encoders::AddImageEncoder(c.store, image_cfg, rng);
    const Tensor raw = UniformTensor({8, 8, 1}, rng);
    c.fn = [=](Graph& g, const ParameterStore& s) {
      return RandomContraction(
          encoders::EncodeImage(g, s, image_cfg, raw).data, 31);
    };
    cases.push_back(std::move(c));
  }
  {
    ParameterCase c{"audio_encoder", {}, {}};
    encoders::AddAudioEncoder(c.store, audio_cfg, rng);
    // Distinct values keep the band max-pool away from ties.
    Tensor raw({8, 8});
    for (size_t i = 0; i < raw.size(); ++i) {
      raw[i] = 0.05 * static_cast<double>((i * 37) % 64);
    }
    c.fn = [=](Graph& g, const ParameterStore& s) {
      return RandomContraction(
          encoders::EncodeAudio(g, s, audio_cfg, raw).data, 32);
    };
    cases.push_back(std::move(c));
  }
  {
    ParameterCase c{"mask_tokens", {}, {}};
    encoders::AddMaskTokens(c.store, 4, rng);
    const Tensor base = UniformTensor({5, 4}, rng);
    c.fn = [=](Graph& g, const ParameterStore& s) {
      FeatureGrid grid{g.Constant(base), Modality::kAudio, 0, 0, 5, 4};
      const int rows[] = {0, 3};
      return RandomContraction(
          encoders::ApplyMaskTokens(g, s, grid, rows).data, 33);
    };
    cases.push_back(std::move(c));
  }
  {
    ParameterCase c{"joint_slot_attention", {}, {}};
    const jsa::SlotConfig cfg{1, 2, 5, 4, 3};
    jsa::AddInitialSlots(c.store, cfg, rng);
    jsa::AddSlotAttention(c.store, jsa::SlotAttentionPrefix(Modality::kImage),
                          cfg, rng);
    jsa::AddSlotAttention(c.store, jsa::SlotAttentionPrefix(Modality::kAudio),
                          cfg, rng);
    const Tensor image = UniformTensor({9, 5}, rng);
    const Tensor audio = UniformTensor({4, 5}, rng);
    c.fn = [=](Graph& g, const ParameterStore& s) {
      FeatureGrid v{g.Constant(image), Modality::kImage, 3, 3, 0, 5};
      FeatureGrid a{g.Constant(audio), Modality::kAudio, 0, 0, 4, 5};
      const jsa::JsaOutput out = jsa::RunJsa(g, s, v, a, cfg);
      return Add(Add(RandomContraction(out.image.bundle.slots, 34),
                     RandomContraction(out.audio.bundle.slots, 35)),
                 RandomContraction(out.image.final_attention().normalized,
                                   36));
    };
    cases.push_back(std::move(c));
  }
  {
    ParameterCase c{"reconstruction_loss", {}, {}};
    const objectives::DecoderConfig dv{9, 4, 5, 6};
    const objectives::DecoderConfig da{4, 4, 5, 6};
    objectives::AddDecoder(c.store, objectives::DecoderPrefix(Modality::kImage),
                           dv, rng);
    objectives::AddDecoder(c.store, objectives::DecoderPrefix(Modality::kAudio),
                           da, rng);
    const Tensor image = UniformTensor({9, 5}, rng);
    const Tensor audio = UniformTensor({4, 5}, rng);
    const Tensor slots_v = UniformTensor({2, 4}, rng);
    const Tensor slots_a = UniformTensor({2, 4}, rng);
    c.fn = [=](Graph& g, const ParameterStore& s) {
      FeatureGrid v{g.Constant(image), Modality::kImage, 3, 3, 0, 5};
      FeatureGrid a{g.Constant(audio), Modality::kAudio, 0, 0, 4, 5};
      return objectives::ReconstructionLoss(
          v, a, g.Constant(slots_v), g.Constant(slots_a),
          objectives::BindDecoder(g, s,
                                  objectives::DecoderPrefix(Modality::kImage)),
          objectives::BindDecoder(g, s,
                                  objectives::DecoderPrefix(Modality::kAudio)));
    };
    cases.push_back(std::move(c));
  }
  return cases;
}

GradSuiteRow ObjectiveRow(uint64_t seed) {
  TrainConfig config;
  config.seed = seed;
  config.batch = 4;
  config.k = 1;
  ParameterStore store = InitializeModel(config);

  synthbench::SynthConfig synth;
  synth.samples = 8;
  synth.seed = seed;
  const std::vector<synthbench::SynthSample> data = synthbench::Generate(synth);
  std::vector<const synthbench::SynthSample*> batch;
  for (int i = 0; i < config.batch; ++i) batch.push_back(&data[i]);
  Rng rng(DeriveSeed(seed, 3));
  std::vector<SampleMasks> masks;
  for (int i = 0; i < config.batch; ++i) {
    masks.push_back(DrawMasks(config, rng));
  }

  // The false-negative mask is a non-differentiable function of the slots;
  // it is fixed at the unperturbed point.
  Tensor pv({config.batch, config.d}), pa({config.batch, config.d});
  std::vector<FrozenIntraAttention> frozen;
  {
    Graph g;
    for (int i = 0; i < config.batch; ++i) {
      const SampleForward f =
          ForwardSample(g, store, config, *batch[i], masks[i], false);
      for (int j = 0; j < config.d; ++j) {
        pv(i, j) = f.image_target.value()[j];
        pa(i, j) = f.audio_target.value()[j];
      }
      frozen.push_back({f.ia_vv.value(), f.ia_aa.value()});
    }
  }
  const std::vector<uint8_t> negatives =
      fnmitigation::ReciprocalFilter(pv, pa, config.k).negative_mask;

  const GradCheckResult r = CheckParameterGradients(
      [&](Graph& g, const ParameterStore& s) {
        return BatchLoss(g, s, config, batch, masks, negatives, nullptr,
                         frozen);
      },
      store, diffcore::kFiniteDifferenceStep, 2, seed);
  return ToRow("total_objective/seed_" + std::to_string(seed), r);
}

}  // namespace

std::vector<GradSuiteRow> RunObjectiveGradientChecks(uint64_t seed,
                                                     int seeds) {
  std::vector<GradSuiteRow> rows;
  for (int i = 0; i < seeds; ++i) rows.push_back(ObjectiveRow(seed + i));
  return rows;
}

std::vector<GradSuiteRow> RunGradientSuite(uint64_t seed) {
  std::vector<GradSuiteRow> rows;
  Rng rng(seed);
  for (InputCase& c : PrimitiveCases(rng)) {
    rows.push_back(ToRow(c.name, CheckInputGradients(c.fn, c.inputs)));
  }
  for (ParameterCase& c : ComponentCases(DeriveSeed(seed, 1))) {
    rows.push_back(ToRow(c.name, CheckParameterGradients(c.fn, c.store)));
  }
  for (GradSuiteRow& row : RunObjectiveGradientChecks(seed)) {
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace jsaloc::harness
