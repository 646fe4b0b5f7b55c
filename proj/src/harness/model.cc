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

#include "jsaloc/harness/model.h"

#include "jsaloc/diffcore/ops.h"
#include "jsaloc/encoders/encoders.h"
#include "jsaloc/error.h"
#include "jsaloc/localization/localization.h"
#include "jsaloc/objectives/objectives.h"

namespace jsaloc::harness {

using encoders::Modality;
namespace ops = diffcore;

namespace {

Var MeanTarget(const jsa::SlotBundle& bundle) {
  if (bundle.n_target == 1) return ops::Row(bundle.slots, 0);
  Var sum = ops::Row(bundle.slots, 0);
  for (int r = 1; r < bundle.n_target; ++r) {
    sum = ops::Add(sum, ops::Row(bundle.slots, r));
  }
  return ops::Scale(sum, 1.0 / bundle.n_target);
}

}  // namespace

ParameterStore InitializeModel(const TrainConfig& config) {
  Validate(config);
  Rng rng(DeriveSeed(config.seed, 1));
  ParameterStore store;
  encoders::AddImageEncoder(store, config.image_encoder(), rng);
  encoders::AddAudioEncoder(store, config.audio_encoder(), rng);
  encoders::AddMaskTokens(store, config.c, rng);
  const jsa::SlotConfig slots = config.slots();
  jsa::AddInitialSlots(store, slots, rng);
  jsa::AddSlotAttention(store, jsa::SlotAttentionPrefix(Modality::kImage),
                        slots, rng);
  jsa::AddSlotAttention(store, jsa::SlotAttentionPrefix(Modality::kAudio),
                        slots, rng);
  objectives::AddDecoder(store, objectives::DecoderPrefix(Modality::kImage),
                         config.image_decoder(), rng);
  objectives::AddDecoder(store, objectives::DecoderPrefix(Modality::kAudio),
                         config.audio_decoder(), rng);
  return store;
}

void CheckSampleShapes(const TrainConfig& config, const SynthSample& sample) {
  const diffcore::Shape image = {config.image_height(), config.image_width(),
                                 config.image_channels};
  const diffcore::Shape audio = {config.audio_freq_bins,
                                 config.audio_frames()};
  if (sample.image.shape() != image || sample.audio.shape() != audio) {
    throw Error(ErrorKind::kDimension,
                "sample " + std::to_string(sample.id) + ": image " +
                    sample.image.ShapeString() + " and audio " +
                    sample.audio.ShapeString() + " do not match the config (" +
                    diffcore::ShapeToString(image) + ", " +
                    diffcore::ShapeToString(audio) + ")");
  }
}

SampleMasks DrawMasks(const TrainConfig& config, Rng& rng) {
  SampleMasks m;
  m.image_rows =
      encoders::SampleMaskedRows(config.h * config.w, config.mask_ratio, rng);
  m.audio_rows = encoders::SampleMaskedRows(config.t, config.mask_ratio, rng);
  return m;
}

SampleForward ForwardSample(Graph& graph, const ParameterStore& store,
                            const TrainConfig& config,
                            const SynthSample& sample,
                            const SampleMasks& masks, bool with_losses,
                            const FrozenIntraAttention* frozen) {
  CheckSampleShapes(config, sample);
  SampleForward f;
  f.image = encoders::EncodeImage(graph, store, config.image_encoder(),
                                  sample.image);
  f.audio = encoders::EncodeAudio(graph, store, config.audio_encoder(),
                                  sample.audio);
  const encoders::FeatureGrid image_in =
      encoders::ApplyMaskTokens(graph, store, f.image, masks.image_rows);
  const encoders::FeatureGrid audio_in =
      encoders::ApplyMaskTokens(graph, store, f.audio, masks.audio_rows);
  f.jsa = jsa::RunJsa(graph, store, image_in, audio_in, config.slots());

  const jsa::ModalityTrace& v = f.jsa.image;
  const jsa::ModalityTrace& a = f.jsa.audio;
  f.image_target = MeanTarget(v.bundle);
  f.audio_target = MeanTarget(a.bundle);
  f.ca_av = localization::CrossModalAttention(a.bundle.query, v.kv.keys,
                                              config.n_target);
  f.ia_vv = jsa::TargetColumn(v.final_attention().normalized, config.n_target);
  f.ca_va = localization::CrossModalAttention(v.bundle.query, a.kv.keys,
                                              config.n_target);
  f.ia_aa = jsa::TargetColumn(a.final_attention().normalized, config.n_target);
  if (!with_losses) return f;

  if (frozen != nullptr) {
    f.match = objectives::AttentionMatchingLoss(
        f.ca_av, graph.Constant(frozen->image), f.ca_va,
        graph.Constant(frozen->audio));
  } else {
    f.match = objectives::AttentionMatchingLoss(f.ca_av, f.ia_vv, f.ca_va,
                                                f.ia_aa);
  }
  f.div = objectives::DivergenceLoss(
      v.bundle.target_slots(), v.bundle.off_target_slots(),
      a.bundle.target_slots(), a.bundle.off_target_slots());
  const objectives::DecoderParams dec_v = objectives::BindDecoder(
      graph, store, objectives::DecoderPrefix(Modality::kImage));
  const objectives::DecoderParams dec_a = objectives::BindDecoder(
      graph, store, objectives::DecoderPrefix(Modality::kAudio));
  f.recon = objectives::ReconstructionLoss(f.image, f.audio, v.bundle.slots,
                                           a.bundle.slots, dec_v, dec_a);
  return f;
}

Var SampleLossShare(const SampleForward& forward, const TrainConfig& config,
                    int batch) {
  const Var terms[] = {forward.match, forward.div, forward.recon};
  const double weights[] = {config.lambda1 / batch, config.lambda2 / batch,
                            config.lambda3 / batch};
  return ops::WeightedSum(terms, weights);
}

Var BatchLoss(Graph& graph, const ParameterStore& store,
              const TrainConfig& config,
              std::span<const SynthSample* const> samples,
              std::span<const SampleMasks> masks,
              std::span<const uint8_t> negative_mask,
              objectives::LossReport* report,
              std::span<const FrozenIntraAttention> frozen) {
  const int batch = static_cast<int>(samples.size());
  if (masks.size() != samples.size()) {
    throw Error(ErrorKind::kDimension, "one mask set per sample required");
  }
  if (!frozen.empty() && frozen.size() != samples.size()) {
    throw Error(ErrorKind::kDimension, "one frozen map pair per sample");
  }
  std::vector<Var> targets_v, targets_a, shares;
  double match = 0.0, div = 0.0, recon = 0.0;
  for (int i = 0; i < batch; ++i) {
    const SampleForward f =
        ForwardSample(graph, store, config, *samples[i], masks[i], true,
                      frozen.empty() ? nullptr : &frozen[i]);
    targets_v.push_back(f.image_target);
    targets_a.push_back(f.audio_target);
    shares.push_back(SampleLossShare(f, config, batch));
    match += f.match.value()[0];
    div += f.div.value()[0];
    recon += f.recon.value()[0];
  }
  const Var cotr =
      objectives::ContrastiveLoss(ops::StackRows(targets_v),
                                  ops::StackRows(targets_a), config.tau,
                                  negative_mask);
  std::vector<Var> terms = {cotr};
  terms.insert(terms.end(), shares.begin(), shares.end());
  const std::vector<double> ones(terms.size(), 1.0);
  const Var total = ops::WeightedSum(terms, ones);
  if (report != nullptr) {
    report->cotr = cotr.value()[0];
    report->match = match / batch;
    report->div = div / batch;
    report->recon = recon / batch;
    report->weights = config.weights();
    report->temperature = config.tau;
    report->total = objectives::ComposeTotal(report->cotr, report->match,
                                             report->div, report->recon,
                                             report->weights);
    objectives::CheckFinite(*report);
  }
  return total;
}

}  // namespace jsaloc::harness
