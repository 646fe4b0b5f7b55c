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

#include "jsaloc/harness/evaluate.h"

#include <cmath>

#include "jsaloc/diffcore/graph.h"
#include "jsaloc/error.h"
#include "jsaloc/harness/model.h"
#include "jsaloc/harness/parallel.h"

namespace jsaloc::harness {
namespace {

double Cosine(std::span<const double> x, std::span<const double> y) {
  double xy = 0.0, xx = 0.0, yy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    xy += x[i] * y[i];
    xx += x[i] * x[i];
    yy += y[i] * y[i];
  }
  const double denominator = std::sqrt(xx) * std::sqrt(yy);
  return denominator > 0.0 ? xy / denominator : 0.0;
}

// Mean target-slot vector against each off-target slot of S_N.
double TargetOffCosine(const Tensor& slots, const Tensor& target,
                       int n_target) {
  double sum = 0.0;
  const int n_off = slots.rows() - n_target;
  for (int r = n_target; r < slots.rows(); ++r) {
    sum += Cosine(target.flat(), slots.row(r));
  }
  return sum / n_off;
}

evaluation::EvalReport Score(
    std::span<const SampleInference> inferences,
    std::span<const SynthSample> samples, const TrainConfig& config,
    const localization::ThresholdPolicy& policy, bool use_iqr,
    std::vector<evaluation::SampleScore>& scores) {
  scores.assign(samples.size(), {});
  ParallelFor(static_cast<int>(samples.size()), config.threads, [&](int i) {
    const localization::LocalizationMap map =
        Localize(inferences[i], config, policy, use_iqr);
    const evaluation::MaskScores s =
        evaluation::MaskIouFscore(map.mask, samples[i].gt_mask);
    scores[i] = {samples[i].id, s.iou, s.fscore};
  });
  evaluation::EvalReport report;
  report.iqr = use_iqr;
  evaluation::FillLocalization(scores, report);
  return report;
}

}  // namespace

SampleInference Infer(const diffcore::ParameterStore& store,
                      const TrainConfig& config, const SynthSample& sample) {
  Graph graph;
  const SampleForward f =
      ForwardSample(graph, store, config, sample, SampleMasks{}, false);
  SampleInference out;
  out.id = sample.id;
  out.ca = Tensor(diffcore::Shape{config.h, config.w}, f.ca_av.value().values());
  out.ia = Tensor(diffcore::Shape{config.h, config.w}, f.ia_vv.value().values());
  out.image_target = f.image_target.value();
  out.audio_target = f.audio_target.value();
  out.image_target_off_cosine = TargetOffCosine(
      f.jsa.image.bundle.slots.value(), out.image_target, config.n_target);
  out.audio_target_off_cosine = TargetOffCosine(
      f.jsa.audio.bundle.slots.value(), out.audio_target, config.n_target);
  return out;
}

localization::LocalizationMap Localize(
    const SampleInference& inference, const TrainConfig& config,
    const localization::ThresholdPolicy& policy, bool use_iqr) {
  Tensor heat = inference.ca;
  double alpha = 1.0;
  if (use_iqr) {
    alpha = config.alpha;
    const std::vector<double> refined = localization::RefineIqr(
        inference.ca.flat(), inference.ia.flat(), alpha);
    heat = Tensor(diffcore::Shape{config.h, config.w}, refined);
  }
  localization::LocalizationMap map = localization::UpsampleAndThreshold(
      heat, config.image_height(), config.image_width(), policy);
  map.alpha = alpha;
  return map;
}

EvalOptions DefaultEvalOptions(const TrainConfig& config) {
  EvalOptions options;
  options.policy = localization::ThresholdPolicy::MeanPlusStd(
      config.threshold_k);
  return options;
}

EvalResult Evaluate(const diffcore::ParameterStore& store,
                    const TrainConfig& config,
                    std::span<const SynthSample> samples,
                    const EvalOptions& options) {
  if (samples.empty()) {
    throw Error(ErrorKind::kDegenerateInput, "evaluation over no samples");
  }
  const int n = static_cast<int>(samples.size());
  std::vector<SampleInference> inferences(samples.size());
  ParallelFor(n, config.threads,
              [&](int i) { inferences[i] = Infer(store, config, samples[i]); });

  EvalResult result;
  result.plain = Score(inferences, samples, config, options.policy, false,
                       result.plain_scores);
  if (options.with_iqr) {
    result.refined = Score(inferences, samples, config, options.policy, true,
                           result.refined_scores);
  }

  Tensor image_targets(diffcore::Shape{n, config.d});
  Tensor audio_targets(diffcore::Shape{n, config.d});
  std::vector<int> labels;
  double cosine = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < config.d; ++j) {
      image_targets(i, j) = inferences[i].image_target[j];
      audio_targets(i, j) = inferences[i].audio_target[j];
    }
    labels.push_back(samples[i].category);
    cosine += 0.5 * (inferences[i].image_target_off_cosine +
                     inferences[i].audio_target_off_cosine);
  }
  result.target_off_cosine = cosine / n;
  std::vector<int> ks;
  for (int k : options.recall_ks) {
    if (k >= 1 && k <= n) ks.push_back(k);
  }
  result.plain.recall =
      evaluation::RetrievalRecall(image_targets, audio_targets, labels, ks);
  if (result.refined) result.refined->recall = result.plain.recall;
  return result;
}

}  // namespace jsaloc::harness
