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

#ifndef JSALOC_HARNESS_EVALUATE_H_
#define JSALOC_HARNESS_EVALUATE_H_

#include <optional>
#include <span>
#include <vector>

#include "jsaloc/diffcore/parameter.h"
#include "jsaloc/evaluation/evaluation.h"
#include "jsaloc/harness/config.h"
#include "jsaloc/localization/localization.h"
#include "jsaloc/synthbench/synthbench.h"

namespace jsaloc::harness {

using diffcore::Tensor;
using synthbench::SynthSample;

// Unmasked inference outputs of one sample, detached from any graph.
struct SampleInference {
  int id = 0;
  Tensor ca;  // [h x w] audio query against image keys
  Tensor ia;  // [h x w] image query against image keys
  Tensor image_target;  // [d]
  Tensor audio_target;  // [d]
  // cos(target, off-target) per modality, averaged over off-target slots.
  double image_target_off_cosine = 0.0;
  double audio_target_off_cosine = 0.0;
};

SampleInference Infer(const diffcore::ParameterStore& store,
                      const TrainConfig& config, const SynthSample& sample);

// Heat map (ca, or the IQR blend with alpha from the config), upsampled to
// the image and thresholded by `policy`.
localization::LocalizationMap Localize(
    const SampleInference& inference, const TrainConfig& config,
    const localization::ThresholdPolicy& policy, bool use_iqr);

struct EvalOptions {
  localization::ThresholdPolicy policy;
  bool with_iqr = false;  // also report the IQR-refined localization
  std::vector<int> recall_ks = {1, 5, 10};
};

EvalOptions DefaultEvalOptions(const TrainConfig& config);

struct EvalResult {
  evaluation::EvalReport plain;
  std::optional<evaluation::EvalReport> refined;
  std::vector<evaluation::SampleScore> plain_scores;
  std::vector<evaluation::SampleScore> refined_scores;
  // Mean over samples and modalities.
  double target_off_cosine = 0.0;
};

// Inference is sharded over config.threads; Ks larger than the sample count
// are dropped.
EvalResult Evaluate(const diffcore::ParameterStore& store,
                    const TrainConfig& config,
                    std::span<const SynthSample> samples,
                    const EvalOptions& options);

}  // namespace jsaloc::harness

#endif  // JSALOC_HARNESS_EVALUATE_H_
