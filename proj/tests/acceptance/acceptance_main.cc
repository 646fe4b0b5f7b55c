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

// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when
// every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "jsaloc/diffcore/graph.h"
#include "jsaloc/encoders/encoders.h"
#include "jsaloc/error.h"
#include "jsaloc/evaluation/evaluation.h"
#include "jsaloc/fnmitigation/fnmitigation.h"
#include "jsaloc/harness/config.h"
#include "jsaloc/harness/evaluate.h"
#include "jsaloc/harness/gradsuite.h"
#include "jsaloc/harness/model.h"
#include "jsaloc/harness/trainer.h"
#include "jsaloc/jsa/joint_slot_attention.h"
#include "jsaloc/localization/localization.h"
#include "jsaloc/objectives/objectives.h"
#include "jsaloc/random.h"
#include "jsaloc/synthbench/synthbench.h"
#include "testing/oracles.h"
#include "testing/test_util.h"

namespace jsaloc {
namespace {

using diffcore::Graph;
using diffcore::Shape;
using diffcore::Tensor;
using diffcore::Var;
using harness::TrainConfig;
using testing::RandomTensor;

// Baseline held-out results of the default configuration, less 0.05.
constexpr double kPinnedCiou = 0.84 - 0.05;
constexpr double kPinnedAuc = 0.6145 - 0.05;
constexpr double kPinnedRecallAudioToImage = 1.00 - 0.05;
constexpr double kPinnedRecallImageToAudio = 0.99 - 0.05;
constexpr double kTrainBudgetSeconds = 600.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Format(const char* format, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof(buffer), format, args...);
  return buffer;
}

Outcome GradientSuite() {
  const Clock::time_point start = Clock::now();
  const std::vector<harness::GradSuiteRow> rows =
      harness::RunGradientSuite(7);
  const double seconds = SecondsSince(start);
  double worst = 0.0;
  int nonsmooth = 0, entries = 0;
  std::string worst_row;
  for (const auto& row : rows) {
    entries += row.entries;
    nonsmooth += row.nonsmooth_entries;
    if (row.max_relative_error >= worst) {
      worst = row.max_relative_error;
      worst_row = row.name + " " + row.worst_entry;
    }
  }
  return {worst < 1e-4 && seconds < 60.0,
          Format("%zu rows, %d entries, max rel err %.3e at %s, %d "
                 "non-smooth entries skipped, %.1f s",
                 rows.size(), entries, worst, worst_row.c_str(), nonsmooth,
                 seconds)};
}

Outcome Stochasticity() {
  TrainConfig config;
  double worst_row = 0.0, worst_column = 0.0;
  int maps = 0;
  for (int instance = 0; instance < 100; ++instance) {
    config.seed = 1000 + instance;
    const diffcore::ParameterStore store = harness::InitializeModel(config);
    Rng rng(DeriveSeed(config.seed, 77));
    Graph graph;
    encoders::FeatureGrid image{
        graph.Input(RandomTensor(Shape{config.h * config.w, config.c}, rng)),
        encoders::Modality::kImage, config.h, config.w, 0, config.c};
    encoders::FeatureGrid audio{
        graph.Input(RandomTensor(Shape{config.t, config.c}, rng)),
        encoders::Modality::kAudio, 0, 0, config.t, config.c};
    const jsa::JsaOutput out =
        jsa::RunJsa(graph, store, image, audio, config.slots());
    for (const jsa::ModalityTrace* trace : {&out.image, &out.audio}) {
      if (trace->iterations.size() != 5) {
        return {false, "expected 5 iterations"};
      }
      for (const jsa::AttentionMaps& maps_n : trace->iterations) {
        const Tensor& raw = maps_n.raw.value();
        const Tensor& normalized = maps_n.normalized.value();
        for (int r = 0; r < raw.rows(); ++r) {
          double sum = 0.0;
          for (double v : raw.row(r)) sum += v;
          worst_row = std::max(worst_row, std::abs(sum - 1.0));
        }
        for (int s = 0; s < normalized.cols(); ++s) {
          double sum = 0.0;
          for (int r = 0; r < normalized.rows(); ++r) sum += normalized(r, s);
          worst_column = std::max(worst_column, std::abs(sum - 1.0));
        }
        ++maps;
      }
    }
  }
  return {worst_row <= 1e-9 && worst_column <= 1e-9,
          Format("%d attention maps, max |row sum - 1| %.2e, max |column "
                 "sum - 1| %.2e",
                 maps, worst_row, worst_column)};
}

Outcome Oracles() {
  Rng rng(2024);
  int knn_mismatch = 0, reciprocal_mismatch = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int batch = 2 + static_cast<int>(UniformIndex(rng, 31));
    const int k = 1 + static_cast<int>(
                          UniformIndex(rng, std::min(20, batch - 1)));
    const int width = 1 + static_cast<int>(UniformIndex(rng, 16));
    const Tensor image = RandomTensor(Shape{batch, width}, rng);
    const Tensor audio = RandomTensor(Shape{batch, width}, rng);
    const fnmitigation::NeighborSets sets =
        fnmitigation::ReciprocalFilter(image, audio, k);
    const auto knn_v = testing::BruteForceKnn(image, k);
    const auto knn_a = testing::BruteForceKnn(audio, k);
    knn_mismatch += sets.knn_image != knn_v;
    knn_mismatch += sets.knn_audio != knn_a;
    const auto rec_v = testing::BruteForceReciprocal(knn_v);
    const auto rec_a = testing::BruteForceReciprocal(knn_a);
    testing::IndexLists both(batch);
    for (int i = 0; i < batch; ++i) {
      for (int j : rec_v[i]) {
        if (testing::Contains(rec_a[i], j)) both[i].push_back(j);
      }
    }
    reciprocal_mismatch += sets.reciprocal_image != rec_v;
    reciprocal_mismatch += sets.reciprocal_audio != rec_a;
    reciprocal_mismatch += sets.reciprocal != both;
  }

  struct AucCase {
    std::vector<double> scores;
    double expected;
  };
  // Success rate on thresholds 0, 0.05, ..., 1 integrated by trapezoids.
  const AucCase auc_cases[] = {
      {{1.0, 1.0, 1.0}, 1.0},
      {{0.0, 0.0}, 0.025},
      {{0.5}, 0.525},
      {{0.0, 1.0}, 0.5125},
      {{0.25, 0.75}, 0.525},
  };
  double auc_error = 0.0;
  for (const AucCase& c : auc_cases) {
    auc_error = std::max(
        auc_error, std::abs(evaluation::SuccessAuc(c.scores) - c.expected));
  }

  const Tensor heat = Tensor::FromRows({{1, 2}, {3, 4}});
  const Tensor expected = Tensor::FromRows({{1.0, 1.25, 1.75, 2.0},
                                            {1.5, 1.75, 2.25, 2.5},
                                            {2.5, 2.75, 3.25, 3.5},
                                            {3.0, 3.25, 3.75, 4.0}});
  const Tensor up = localization::UpsampleBilinear(heat, 4, 4);
  double upsample_error = 0.0;
  for (size_t i = 0; i < up.flat().size(); ++i) {
    upsample_error =
        std::max(upsample_error, std::abs(up.flat()[i] - expected.flat()[i]));
  }
  return {knn_mismatch == 0 && reciprocal_mismatch == 0 && auc_error <= 1e-9 &&
              upsample_error <= 1e-9,
          Format("50 batches: %d kNN and %d reciprocal mismatches; AUC max "
                 "err %.1e; 2x2->4x4 max err %.1e",
                 knn_mismatch, reciprocal_mismatch, auc_error,
                 upsample_error)};
}

Outcome EndpointIdentities(std::span<const synthbench::SynthSample> data) {
  Rng rng(99);
  bool iqr_ok = true;
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor ca = RandomTensor(Shape{49}, rng, 0, 1);
    const Tensor ia = RandomTensor(Shape{49}, rng, 0, 1);
    iqr_ok &= localization::RefineIqr(ca.flat(), ia.flat(), 1.0) ==
              ca.values();
    iqr_ok &= localization::RefineIqr(ca.flat(), ia.flat(), 0.0) ==
              ia.values();
  }

  TrainConfig config;
  config.mask_ratio = 0.0;
  const diffcore::ParameterStore store = harness::InitializeModel(config);
  bool mask_ok = true;
  for (int i = 0; i < 5; ++i) {
    Rng mask_rng(i);
    const harness::SampleMasks masks = harness::DrawMasks(config, mask_rng);
    Graph masked;
    const harness::SampleForward f = harness::ForwardSample(
        masked, store, config, data[i], masks, false);
    Graph plain;
    const encoders::FeatureGrid image = encoders::EncodeImage(
        plain, store, config.image_encoder(), data[i].image);
    const encoders::FeatureGrid audio = encoders::EncodeAudio(
        plain, store, config.audio_encoder(), data[i].audio);
    const jsa::JsaOutput out =
        jsa::RunJsa(plain, store, image, audio, config.slots());
    mask_ok &= f.jsa.image.bundle.slots.value() ==
               out.image.bundle.slots.value();
    mask_ok &= f.jsa.audio.bundle.slots.value() ==
               out.audio.bundle.slots.value();
    mask_ok &= f.jsa.image.final_attention().normalized.value() ==
               out.image.final_attention().normalized.value();
    mask_ok &= f.jsa.audio.final_attention().normalized.value() ==
               out.audio.final_attention().normalized.value();
  }

  bool contrastive_ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    const int batch = 2 + static_cast<int>(UniformIndex(rng, 15));
    const Tensor v = RandomTensor(Shape{batch, 8}, rng);
    const Tensor a = RandomTensor(Shape{batch, 8}, rng);
    const std::vector<uint8_t> mask = fnmitigation::MaskFromSets(
        fnmitigation::IndexLists(batch), batch);
    Graph g1, g2;
    const Var v1 = g1.Input(v), a1 = g1.Input(a);
    const Var v2 = g2.Input(v), a2 = g2.Input(a);
    const Var filtered = objectives::ContrastiveLoss(v1, a1, 0.03, mask);
    const Var unfiltered = objectives::ContrastiveLoss(v2, a2, 0.03);
    g1.Backward(filtered);
    g2.Backward(unfiltered);
    contrastive_ok &= filtered.value() == unfiltered.value();
    contrastive_ok &= v1.grad() == v2.grad() && a1.grad() == a2.grad();
  }
  return {iqr_ok && mask_ok && contrastive_ok,
          Format("IQR endpoints %s; mask_ratio=0 forward %s; empty "
                 "reciprocal sets %s",
                 iqr_ok ? "bit-exact" : "differ",
                 mask_ok ? "bit-exact" : "differs",
                 contrastive_ok ? "bit-exact" : "differ")};
}

struct RunResult {
  harness::EvalResult eval;
  double train_seconds = 0.0;
  std::filesystem::path metrics;
};

// Train on `train`, then append held-out evaluation records, as the CLI
// train command does.
RunResult TrainAndEvaluate(const TrainConfig& config,
                           std::span<const synthbench::SynthSample> train,
                           std::span<const synthbench::SynthSample> held_out,
                           const std::filesystem::path& dir,
                           const std::string& name) {
  harness::TrainOptions options;
  options.checkpoint = dir / (name + ".bin");
  options.metrics = dir / (name + ".jsonl");
  RunResult result;
  result.metrics = options.metrics;
  const Clock::time_point start = Clock::now();
  const harness::Checkpoint final_state =
      harness::Train(config, train, options);
  result.train_seconds = SecondsSince(start);

  harness::EvalOptions eval_options = harness::DefaultEvalOptions(config);
  eval_options.with_iqr = true;
  result.eval =
      harness::Evaluate(final_state.params, config, held_out, eval_options);
  harness::MetricsWriter metrics(options.metrics, config, true);
  auto plain = result.eval.plain.Flatten();
  plain.emplace_back("target_off_cosine", result.eval.target_off_cosine);
  metrics.WriteEval("held_out", final_state.step, plain, 0.0);
  metrics.WriteEval("held_out_iqr", final_state.step,
                    result.eval.refined->Flatten(), 0.0);
  std::printf("  [%s] trained %lld steps in %.1f s\n", name.c_str(),
              static_cast<long long>(final_state.step), result.train_seconds);
  std::fflush(stdout);
  return result;
}

Outcome EndToEnd(const RunResult& run) {
  const evaluation::EvalReport& r = run.eval.plain;
  const double a2v = r.recall.audio_to_image.at(1);
  const double v2a = r.recall.image_to_audio.at(1);
  const bool pass = run.train_seconds < kTrainBudgetSeconds &&
                    r.ciou_at_050 >= kPinnedCiou && r.auc >= kPinnedAuc &&
                    a2v >= kPinnedRecallAudioToImage &&
                    v2a >= kPinnedRecallImageToAudio;
  return {pass,
          Format("train %.1f s; held-out cIoU@0.5 %.3f (>= %.3f), AUC %.4f "
                 "(>= %.4f), R@1 a->v %.3f (>= %.2f), v->a %.3f (>= %.2f)",
                 run.train_seconds, r.ciou_at_050, kPinnedCiou, r.auc,
                 kPinnedAuc, a2v, kPinnedRecallAudioToImage, v2a,
                 kPinnedRecallImageToAudio)};
}

Outcome Ablations(const RunResult& base, const RunResult& no_match,
                  const RunResult& no_div) {
  const double drop =
      base.eval.plain.ciou_at_050 - no_match.eval.plain.ciou_at_050;
  const bool match_ok = drop >= 0.15;
  const bool div_ok =
      no_div.eval.target_off_cosine > base.eval.target_off_cosine;
  return {match_ok && div_ok,
          Format("lambda1=0 cIoU@0.5 %.3f vs %.3f (drop %.3f, need >= 0.15); "
                 "cos(p,r) lambda2=0 %.4f vs lambda2=0.1 %.4f",
                 no_match.eval.plain.ciou_at_050, base.eval.plain.ciou_at_050,
                 drop, no_div.eval.target_off_cosine,
                 base.eval.target_off_cosine)};
}

std::string StrippedMetrics(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  const std::string text{std::istreambuf_iterator<char>(in),
                         std::istreambuf_iterator<char>()};
  static const std::regex timestamp(R"("wall_ms":[-+0-9.eE]+)");
  return std::regex_replace(text, timestamp, "\"wall_ms\":0");
}

Outcome Determinism(const RunResult& first, const RunResult& second) {
  const std::string a = StrippedMetrics(first.metrics);
  const std::string b = StrippedMetrics(second.metrics);
  const auto lines = std::count(a.begin(), a.end(), '\n');
  return {!a.empty() && a == b,
          Format("%lld metrics lines, %s after stripping wall_ms",
                 static_cast<long long>(lines),
                 a == b ? "byte-identical" : "differ")};
}

Outcome StopGradient(std::span<const synthbench::SynthSample> data) {
  Rng rng(8);
  bool inputs_ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    Graph graph;
    const Var ca_av = graph.Input(RandomTensor(Shape{49}, rng, 0, 1));
    const Var ia_vv = graph.Input(RandomTensor(Shape{49}, rng, 0, 1));
    const Var ca_va = graph.Input(RandomTensor(Shape{16}, rng, 0, 1));
    const Var ia_aa = graph.Input(RandomTensor(Shape{16}, rng, 0, 1));
    graph.Backward(
        objectives::AttentionMatchingLoss(ca_av, ia_vv, ca_va, ia_aa));
    for (const Var& ia : {ia_vv, ia_aa}) {
      for (double g : ia.grad().flat()) inputs_ok &= g == 0.0;
    }
    bool ca_moves = false;
    for (double g : ca_av.grad().flat()) ca_moves |= g != 0.0;
    inputs_ok &= ca_moves;
  }

  // In the full model, the parameter gradient of the matching loss equals
  // the one obtained with ia replaced by constants.
  TrainConfig config;
  bool model_ok = true;
  for (int trial = 0; trial < 10; ++trial) {
    config.seed = 500 + trial;
    diffcore::ParameterStore live = harness::InitializeModel(config);
    diffcore::ParameterStore frozen_store = live;
    Rng mask_rng(trial);
    const harness::SampleMasks masks = harness::DrawMasks(config, mask_rng);
    Graph g1;
    const harness::SampleForward f1 = harness::ForwardSample(
        g1, live, config, data[trial], masks, true);
    const harness::FrozenIntraAttention frozen{f1.ia_vv.value(),
                                               f1.ia_aa.value()};
    Graph g2;
    const harness::SampleForward f2 = harness::ForwardSample(
        g2, frozen_store, config, data[trial], masks, true, &frozen);
    g1.Backward(f1.match);
    g2.Backward(f2.match);
    live.ZeroGrad();
    frozen_store.ZeroGrad();
    g1.AccumulateParameterGrads(live);
    g2.AccumulateParameterGrads(frozen_store);
    for (int p = 0; p < live.size(); ++p) {
      model_ok &= live.at(p).grad == frozen_store.at(p).grad;
    }
  }
  return {inputs_ok && model_ok,
          Format("10 instances: d(match)/d(ia) %s; model parameter gradient "
                 "%s with ia held constant",
                 inputs_ok ? "exactly 0" : "non-zero",
                 model_ok ? "identical" : "differs")};
}

int Main() {
  int failures = 0;
  auto report = [&](int index, const char* name,
                    const std::function<Outcome()>& run) {
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    failures += !outcome.pass;
    std::printf("criterion %d (%s): %s | %s\n", index, name,
                outcome.pass ? "PASS" : "FAIL", outcome.detail.c_str());
    std::fflush(stdout);
  };

  const std::filesystem::path dir = testing::TempDir("acceptance");
  synthbench::SynthConfig train_synth;
  train_synth.samples = 800;
  train_synth.seed = 1;
  synthbench::SynthConfig held_out_synth = train_synth;
  held_out_synth.samples = 200;
  held_out_synth.seed = 2;
  // Round trip through the on-disk format so the data match the CLI's.
  synthbench::SaveDataset(dir / "train", synthbench::Generate(train_synth));
  synthbench::SaveDataset(dir / "held_out",
                          synthbench::Generate(held_out_synth));
  const auto train = synthbench::LoadDataset(dir / "train");
  const auto held_out = synthbench::LoadDataset(dir / "held_out");

  report(1, "gradient suite", GradientSuite);
  report(2, "attention stochasticity", Stochasticity);
  report(3, "oracle equivalences", Oracles);
  report(4, "endpoint identities", [&] { return EndpointIdentities(train); });

  TrainConfig config;
  config.threads = static_cast<int>(
      std::clamp(std::thread::hardware_concurrency(), 1u, 4u));
  TrainConfig no_match = config;
  no_match.lambda1 = 0.0;
  TrainConfig no_div = config;
  no_div.lambda2 = 0.0;
  std::optional<RunResult> base, base_again, ablate_match, ablate_div;
  report(5, "synthetic end-to-end", [&] {
    base = TrainAndEvaluate(config, train, held_out, dir, "default");
    return EndToEnd(*base);
  });
  report(6, "ablation directionality", [&] {
    if (!base) return Outcome{false, "default run unavailable"};
    ablate_match = TrainAndEvaluate(no_match, train, held_out, dir,
                                    "lambda1_0");
    ablate_div = TrainAndEvaluate(no_div, train, held_out, dir, "lambda2_0");
    return Ablations(*base, *ablate_match, *ablate_div);
  });
  report(7, "determinism", [&] {
    if (!base) return Outcome{false, "default run unavailable"};
    base_again = TrainAndEvaluate(config, train, held_out, dir, "default_2");
    return Determinism(*base, *base_again);
  });
  report(8, "stop-gradient", [&] { return StopGradient(train); });

  std::printf("%d of 8 criteria passed\n", 8 - failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace jsaloc

int main() { return jsaloc::Main(); }
