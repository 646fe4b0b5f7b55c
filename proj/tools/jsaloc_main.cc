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

// Command-line front end: dataset generation, training, evaluation,
// single-sample localization, retrieval and the gradient suite.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "jsaloc/error.h"
#include "jsaloc/evaluation/evaluation.h"
#include "jsaloc/harness/checkpoint.h"
#include "jsaloc/harness/config.h"
#include "jsaloc/harness/evaluate.h"
#include "jsaloc/harness/gradsuite.h"
#include "jsaloc/harness/trainer.h"
#include "jsaloc/localization/localization.h"
#include "jsaloc/log.h"
#include "jsaloc/synthbench/synthbench.h"
#include "nlohmann/json.hpp"

namespace {

namespace fs = std::filesystem;
using jsaloc::Error;
using jsaloc::ErrorKind;
using namespace jsaloc::harness;  // NOLINT

constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;

// --<field> flags mirroring TrainConfig, applied over a base config.
class ConfigFlags {
 public:
  void Register(CLI::App* app) {
    app_ = app;
    app->add_option("--config", config_file_,
                    "key=value file; flags given here override it");
    const TrainConfig defaults;
    for (const FieldInfo& f : Fields()) {
      app->add_option("--" + std::string(f.name), values_[f.name],
                      "default " + GetField(defaults, f.name));
    }
  }

  TrainConfig Apply(TrainConfig base) const {
    if (!config_file_.empty()) {
      std::ifstream in(config_file_);
      if (!in) {
        throw Error(ErrorKind::kConfig,
                    "cannot read config file " + config_file_);
      }
      std::stringstream text;
      text << in.rdbuf();
      ApplyKeyValueText(base, text.str(), config_file_);
    }
    for (const auto& [name, value] : values_) {
      if (app_->count("--" + name) > 0) SetField(base, name, value);
    }
    Validate(base);
    return base;
  }

 private:
  CLI::App* app_ = nullptr;
  std::string config_file_;
  std::map<std::string, std::string> values_;
};

std::vector<jsaloc::synthbench::SynthSample> LoadData(
    const std::string& path) {
  if (path.empty()) {
    throw Error(ErrorKind::kConfig, "no dataset given (use --dataset)");
  }
  return jsaloc::synthbench::LoadDataset(path);
}

Checkpoint LoadExisting(const std::string& path) {
  if (path.empty()) {
    throw Error(ErrorKind::kConfig, "no checkpoint given (use --checkpoint)");
  }
  if (!fs::exists(path)) {
    throw Error(ErrorKind::kIo, "checkpoint not found: " + path);
  }
  return LoadCheckpoint(path);
}

nlohmann::json ReportJson(const jsaloc::evaluation::EvalReport& report) {
  nlohmann::json j;
  for (const auto& [key, value] : report.Flatten()) j[key] = value;
  return j;
}

void PrintRecall(const jsaloc::evaluation::RecallReport& r) {
  std::printf("%-6s %-14s %-14s\n", "K", "audio->image", "image->audio");
  for (const auto& [k, v] : r.audio_to_image) {
    std::printf("%-6d %-14.4f %-14.4f\n", k, v, r.image_to_audio.at(k));
  }
}

int GenData(const std::string& out, jsaloc::synthbench::SynthConfig config) {
  const auto samples = jsaloc::synthbench::Generate(config);
  jsaloc::synthbench::SaveDataset(out, samples);
  std::printf("wrote %zu samples to %s (content hash %016llx)\n",
              samples.size(), out.c_str(),
              static_cast<unsigned long long>(
                  jsaloc::synthbench::ContentHash(samples)));
  return 0;
}

struct TrainArgs {
  std::string checkpoint = "checkpoint.bin";
  std::string metrics;
  std::string neighbors;
  std::string resume;
  std::string eval_dataset;
};

int RunTrain(const TrainConfig& config, const TrainArgs& args) {
  const auto data = LoadData(config.dataset);
  TrainOptions options;
  options.checkpoint = args.checkpoint;
  options.metrics = args.metrics;
  options.neighbors = args.neighbors;
  if (!args.resume.empty()) {
    if (!fs::exists(args.resume)) {
      throw Error(ErrorKind::kIo, "checkpoint not found: " + args.resume);
    }
    options.resume = args.resume;
  }
  options.log_progress = true;
  const Checkpoint final_state = Train(config, data, options);
  std::printf("trained %lld steps; checkpoint %s\n",
              static_cast<long long>(final_state.step),
              args.checkpoint.c_str());
  if (!args.eval_dataset.empty()) {
    const auto held_out = LoadData(args.eval_dataset);
    EvalOptions eval_options = DefaultEvalOptions(config);
    eval_options.with_iqr = true;
    const EvalResult result =
        Evaluate(final_state.params, config, held_out, eval_options);
    if (!args.metrics.empty()) {
      MetricsWriter metrics(args.metrics, config, true);
      auto plain = result.plain.Flatten();
      plain.emplace_back("target_off_cosine", result.target_off_cosine);
      metrics.WriteEval("held_out", final_state.step, plain, 0.0);
      metrics.WriteEval("held_out_iqr", final_state.step,
                        result.refined->Flatten(), 0.0);
    }
    std::cout << ReportJson(result.plain).dump(2) << "\n";
  }
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  bool iqr = false;
  std::optional<double> theta;
  std::string scores;
  std::string json;
};

int RunEval(const ConfigFlags& flags, const EvalArgs& args) {
  const Checkpoint ckpt = LoadExisting(args.checkpoint);
  const TrainConfig config = flags.Apply(ckpt.config);
  CheckCompatible(ckpt, config);
  const auto data = LoadData(config.dataset);
  EvalOptions options = DefaultEvalOptions(config);
  if (args.theta) {
    options.policy = jsaloc::localization::ThresholdPolicy::Absolute(*args.theta);
  }
  options.with_iqr = args.iqr;
  const EvalResult result = Evaluate(ckpt.params, config, data, options);
  nlohmann::json out;
  out["step"] = ckpt.step;
  out["without_iqr"] = ReportJson(result.plain);
  if (result.refined) out["with_iqr"] = ReportJson(*result.refined);
  out["target_off_cosine"] = result.target_off_cosine;
  std::cout << out.dump(2) << "\n";
  if (!args.scores.empty()) {
    jsaloc::evaluation::WriteScoresCsv(
        args.scores, args.iqr ? result.refined_scores : result.plain_scores);
  }
  if (!args.json.empty()) {
    std::ofstream f(args.json);
    if (!f) throw Error(ErrorKind::kIo, "cannot write " + args.json);
    f << out.dump(2) << "\n";
  }
  return 0;
}

struct LocalizeArgs {
  std::string checkpoint;
  int sample = 0;
  bool iqr = false;
  std::optional<double> theta;
  std::string pgm = "mask.pgm";
  std::string csv = "heat.csv";
};

int RunLocalize(const ConfigFlags& flags, const LocalizeArgs& args) {
  const Checkpoint ckpt = LoadExisting(args.checkpoint);
  const TrainConfig config = flags.Apply(ckpt.config);
  CheckCompatible(ckpt, config);
  const auto data = LoadData(config.dataset);
  const jsaloc::synthbench::SynthSample* sample = nullptr;
  for (const auto& s : data) {
    if (s.id == args.sample) sample = &s;
  }
  if (sample == nullptr) {
    throw Error(ErrorKind::kConfig,
                "no sample with id " + std::to_string(args.sample));
  }
  const auto policy =
      args.theta ? jsaloc::localization::ThresholdPolicy::Absolute(*args.theta)
                 : jsaloc::localization::ThresholdPolicy::MeanPlusStd(
                       config.threshold_k);
  const SampleInference inference = Infer(ckpt.params, config, *sample);
  const auto map = Localize(inference, config, policy, args.iqr);
  jsaloc::localization::WriteMaskPgm(args.pgm, map.mask, map.height(),
                                     map.width());
  jsaloc::localization::WriteHeatCsv(args.csv, map.heat);
  const auto scores = jsaloc::evaluation::MaskIouFscore(map.mask,
                                                        sample->gt_mask);
  std::printf("sample %d: theta %.6g, alpha %.3g, ciou %.4f -> %s, %s\n",
              sample->id, map.theta, map.alpha, scores.iou, args.pgm.c_str(),
              args.csv.c_str());
  return 0;
}

int RunRetrieve(const ConfigFlags& flags, const std::string& checkpoint,
                const std::vector<int>& ks) {
  const Checkpoint ckpt = LoadExisting(checkpoint);
  const TrainConfig config = flags.Apply(ckpt.config);
  CheckCompatible(ckpt, config);
  const auto data = LoadData(config.dataset);
  EvalOptions options = DefaultEvalOptions(config);
  options.recall_ks = ks;
  const EvalResult result = Evaluate(ckpt.params, config, data, options);
  PrintRecall(result.plain.recall);
  return 0;
}

int RunGradcheck(uint64_t seed) {
  const std::vector<GradSuiteRow> rows = RunGradientSuite(seed);
  bool ok = true;
  std::printf("%-30s %-12s %-12s %-8s %-6s %s\n", "operation", "max_rel_err",
              "max_abs_err", "entries", "kinks", "worst");
  for (const GradSuiteRow& r : rows) {
    std::printf("%-30s %-12.3e %-12.3e %-8d %-6d %s\n", r.name.c_str(),
                r.max_relative_error, r.max_absolute_error, r.entries,
                r.nonsmooth_entries, r.worst_entry.c_str());
    ok = ok && r.max_relative_error < 1e-4;
  }
  std::printf("%s\n", ok ? "all below 1e-4" : "tolerance exceeded");
  return ok ? 0 : kExitNumeric;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint slot attention sound source localization"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "suppress progress and warnings");

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
  std::string gen_out;
  jsaloc::synthbench::SynthConfig synth;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--samples", synth.samples, "number of samples");
  gen->add_option("--categories", synth.categories, "sounding categories");
  gen->add_option("--seed", synth.seed, "generation seed");
  gen->add_option("--distractor-rate", synth.distractor_rate,
                  "probability of distractor objects");
  gen->add_option("--audio-noise-rate", synth.audio_noise_rate,
                  "probability of off-target noise bands");

  auto* train = app.add_subcommand("train", "train a model");
  ConfigFlags train_flags;
  train_flags.Register(train);
  TrainArgs train_args;
  train->add_option("--checkpoint", train_args.checkpoint, "output checkpoint");
  train->add_option("--metrics", train_args.metrics, "JSON-lines metrics file");
  train->add_option("--neighbors", train_args.neighbors,
                    "JSON-lines reciprocal-neighbour records");
  train->add_option("--resume", train_args.resume, "checkpoint to resume");
  train->add_option("--eval-dataset", train_args.eval_dataset,
                    "held-out dataset evaluated after training");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  ConfigFlags eval_flags;
  eval_flags.Register(eval);
  EvalArgs eval_args;
  eval->add_option("--checkpoint", eval_args.checkpoint, "checkpoint file");
  eval->add_flag("--iqr", eval_args.iqr, "also report IQR-refined maps");
  eval->add_option("--theta", eval_args.theta, "absolute threshold");
  eval->add_option("--scores", eval_args.scores, "per-sample cIoU CSV");
  eval->add_option("--json", eval_args.json, "write the report as JSON");

  auto* localize = app.add_subcommand("localize", "localize one sample");
  ConfigFlags localize_flags;
  localize_flags.Register(localize);
  LocalizeArgs localize_args;
  localize->add_option("--checkpoint", localize_args.checkpoint,
                       "checkpoint file");
  localize->add_option("--sample", localize_args.sample, "sample id");
  localize->add_flag("--iqr", localize_args.iqr, "refine with IQR");
  localize->add_option("--theta", localize_args.theta, "absolute threshold");
  localize->add_option("--pgm", localize_args.pgm, "mask output (PGM)");
  localize->add_option("--csv", localize_args.csv, "heat map output (CSV)");

  auto* retrieve = app.add_subcommand("retrieve", "cross-modal retrieval");
  ConfigFlags retrieve_flags;
  retrieve_flags.Register(retrieve);
  std::string retrieve_checkpoint;
  std::vector<int> ks = {1, 5, 10};
  retrieve->add_option("--checkpoint", retrieve_checkpoint, "checkpoint file");
  retrieve->add_option("--ks", ks, "recall cut-offs");

  auto* grad = app.add_subcommand("gradcheck", "finite-difference suite");
  uint64_t grad_seed = 7;
  grad->add_option("--seed", grad_seed, "seed for random inputs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }
  jsaloc::GlobalLogLevel() =
      quiet ? jsaloc::LogLevel::kQuiet : jsaloc::LogLevel::kInfo;

  try {
    if (*gen) return GenData(gen_out, synth);
    if (*train) return RunTrain(train_flags.Apply(TrainConfig{}), train_args);
    if (*eval) return RunEval(eval_flags, eval_args);
    if (*localize) return RunLocalize(localize_flags, localize_args);
    if (*retrieve) return RunRetrieve(retrieve_flags, retrieve_checkpoint, ks);
    if (*grad) return RunGradcheck(grad_seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::kNumeric ? kExitNumeric : kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
