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

#include "jsaloc/harness/trainer.h"

#include <chrono>
#include <memory>
#include <numeric>
#include <sstream>

#include "jsaloc/diffcore/graph.h"
#include "jsaloc/error.h"
#include "jsaloc/harness/model.h"
#include "jsaloc/harness/parallel.h"
#include "jsaloc/log.h"
#include "nlohmann/json.hpp"

namespace jsaloc::harness {
namespace {

using Clock = std::chrono::steady_clock;

double MillisecondsSince(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

AdamWConfig OptimizerConfig(const TrainConfig& config) {
  AdamWConfig c;
  c.lr = config.lr;
  c.weight_decay = config.weight_decay;
  return c;
}

std::string DeviationText(const TrainConfig& config) {
  std::string out;
  for (const auto& [key, value] : DeskScaleDeviations(config)) {
    out += key + ": " + value + "\n";
  }
  return out;
}

void CheckData(const TrainConfig& config, std::span<const SynthSample> data) {
  if (data.size() < static_cast<size_t>(config.batch)) {
    throw Error(ErrorKind::kConfig,
                "dataset has " + std::to_string(data.size()) +
                    " samples, fewer than batch = " +
                    std::to_string(config.batch));
  }
  for (const SynthSample& s : data) CheckSampleShapes(config, s);
}

void CheckGradientsFinite(const diffcore::ParameterStore& store) {
  for (const diffcore::Parameter& p : store) {
    if (!p.grad.AllFinite()) {
      throw Error(ErrorKind::kNumeric,
                  "non-finite gradient for parameter " + p.name);
    }
  }
}

Tensor RowVector(const Tensor& m, int r) {
  const std::span<const double> row = m.row(r);
  return Tensor::Vector(std::vector<double>(row.begin(), row.end()));
}

}  // namespace

Trainer::Trainer(const TrainConfig& config, std::span<const SynthSample> data)
    : config_(config),
      data_(data),
      params_(InitializeModel(config)),
      optimizer_(params_, OptimizerConfig(config)),
      mask_rng_(DeriveSeed(config.seed, 2)) {
  CheckData(config_, data_);
}

Trainer::Trainer(const Checkpoint& ckpt, const TrainConfig& config,
                 std::span<const SynthSample> data)
    : config_(config), data_(data), params_(ckpt.params) {
  Validate(config_);
  CheckCompatible(ckpt, config_);
  CheckData(config_, data_);
  optimizer_ = AdamW(params_, OptimizerConfig(config_));
  optimizer_.Restore(params_, ckpt.optimizer_steps, ckpt.first_moments,
                     ckpt.second_moments);
  std::istringstream state(ckpt.rng_state);
  state >> mask_rng_;
  if (!state) {
    throw Error(ErrorKind::kIo, "checkpoint RNG state is unreadable");
  }
  step_ = ckpt.step;
}

int Trainer::DatasetIndex(int64_t position) const {
  const int64_t n = static_cast<int64_t>(data_.size());
  const int64_t epoch = position / n;
  if (epoch != cached_epoch_) {
    cached_order_.resize(static_cast<size_t>(n));
    std::iota(cached_order_.begin(), cached_order_.end(), 0);
    Rng rng(DeriveSeed(config_.seed, 0x100000 + static_cast<uint64_t>(epoch)));
    for (int64_t i = n - 1; i > 0; --i) {
      const auto j = static_cast<int64_t>(
          UniformIndex(rng, static_cast<uint64_t>(i + 1)));
      std::swap(cached_order_[i], cached_order_[j]);
    }
    cached_epoch_ = epoch;
  }
  return cached_order_[position % n];
}

std::vector<int> Trainer::NextBatch() const {
  std::vector<int> batch;
  for (int i = 0; i < config_.batch; ++i) {
    batch.push_back(DatasetIndex(step_ * config_.batch + i));
  }
  return batch;
}

StepRecord Trainer::Step(fnmitigation::NeighborSets* neighbors) {
  const Clock::time_point start = Clock::now();
  const int batch_size = config_.batch;
  const std::vector<int> batch = NextBatch();
  const Rng saved_rng = mask_rng_;
  StepRecord record;
  try {
    std::vector<SampleMasks> masks;
    for (int i = 0; i < batch_size; ++i) {
      masks.push_back(DrawMasks(config_, mask_rng_));
    }
    std::vector<std::unique_ptr<Graph>> graphs(batch_size);
    std::vector<SampleForward> forwards(batch_size);
    std::vector<Var> shares(batch_size);
    ParallelFor(batch_size, config_.threads, [&](int i) {
      graphs[i] = std::make_unique<Graph>();
      forwards[i] = ForwardSample(*graphs[i], params_, config_,
                                  data_[batch[i]], masks[i], true);
      shares[i] = SampleLossShare(forwards[i], config_, batch_size);
    });

    Tensor image_targets(diffcore::Shape{batch_size, config_.d});
    Tensor audio_targets(diffcore::Shape{batch_size, config_.d});
    objectives::LossReport& report = record.losses;
    for (int i = 0; i < batch_size; ++i) {
      for (int j = 0; j < config_.d; ++j) {
        image_targets(i, j) = forwards[i].image_target.value()[j];
        audio_targets(i, j) = forwards[i].audio_target.value()[j];
      }
      report.match += forwards[i].match.value()[0];
      report.div += forwards[i].div.value()[0];
      report.recon += forwards[i].recon.value()[0];
    }
    fnmitigation::NeighborSets sets =
        fnmitigation::ReciprocalFilter(image_targets, audio_targets, config_.k);

    Graph central;
    const Var image_leaf = central.Input(image_targets);
    const Var audio_leaf = central.Input(audio_targets);
    const Var cotr = objectives::ContrastiveLoss(
        image_leaf, audio_leaf, config_.tau, sets.negative_mask);
    report.cotr = cotr.value()[0];
    report.match /= batch_size;
    report.div /= batch_size;
    report.recon /= batch_size;
    report.weights = config_.weights();
    report.temperature = config_.tau;
    report.total = objectives::ComposeTotal(report.cotr, report.match,
                                            report.div, report.recon,
                                            report.weights);
    objectives::CheckFinite(report);
    central.Backward(cotr);

    ParallelFor(batch_size, config_.threads, [&](int i) {
      const std::pair<Var, Tensor> seeds[] = {
          {forwards[i].image_target, RowVector(image_leaf.grad(), i)},
          {forwards[i].audio_target, RowVector(audio_leaf.grad(), i)}};
      graphs[i]->Backward(shares[i], seeds);
    });
    params_.ZeroGrad();
    for (int i = 0; i < batch_size; ++i) {
      graphs[i]->AccumulateParameterGrads(params_);
    }
    CheckGradientsFinite(params_);
    optimizer_.Step(params_);

    record.effective_k = sets.k;
    for (uint8_t keep : sets.negative_mask) record.filtered_pairs += !keep;
    if (neighbors != nullptr) *neighbors = std::move(sets);
  } catch (...) {
    mask_rng_ = saved_rng;
    throw;
  }
  ++step_;
  record.step = step_;
  record.lr = config_.lr;
  record.wall_ms = MillisecondsSince(start);
  return record;
}

Checkpoint Trainer::Snapshot() const {
  Checkpoint ckpt;
  ckpt.config = config_;
  ckpt.deviations = DeviationText(config_);
  ckpt.step = step_;
  ckpt.params = params_;
  ckpt.params.ZeroGrad();
  ckpt.optimizer_steps = optimizer_.steps_taken();
  ckpt.first_moments = optimizer_.first_moments();
  ckpt.second_moments = optimizer_.second_moments();
  std::ostringstream state;
  state << mask_rng_;
  ckpt.rng_state = state.str();
  return ckpt;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path,
                             const TrainConfig& config, bool append)
    : config_(config), header_written_(append) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  out_.open(path, append ? std::ios::app : std::ios::trunc);
  if (!out_) throw Error(ErrorKind::kIo, "cannot write " + path.string());
}

void MetricsWriter::EnsureHeader() {
  if (header_written_) return;
  nlohmann::json header;
  header["type"] = "header";
  header["format"] = 1;
  for (const FieldInfo& f : Fields()) {
    header["config"][f.name] = GetField(config_, f.name);
  }
  for (const auto& [key, value] : DeskScaleDeviations(config_)) {
    header["desk_scale"][key] = value;
  }
  out_ << header.dump() << "\n";
  header_written_ = true;
}

void MetricsWriter::WriteStep(const StepRecord& r) {
  EnsureHeader();
  nlohmann::json j;
  j["type"] = "step";
  j["step"] = r.step;
  j["cotr"] = r.losses.cotr;
  j["match"] = r.losses.match;
  j["div"] = r.losses.div;
  j["recon"] = r.losses.recon;
  j["total"] = r.losses.total;
  j["lr"] = r.lr;
  j["k"] = r.effective_k;
  j["filtered_pairs"] = r.filtered_pairs;
  j["wall_ms"] = r.wall_ms;
  out_ << j.dump() << "\n";
  out_.flush();
}

void MetricsWriter::WriteEval(
    const std::string& split, int64_t step,
    const std::vector<std::pair<std::string, double>>& values,
    double wall_ms) {
  EnsureHeader();
  nlohmann::json j;
  j["type"] = "eval";
  j["split"] = split;
  j["step"] = step;
  for (const auto& [key, value] : values) j[key] = value;
  j["wall_ms"] = wall_ms;
  out_ << j.dump() << "\n";
  out_.flush();
}

Checkpoint Train(const TrainConfig& config, std::span<const SynthSample> data,
                 const TrainOptions& options) {
  Validate(config);
  std::unique_ptr<Trainer> trainer;
  if (options.resume) {
    trainer = std::make_unique<Trainer>(LoadCheckpoint(*options.resume),
                                        config, data);
  } else {
    trainer = std::make_unique<Trainer>(config, data);
  }
  const bool append = options.resume.has_value();
  std::optional<MetricsWriter> metrics;
  if (!options.metrics.empty()) metrics.emplace(options.metrics, config, append);
  std::ofstream neighbor_log;
  if (!options.neighbors.empty()) {
    neighbor_log.open(options.neighbors, append ? std::ios::app
                                                : std::ios::trunc);
    if (!neighbor_log) {
      throw Error(ErrorKind::kIo, "cannot write " + options.neighbors.string());
    }
  }

  while (trainer->step() < config.steps) {
    const std::vector<int> batch = trainer->NextBatch();
    fnmitigation::NeighborSets sets;
    StepRecord record;
    try {
      record = trainer->Step(&sets);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kNumeric && !options.checkpoint.empty()) {
        SaveCheckpoint(options.checkpoint, trainer->Snapshot());
        LogWarning("numeric failure at step " +
                   std::to_string(trainer->step() + 1) +
                   "; last good state saved to " +
                   options.checkpoint.string());
      }
      throw;
    }
    if (metrics) metrics->WriteStep(record);
    if (neighbor_log.is_open()) {
      std::vector<int> ids;
      for (int index : batch) ids.push_back(data[index].id);
      fnmitigation::WriteNeighborRecord(neighbor_log, record.step, sets, ids);
    }
    if (!options.checkpoint.empty() &&
        record.step % config.checkpoint_every == 0) {
      SaveCheckpoint(options.checkpoint, trainer->Snapshot());
    }
    if (options.log_progress &&
        (record.step % 100 == 0 || record.step == config.steps)) {
      std::ostringstream line;
      line << "step " << record.step << " total " << record.losses.total
           << " cotr " << record.losses.cotr << " match "
           << record.losses.match;
      LogInfo(line.str());
    }
  }
  Checkpoint final_state = trainer->Snapshot();
  if (!options.checkpoint.empty()) {
    SaveCheckpoint(options.checkpoint, final_state);
  }
  return final_state;
}

}  // namespace jsaloc::harness
