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

#ifndef JSALOC_HARNESS_TRAINER_H_
#define JSALOC_HARNESS_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <vector>

#include "jsaloc/diffcore/parameter.h"
#include "jsaloc/fnmitigation/fnmitigation.h"
#include "jsaloc/harness/checkpoint.h"
#include "jsaloc/harness/config.h"
#include "jsaloc/harness/optimizer.h"
#include "jsaloc/objectives/objectives.h"
#include "jsaloc/random.h"
#include "jsaloc/synthbench/synthbench.h"

namespace jsaloc::harness {

using synthbench::SynthSample;

struct StepRecord {
  int64_t step = 0;  // 1-based index of the completed step
  objectives::LossReport losses;
  double lr = 0.0;
  int effective_k = 0;
  int filtered_pairs = 0;  // off-diagonal pairs dropped from the negatives
  double wall_ms = 0.0;
};

// One optimization step per call. Every sample of the batch is forwarded on
// its own graph (sharded over `threads`); the contrastive loss is built on a
// small graph over copies of the target slots and its gradient is injected
// back into the sample graphs. Gradients are summed in batch order, so the
// result does not depend on the thread count.
class Trainer {
 public:
  Trainer(const TrainConfig& config, std::span<const SynthSample> data);
  // Resumes from `ckpt`; `config` may differ only in non-architecture fields.
  Trainer(const Checkpoint& ckpt, const TrainConfig& config,
          std::span<const SynthSample> data);

  // On a non-finite loss or gradient throws Error(kNumeric) and leaves the
  // trainer in its pre-step state.
  StepRecord Step(fnmitigation::NeighborSets* neighbors = nullptr);

  Checkpoint Snapshot() const;

  int64_t step() const { return step_; }
  const TrainConfig& config() const { return config_; }
  const diffcore::ParameterStore& params() const { return params_; }
  // Dataset indices of the batch the next Step will use.
  std::vector<int> NextBatch() const;

 private:
  int DatasetIndex(int64_t position) const;

  TrainConfig config_;
  std::span<const SynthSample> data_;
  diffcore::ParameterStore params_;
  AdamW optimizer_;
  Rng mask_rng_;
  int64_t step_ = 0;
  mutable int64_t cached_epoch_ = -1;
  mutable std::vector<int> cached_order_;
};

// Append-only JSON lines. The header record is written with the first step
// record, so a run without steps leaves the file empty.
class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& path, const TrainConfig& config,
                bool append);
  void WriteStep(const StepRecord& record);
  void WriteEval(const std::string& split, int64_t step,
                 const std::vector<std::pair<std::string, double>>& values,
                 double wall_ms);

 private:
  void EnsureHeader();
  std::ofstream out_;
  TrainConfig config_;
  bool header_written_;
};

struct TrainOptions {
  std::filesystem::path checkpoint;  // final and periodic checkpoints
  std::filesystem::path metrics;     // empty: no metrics file
  std::filesystem::path neighbors;   // empty: no neighbour records
  std::optional<std::filesystem::path> resume;
  bool log_progress = false;
};

// Runs until `config.steps` steps are complete. On a numeric failure the
// last good state is written to `options.checkpoint` and the error is
// rethrown.
Checkpoint Train(const TrainConfig& config, std::span<const SynthSample> data,
                 const TrainOptions& options);

}  // namespace jsaloc::harness

#endif  // JSALOC_HARNESS_TRAINER_H_
