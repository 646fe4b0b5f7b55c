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

#ifndef JSALOC_HARNESS_CHECKPOINT_H_
#define JSALOC_HARNESS_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "jsaloc/diffcore/parameter.h"
#include "jsaloc/harness/config.h"

namespace jsaloc::harness {

inline constexpr char kCheckpointMagic[8] = {'J', 'S', 'A', 'L',
                                             'O', 'C', 'K', 'P'};
inline constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  TrainConfig config;
  std::string deviations;  // one "setting: reference -> run" line each
  int64_t step = 0;
  diffcore::ParameterStore params;
  int64_t optimizer_steps = 0;
  std::vector<diffcore::Tensor> first_moments;
  std::vector<diffcore::Tensor> second_moments;
  std::string rng_state;  // textual state of the masking stream
};

// Little-endian: magic, version, config text, deviations, step, RNG state,
// optimizer step count, then per parameter its name, trainable flag, shape,
// values and both moments. Written to a temporary file and renamed.
void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

// Throws Error(kConfig) listing architecture fields that differ, or
// parameters whose names or shapes do not match a fresh model of `config`.
void CheckCompatible(const Checkpoint& ckpt, const TrainConfig& config);

}  // namespace jsaloc::harness

#endif  // JSALOC_HARNESS_CHECKPOINT_H_
