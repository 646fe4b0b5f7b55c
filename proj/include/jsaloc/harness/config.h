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

#ifndef JSALOC_HARNESS_CONFIG_H_
#define JSALOC_HARNESS_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "jsaloc/encoders/encoders.h"
#include "jsaloc/jsa/joint_slot_attention.h"
#include "jsaloc/objectives/objectives.h"

namespace jsaloc::harness {

struct TrainConfig {
  double tau = 0.03;
  double lambda1 = 100.0;  // attention matching
  double lambda2 = 0.1;    // divergence
  double lambda3 = 0.1;    // reconstruction
  double alpha = 0.6;      // IQR blend at evaluation
  int k = 2;               // reciprocal neighbours; 0 disables filtering
  int iterations = 5;
  double mask_ratio = 0.1;
  double lr = 2e-3;
  double weight_decay = 1e-2;
  int batch = 16;
  int64_t steps = 2000;
  uint64_t seed = 1;

  int h = 7;
  int w = 7;
  int t = 16;
  int c = 32;
  int d = 32;
  int n_target = 1;
  int n_off = 1;

  int image_patch = 4;
  int image_channels = 1;
  int audio_patch = 4;
  int audio_freq_bins = 64;
  int audio_freq_bands = 8;
  int encoder_hidden = 64;
  int decoder_hidden = 64;

  double threshold_k = 1.0;  // mean + k * std localization threshold
  int threads = 1;
  int64_t checkpoint_every = 500;
  std::string dataset;

  int image_height() const { return h * image_patch; }
  int image_width() const { return w * image_patch; }
  int audio_frames() const { return t * audio_patch; }

  encoders::ImageEncoderConfig image_encoder() const;
  encoders::AudioEncoderConfig audio_encoder() const;
  jsa::SlotConfig slots() const;
  objectives::DecoderConfig image_decoder() const;
  objectives::DecoderConfig audio_decoder() const;
  objectives::LossWeights weights() const;
};

// Throws Error(kConfig) naming the first offending field.
void Validate(const TrainConfig& config);

using FieldPointer = std::variant<double TrainConfig::*, int TrainConfig::*,
                                  int64_t TrainConfig::*,
                                  uint64_t TrainConfig::*,
                                  std::string TrainConfig::*>;

struct FieldInfo {
  const char* name;
  FieldPointer pointer;
  // Fields that change the parameter layout or the forward computation.
  bool architecture;
};

// Every TrainConfig field, in declaration order.
const std::vector<FieldInfo>& Fields();

std::string GetField(const TrainConfig& config, std::string_view name);
void SetField(TrainConfig& config, std::string_view name,
              std::string_view text);

// "key=value" lines; '#' starts a comment, blank lines are ignored.
std::string ToKeyValueText(const TrainConfig& config);
void ApplyKeyValueText(TrainConfig& config, std::string_view text,
                       std::string_view source = "config");
TrainConfig LoadConfigFile(const std::filesystem::path& path);

// Names of architecture fields whose values differ, empty when compatible.
std::vector<std::string> ArchitectureMismatches(const TrainConfig& a,
                                                const TrainConfig& b);

// Reference-scale setting -> this run, for every setting that is scaled down
// or substituted. Written into checkpoints and metrics headers.
std::vector<std::pair<std::string, std::string>> DeskScaleDeviations(
    const TrainConfig& config);

}  // namespace jsaloc::harness

#endif  // JSALOC_HARNESS_CONFIG_H_
