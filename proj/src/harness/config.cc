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

#include "jsaloc/harness/config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "jsaloc/error.h"

namespace jsaloc::harness {
namespace {

[[noreturn]] void Fail(const std::string& message) {
  throw Error(ErrorKind::kConfig, message);
}

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T ParseNumber(std::string_view name, std::string_view text) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    Fail("field '" + std::string(name) + "': cannot parse '" +
         std::string(text) + "'");
  }
  return value;
}

template <typename T>
std::string FormatNumber(T value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, ptr);
}

void RequirePositive(std::string_view name, double value) {
  if (!(value > 0)) Fail(std::string(name) + " must be positive");
}

void RequireNonNegative(std::string_view name, double value) {
  if (!(value >= 0)) Fail(std::string(name) + " must be non-negative");
}

const FieldInfo& Find(std::string_view name) {
  for (const FieldInfo& f : Fields()) {
    if (name == f.name) return f;
  }
  Fail("unknown field '" + std::string(name) + "'");
}

}  // namespace

encoders::ImageEncoderConfig TrainConfig::image_encoder() const {
  encoders::ImageEncoderConfig e;
  e.height = image_height();
  e.width = image_width();
  e.channels = image_channels;
  e.patch = image_patch;
  e.hidden = encoder_hidden;
  e.c = c;
  return e;
}

encoders::AudioEncoderConfig TrainConfig::audio_encoder() const {
  encoders::AudioEncoderConfig e;
  e.freq_bins = audio_freq_bins;
  e.frames = audio_frames();
  e.freq_bands = audio_freq_bands;
  e.temporal_patch = audio_patch;
  e.hidden = encoder_hidden;
  e.c = c;
  return e;
}

jsa::SlotConfig TrainConfig::slots() const {
  return jsa::SlotConfig{n_target, n_off, c, d, iterations};
}

objectives::DecoderConfig TrainConfig::image_decoder() const {
  return objectives::DecoderConfig{h * w, d, c, decoder_hidden};
}

objectives::DecoderConfig TrainConfig::audio_decoder() const {
  return objectives::DecoderConfig{t, d, c, decoder_hidden};
}

objectives::LossWeights TrainConfig::weights() const {
  return objectives::LossWeights{lambda1, lambda2, lambda3};
}

const std::vector<FieldInfo>& Fields() {
  static const std::vector<FieldInfo> fields = {
      {"tau", &TrainConfig::tau, false},
      {"lambda1", &TrainConfig::lambda1, false},
      {"lambda2", &TrainConfig::lambda2, false},
      {"lambda3", &TrainConfig::lambda3, false},
      {"alpha", &TrainConfig::alpha, false},
      {"k", &TrainConfig::k, false},
      {"iterations", &TrainConfig::iterations, true},
      {"mask_ratio", &TrainConfig::mask_ratio, false},
      {"lr", &TrainConfig::lr, false},
      {"weight_decay", &TrainConfig::weight_decay, false},
      {"batch", &TrainConfig::batch, false},
      {"steps", &TrainConfig::steps, false},
      {"seed", &TrainConfig::seed, false},
      {"h", &TrainConfig::h, true},
      {"w", &TrainConfig::w, true},
      {"t", &TrainConfig::t, true},
      {"c", &TrainConfig::c, true},
      {"d", &TrainConfig::d, true},
      {"n_target", &TrainConfig::n_target, true},
      {"n_off", &TrainConfig::n_off, true},
      {"image_patch", &TrainConfig::image_patch, true},
      {"image_channels", &TrainConfig::image_channels, true},
      {"audio_patch", &TrainConfig::audio_patch, true},
      {"audio_freq_bins", &TrainConfig::audio_freq_bins, true},
      {"audio_freq_bands", &TrainConfig::audio_freq_bands, true},
      {"encoder_hidden", &TrainConfig::encoder_hidden, true},
      {"decoder_hidden", &TrainConfig::decoder_hidden, true},
      {"threshold_k", &TrainConfig::threshold_k, false},
      {"threads", &TrainConfig::threads, false},
      {"checkpoint_every", &TrainConfig::checkpoint_every, false},
      {"dataset", &TrainConfig::dataset, false},
  };
  return fields;
}

std::string GetField(const TrainConfig& config, std::string_view name) {
  return std::visit(
      [&](auto pointer) -> std::string {
        const auto& value = config.*pointer;
        if constexpr (std::is_same_v<std::decay_t<decltype(value)>,
                                     std::string>) {
          return value;
        } else {
          return FormatNumber(value);
        }
      },
      Find(name).pointer);
}

void SetField(TrainConfig& config, std::string_view name,
              std::string_view text) {
  text = Trim(text);
  std::visit(
      [&](auto pointer) {
        auto& value = config.*pointer;
        using T = std::decay_t<decltype(value)>;
        if constexpr (std::is_same_v<T, std::string>) {
          value = std::string(text);
        } else {
          value = ParseNumber<T>(name, text);
        }
      },
      Find(name).pointer);
}

void Validate(const TrainConfig& c) {
  RequirePositive("tau", c.tau);
  RequireNonNegative("lambda1", c.lambda1);
  RequireNonNegative("lambda2", c.lambda2);
  RequireNonNegative("lambda3", c.lambda3);
  if (!(c.alpha >= 0.0 && c.alpha <= 1.0)) Fail("alpha must lie in [0, 1]");
  RequireNonNegative("k", c.k);
  RequirePositive("iterations", c.iterations);
  if (!(c.mask_ratio >= 0.0 && c.mask_ratio < 1.0)) {
    Fail("mask_ratio must lie in [0, 1)");
  }
  RequireNonNegative("lr", c.lr);
  RequireNonNegative("weight_decay", c.weight_decay);
  if (c.batch < 2) Fail("batch must be at least 2");
  RequireNonNegative("steps", static_cast<double>(c.steps));
  for (const char* name : {"h", "w", "t", "c", "d", "n_target", "n_off",
                           "image_patch", "image_channels", "audio_patch",
                           "audio_freq_bins", "audio_freq_bands",
                           "encoder_hidden", "decoder_hidden", "threads",
                           "checkpoint_every"}) {
    RequirePositive(name, std::stod(GetField(c, name)));
  }
  if (c.audio_freq_bins % c.audio_freq_bands != 0) {
    Fail("audio_freq_bands must divide audio_freq_bins");
  }
  RequireNonNegative("threshold_k", c.threshold_k);
}

std::string ToKeyValueText(const TrainConfig& config) {
  std::string out;
  for (const FieldInfo& f : Fields()) {
    out += f.name;
    out += '=';
    out += GetField(config, f.name);
    out += '\n';
  }
  return out;
}

void ApplyKeyValueText(TrainConfig& config, std::string_view text,
                       std::string_view source) {
  int line_number = 0;
  while (!text.empty()) {
    ++line_number;
    const auto newline = text.find('\n');
    std::string_view line = text.substr(0, newline);
    text = newline == std::string_view::npos ? std::string_view{}
                                             : text.substr(newline + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      Fail(std::string(source) + ":" + std::to_string(line_number) +
           ": expected key=value");
    }
    SetField(config, Trim(line.substr(0, eq)), line.substr(eq + 1));
  }
}

TrainConfig LoadConfigFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  TrainConfig config;
  ApplyKeyValueText(config, buffer.str(), path.string());
  return config;
}

std::vector<std::string> ArchitectureMismatches(const TrainConfig& a,
                                                const TrainConfig& b) {
  std::vector<std::string> out;
  for (const FieldInfo& f : Fields()) {
    if (f.architecture && GetField(a, f.name) != GetField(b, f.name)) {
      out.push_back(f.name);
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> DeskScaleDeviations(
    const TrainConfig& config) {
  return {
      {"batch", "256 -> " + GetField(config, "batch")},
      {"c", "512 -> " + GetField(config, "c")},
      {"d", "512 -> " + GetField(config, "d")},
      {"k", "20 -> " + GetField(config, "k")},
      {"lr", "5e-5 -> " + GetField(config, "lr")},
      {"steps", "unstated -> " + GetField(config, "steps")},
      {"encoders", "pretrained backbones -> two-layer patch encoders"},
      {"data", "real video datasets -> synthetic benchmark"},
  };
}

}  // namespace jsaloc::harness
