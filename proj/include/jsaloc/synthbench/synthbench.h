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

#ifndef JSALOC_SYNTHBENCH_SYNTHBENCH_H_
#define JSALOC_SYNTHBENCH_SYNTHBENCH_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "jsaloc/diffcore/tensor.h"

namespace jsaloc::synthbench {

using diffcore::Tensor;

struct SynthConfig {
  int categories = 8;
  int samples = 800;
  uint64_t seed = 1;
  double distractor_rate = 0.5;
  double audio_noise_rate = 0.5;

  int image_size = 28;
  int freq_bins = 64;
  int frames = 64;
  int min_radius = 4;  // target disc
  int max_radius = 6;
  int distractor_min_radius = 3;
  int distractor_max_radius = 5;
  // Texture families that never sound; distractors are drawn from these.
  int silent_families = 2;
  double image_noise = 0.05;
  double audio_noise = 0.05;
};

void ValidateSynthConfig(const SynthConfig& config);

struct Placement {
  int family = 0;  // texture family; < categories for sounding ones
  int cy = 0;
  int cx = 0;
  int radius = 0;
};

struct NoiseBand {
  int freq_begin = 0;
  int freq_end = 0;  // exclusive
  int frame_begin = 0;
  int frame_end = 0;  // exclusive
  double amplitude = 0.0;
};

struct SynthSample {
  int id = 0;
  int category = 0;
  Tensor image;  // [H x W x 1]
  Tensor audio;  // [F x T]
  std::vector<uint8_t> gt_mask;  // H*W, row-major
  Placement target;
  std::vector<Placement> distractors;
  NoiseBand signature;  // the category's band and its active interval
  std::vector<NoiseBand> noise_bands;
};

// Pixels of a disc: (y - cy)^2 + (x - cx)^2 <= r^2, clipped to the image.
std::vector<uint8_t> DiscFootprint(const Placement& p, int size);

// Frequency rows [begin, end) carrying category c's signature.
NoiseBand CategoryBand(int category, const SynthConfig& config);

// Per-sample generation from a seed derived from (seed, index); the category
// sequence is a seeded shuffle of a balanced assignment.
std::vector<int> AssignCategories(const SynthConfig& config);
SynthSample GenerateSample(const SynthConfig& config, int index, int category);
std::vector<SynthSample> Generate(const SynthConfig& config);

const std::vector<uint8_t>& OracleMask(const SynthSample& sample);

// FNV-1a over categories, pixel, spectrogram and mask bytes.
uint64_t ContentHash(std::span<const SynthSample> samples);

// 16-byte header 'J' 'S' 'F' rank, then three little-endian uint32 dims
// (unused dims are 1), then little-endian float32 data.
void WriteFloatArray(const std::filesystem::path& path, const Tensor& t);
Tensor ReadFloatArray(const std::filesystem::path& path);

// <dir>/manifest.jsonl plus images/, audio/ and masks/ (PGM).
void SaveDataset(const std::filesystem::path& dir,
                 std::span<const SynthSample> samples);
std::vector<SynthSample> LoadDataset(const std::filesystem::path& dir);

}  // namespace jsaloc::synthbench

#endif  // JSALOC_SYNTHBENCH_SYNTHBENCH_H_
