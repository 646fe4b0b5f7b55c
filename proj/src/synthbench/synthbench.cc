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

#include "jsaloc/synthbench/synthbench.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numbers>
#include <string>

#include "jsaloc/error.h"
#include "jsaloc/localization/localization.h"
#include "jsaloc/random.h"
#include "nlohmann/json.hpp"

namespace jsaloc::synthbench {
namespace {

using diffcore::Shape;

constexpr int kMaxAttempts = 100;

double RoundToFloat(double v) { return static_cast<double>(static_cast<float>(v)); }

// Sounding families are gratings with category-specific orientation and
// period, phase-locked to the blob center; silent families are
// checkerboards.
double Texture(int family, int categories, int y, int x, int cy, int cx) {
  if (family < categories) {
    const double angle = std::numbers::pi * (family % 4) / 4.0;
    const double period = 3.0 + 2.0 * (family / 4);
    const double u = (x - cx) * std::cos(angle) + (y - cy) * std::sin(angle);
    return 0.5 + 0.5 * std::cos(2.0 * std::numbers::pi * u / period);
  }
  const int cell = 1 + (family - categories);
  const int parity = ((y - cy + 64) / cell + (x - cx + 64) / cell) % 2;
  return parity ? 0.9 : 0.1;
}

int Count(const std::vector<uint8_t>& mask) {
  return static_cast<int>(std::count(mask.begin(), mask.end(), 1));
}

Placement RandomDisc(Rng& rng, int family, int min_r, int max_r, int size) {
  Placement p;
  p.family = family;
  p.radius = static_cast<int>(UniformInt(rng, min_r, max_r));
  p.cy = static_cast<int>(UniformInt(rng, p.radius, size - 1 - p.radius));
  p.cx = static_cast<int>(UniformInt(rng, p.radius, size - 1 - p.radius));
  return p;
}

void Paint(Tensor& image, const Placement& p, int categories, int size,
           double noise, Rng& rng) {
  const std::vector<uint8_t> disc = DiscFootprint(p, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      if (!disc[y * size + x]) continue;
      image[y * size + x] =
          Texture(p.family, categories, y, x, p.cy, p.cx) +
          noise * Normal(rng);
    }
  }
}

void PaintBand(Tensor& audio, const NoiseBand& band, double noise, Rng& rng) {
  for (int f = band.freq_begin; f < band.freq_end; ++f) {
    for (int t = band.frame_begin; t < band.frame_end; ++t) {
      audio(f, t) = std::max(audio(f, t),
                             band.amplitude + noise * std::abs(Normal(rng)));
    }
  }
}

void RequireRange(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::kConfig, message);
}

std::string FileName(int id, const char* ext) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d.%s", id, ext);
  return buf;
}

}  // namespace

void ValidateSynthConfig(const SynthConfig& c) {
  RequireRange(c.categories >= 2, "need at least 2 categories");
  RequireRange(c.samples >= c.categories,
               "need at least one sample per category");
  RequireRange(c.distractor_rate >= 0 && c.distractor_rate <= 1,
               "distractor_rate must lie in [0, 1]");
  RequireRange(c.audio_noise_rate >= 0 && c.audio_noise_rate <= 1,
               "audio_noise_rate must lie in [0, 1]");
  RequireRange(c.min_radius >= 1 && c.min_radius <= c.max_radius &&
                   2 * c.max_radius + 1 <= c.image_size,
               "target radius range does not fit the image");
  RequireRange(c.distractor_min_radius >= 1 &&
                   c.distractor_min_radius <= c.distractor_max_radius &&
                   2 * c.distractor_max_radius + 1 <= c.image_size,
               "distractor radius range does not fit the image");
  RequireRange(c.silent_families >= 1, "need at least one silent family");
  RequireRange(c.freq_bins >= 2 * c.categories,
               "too few frequency bins for the category bands");
  RequireRange(c.frames >= 16, "need at least 16 frames");
  RequireRange(c.image_noise >= 0 && c.audio_noise >= 0,
               "noise levels must be non-negative");
}

std::vector<uint8_t> DiscFootprint(const Placement& p, int size) {
  std::vector<uint8_t> mask(static_cast<size_t>(size) * size, 0);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const int dy = y - p.cy;
      const int dx = x - p.cx;
      if (dy * dy + dx * dx <= p.radius * p.radius) mask[y * size + x] = 1;
    }
  }
  return mask;
}

NoiseBand CategoryBand(int category, const SynthConfig& config) {
  const int width = config.freq_bins / config.categories;
  const int margin = width >= 4 ? width / 8 + 1 : 0;
  NoiseBand band;
  band.freq_begin = category * width + margin;
  band.freq_end = (category + 1) * width - margin;
  band.amplitude = 1.0;
  return band;
}

std::vector<int> AssignCategories(const SynthConfig& config) {
  ValidateSynthConfig(config);
  std::vector<int> categories(static_cast<size_t>(config.samples));
  for (int i = 0; i < config.samples; ++i) {
    categories[i] = i % config.categories;
  }
  Rng rng(DeriveSeed(config.seed, ~uint64_t{0}));
  for (int i = config.samples - 1; i > 0; --i) {
    const int j = static_cast<int>(UniformIndex(rng, i + 1));
    std::swap(categories[i], categories[j]);
  }
  return categories;
}

SynthSample GenerateSample(const SynthConfig& config, int index,
                           int category) {
  ValidateSynthConfig(config);
  if (category < 0 || category >= config.categories) {
    throw Error(ErrorKind::kConfig, "category out of range");
  }
  Rng rng(DeriveSeed(config.seed, static_cast<uint64_t>(index)));
  const int size = config.image_size;
  SynthSample s;
  s.id = index;
  s.category = category;

  s.image = Tensor(Shape{size, size, 1});
  for (double& v : s.image.flat()) v = config.image_noise * Normal(rng);
  s.target = RandomDisc(rng, category, config.min_radius, config.max_radius,
                        size);
  s.gt_mask = DiscFootprint(s.target, size);
  const int gt_area = Count(s.gt_mask);

  int n_distractors = 0;
  if (Bernoulli(rng, config.distractor_rate)) {
    n_distractors = 1 + (Bernoulli(rng, 0.5) ? 1 : 0);
  }
  for (int k = 0; k < n_distractors; ++k) {
    const int family = config.categories +
                       static_cast<int>(UniformIndex(rng, config.silent_families));
    bool placed = false;
    for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      Placement p = RandomDisc(rng, family, config.distractor_min_radius,
                               config.distractor_max_radius, size);
      const std::vector<uint8_t> disc = DiscFootprint(p, size);
      int overlap = 0;
      for (size_t i = 0; i < disc.size(); ++i) overlap += disc[i] && s.gt_mask[i];
      if (10 * overlap <= gt_area) {
        s.distractors.push_back(p);
        placed = true;
      }
    }
    if (!placed) {
      throw Error(ErrorKind::kGeneration,
                  "sample " + std::to_string(index) +
                      ": no distractor placement after " +
                      std::to_string(kMaxAttempts) + " attempts");
    }
  }
  for (const Placement& p : s.distractors) {
    Paint(s.image, p, config.categories, size, config.image_noise, rng);
  }
  Paint(s.image, s.target, config.categories, size, config.image_noise, rng);

  s.audio = Tensor(Shape{config.freq_bins, config.frames});
  for (double& v : s.audio.flat()) v = config.audio_noise * std::abs(Normal(rng));
  s.signature = CategoryBand(category, config);
  const int length = static_cast<int>(
      UniformInt(rng, config.frames / 2, config.frames));
  s.signature.frame_begin =
      static_cast<int>(UniformInt(rng, 0, config.frames - length));
  s.signature.frame_end = s.signature.frame_begin + length;
  PaintBand(s.audio, s.signature, config.audio_noise, rng);

  if (Bernoulli(rng, config.audio_noise_rate)) {
    const int bands = 1 + (Bernoulli(rng, 0.5) ? 1 : 0);
    for (int k = 0; k < bands; ++k) {
      NoiseBand band;
      const int width = 3;
      band.freq_begin =
          static_cast<int>(UniformInt(rng, 0, config.freq_bins - width));
      band.freq_end = band.freq_begin + width;
      const int len = static_cast<int>(
          UniformInt(rng, config.frames / 8, config.frames / 2));
      band.frame_begin =
          static_cast<int>(UniformInt(rng, 0, config.frames - len));
      band.frame_end = band.frame_begin + len;
      band.amplitude = 0.6;
      PaintBand(s.audio, band, config.audio_noise, rng);
      s.noise_bands.push_back(band);
    }
  }

  for (double& v : s.image.flat()) v = RoundToFloat(v);
  for (double& v : s.audio.flat()) v = RoundToFloat(v);
  return s;
}

std::vector<SynthSample> Generate(const SynthConfig& config) {
  const std::vector<int> categories = AssignCategories(config);
  std::vector<SynthSample> out;
  out.reserve(categories.size());
  for (int i = 0; i < config.samples; ++i) {
    out.push_back(GenerateSample(config, i, categories[i]));
  }
  return out;
}

const std::vector<uint8_t>& OracleMask(const SynthSample& sample) {
  return sample.gt_mask;
}

uint64_t ContentHash(std::span<const SynthSample> samples) {
  uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* data, size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (const SynthSample& s : samples) {
    mix(&s.id, sizeof(s.id));
    mix(&s.category, sizeof(s.category));
    mix(s.image.values().data(), s.image.size() * sizeof(double));
    mix(s.audio.values().data(), s.audio.size() * sizeof(double));
    mix(s.gt_mask.data(), s.gt_mask.size());
  }
  return h;
}

void WriteFloatArray(const std::filesystem::path& path, const Tensor& t) {
  static_assert(std::endian::native == std::endian::little,
                "float arrays are written in host order");
  if (t.rank() < 1 || t.rank() > 3) {
    throw Error(ErrorKind::kDimension,
                "float arrays hold rank 1 to 3, got " + t.ShapeString());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
  const char header[4] = {'J', 'S', 'F', static_cast<char>(t.rank())};
  out.write(header, 4);
  for (int i = 0; i < 3; ++i) {
    const uint32_t dim = i < t.rank() ? static_cast<uint32_t>(t.shape()[i]) : 1;
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
  }
  std::vector<float> data(t.size());
  for (size_t i = 0; i < t.size(); ++i) data[i] = static_cast<float>(t[i]);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
}

Tensor ReadFloatArray(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot read " + path.string());
  char header[4];
  uint32_t dims[3];
  in.read(header, 4);
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  if (!in || header[0] != 'J' || header[1] != 'S' || header[2] != 'F' ||
      header[3] < 1 || header[3] > 3) {
    throw Error(ErrorKind::kIo, path.string() + " is not a float array");
  }
  Shape shape;
  for (int i = 0; i < header[3]; ++i) shape.push_back(static_cast<int>(dims[i]));
  std::vector<float> data(diffcore::NumElements(shape));
  in.read(reinterpret_cast<char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (in.gcount() != static_cast<std::streamsize>(data.size() * sizeof(float))) {
    throw Error(ErrorKind::kIo, path.string() + " is truncated");
  }
  return Tensor(shape, std::vector<double>(data.begin(), data.end()));
}

void SaveDataset(const std::filesystem::path& dir,
                 std::span<const SynthSample> samples) {
  namespace fs = std::filesystem;
  for (const char* sub : {"images", "audio", "masks"}) {
    fs::create_directories(dir / sub);
  }
  std::ofstream manifest(dir / "manifest.jsonl");
  if (!manifest) {
    throw Error(ErrorKind::kIo, "cannot write " + (dir / "manifest.jsonl").string());
  }
  for (const SynthSample& s : samples) {
    const std::string image = "images/" + FileName(s.id, "f32");
    const std::string audio = "audio/" + FileName(s.id, "f32");
    const std::string mask = "masks/" + FileName(s.id, "pgm");
    WriteFloatArray(dir / image, s.image);
    WriteFloatArray(dir / audio, s.audio);
    const int size = s.image.shape()[0];
    localization::WriteMaskPgm(dir / mask, s.gt_mask, size, size);
    nlohmann::json distractors = nlohmann::json::array();
    for (const Placement& p : s.distractors) {
      distractors.push_back({p.family, p.cy, p.cx, p.radius});
    }
    nlohmann::json noise = nlohmann::json::array();
    for (const NoiseBand& b : s.noise_bands) {
      noise.push_back({b.freq_begin, b.freq_end, b.frame_begin, b.frame_end,
                       b.amplitude});
    }
    nlohmann::json line = {
        {"id", s.id},
        {"category", s.category},
        {"mask-file", mask},
        {"image-file", image},
        {"audio-file", audio},
        {"target", {s.target.family, s.target.cy, s.target.cx, s.target.radius}},
        {"signature",
         {s.signature.freq_begin, s.signature.freq_end,
          s.signature.frame_begin, s.signature.frame_end}},
        {"distractors", distractors},
        {"noise_bands", noise}};
    manifest << line.dump() << "\n";
  }
}

std::vector<SynthSample> LoadDataset(const std::filesystem::path& dir) {
  std::ifstream manifest(dir / "manifest.jsonl");
  if (!manifest) {
    throw Error(ErrorKind::kIo,
                "dataset manifest not found: " + (dir / "manifest.jsonl").string());
  }
  std::vector<SynthSample> out;
  std::string line;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kIo, "bad manifest line: " + std::string(e.what()));
    }
    SynthSample s;
    s.id = j.at("id").get<int>();
    s.category = j.at("category").get<int>();
    s.image = ReadFloatArray(dir / j.at("image-file").get<std::string>());
    s.audio = ReadFloatArray(dir / j.at("audio-file").get<std::string>());
    int h = 0, w = 0;
    s.gt_mask = localization::ReadMaskPgm(
        dir / j.at("mask-file").get<std::string>(), &h, &w);
    if (j.contains("target")) {
      const auto& t = j["target"];
      s.target = {t[0], t[1], t[2], t[3]};
    }
    if (j.contains("signature")) {
      const auto& g = j["signature"];
      s.signature = {g[0], g[1], g[2], g[3], 1.0};
    }
    for (const auto& d : j.value("distractors", nlohmann::json::array())) {
      s.distractors.push_back({d[0], d[1], d[2], d[3]});
    }
    for (const auto& b : j.value("noise_bands", nlohmann::json::array())) {
      s.noise_bands.push_back({b[0], b[1], b[2], b[3], b[4]});
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) {
    throw Error(ErrorKind::kIo, "dataset at " + dir.string() + " is empty");
  }
  return out;
}

}  // namespace jsaloc::synthbench
