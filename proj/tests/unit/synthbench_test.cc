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
#include <cmath>
#include <fstream>
#include <map>

#include "gtest/gtest.h"
#include "jsaloc/error.h"
#include "testing/test_util.h"

namespace jsaloc::synthbench {
namespace {

using ::jsaloc::testing::TempDir;

int DiscArea(int r) {
  int n = 0;
  for (int y = -r; y <= r; ++y) {
    for (int x = -r; x <= r; ++x) n += x * x + y * y <= r * r;
  }
  return n;
}

SynthConfig SmallConfig() {
  SynthConfig c;
  c.samples = 64;
  c.seed = 11;
  return c;
}

TEST(SynthTest, SameSeedIsBitIdentical) {
  const SynthConfig c = SmallConfig();
  std::vector<SynthSample> a = Generate(c);
  std::vector<SynthSample> b = Generate(c);
  EXPECT_EQ(ContentHash(a), ContentHash(b));
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].image, b[i].image);
    EXPECT_EQ(a[i].audio, b[i].audio);
  }
  SynthConfig other = c;
  other.seed = 12;
  EXPECT_NE(ContentHash(Generate(other)), ContentHash(a));
}

TEST(SynthTest, ClassHistogramIsUniform) {
  SynthConfig c;
  c.samples = 800;
  std::vector<int> cats = AssignCategories(c);
  std::map<int, int> histogram;
  for (int k : cats) ++histogram[k];
  ASSERT_EQ(histogram.size(), 8u);
  for (const auto& [k, n] : histogram) {
    EXPECT_GE(n, 90);
    EXPECT_LE(n, 110);
  }
}

TEST(SynthTest, CleanRegimeHasOnlyTargetContent) {
  SynthConfig c = SmallConfig();
  c.distractor_rate = 0.0;
  c.audio_noise_rate = 0.0;
  for (const SynthSample& s : Generate(c)) {
    EXPECT_TRUE(s.distractors.empty());
    EXPECT_TRUE(s.noise_bands.empty());
    EXPECT_EQ(OracleMask(s), DiscFootprint(s.target, 28));
    // Outside the target only background noise remains.
    for (int i = 0; i < 28 * 28; ++i) {
      if (!s.gt_mask[i]) EXPECT_LT(std::abs(s.image[i]), 8 * c.image_noise);
    }
    for (int f = 0; f < 64; ++f) {
      if (f >= s.signature.freq_begin && f < s.signature.freq_end) continue;
      for (int t = 0; t < 64; ++t) {
        EXPECT_LT(s.audio(f, t), 8 * c.audio_noise);
      }
    }
  }
}

TEST(SynthTest, MaskExcludesVisibleDistractorPixels) {
  SynthConfig c = SmallConfig();
  c.distractor_rate = 1.0;
  int checked = 0;
  for (const SynthSample& s : Generate(c)) {
    ASSERT_FALSE(s.distractors.empty());
    const int area = static_cast<int>(
        std::count(s.gt_mask.begin(), s.gt_mask.end(), 1));
    for (const Placement& p : s.distractors) {
      EXPECT_GE(p.family, c.categories);
      const std::vector<uint8_t> disc = DiscFootprint(p, 28);
      int overlap = 0;
      for (int i = 0; i < 28 * 28; ++i) overlap += disc[i] && s.gt_mask[i];
      EXPECT_LE(10 * overlap, area);
      ++checked;
    }
    EXPECT_EQ(OracleMask(s), DiscFootprint(s.target, 28));
  }
  EXPECT_GT(checked, 64);
}

TEST(SynthTest, MaskAreaWithinRadiusBounds) {
  SynthConfig c;
  c.samples = 800;
  const int lo = DiscArea(c.min_radius);
  const int hi = DiscArea(c.max_radius);
  EXPECT_EQ(lo, 49);
  EXPECT_EQ(hi, 113);
  for (const SynthSample& s : Generate(c)) {
    const int area = static_cast<int>(
        std::count(s.gt_mask.begin(), s.gt_mask.end(), 1));
    EXPECT_GE(area, lo);
    EXPECT_LE(area, hi);
  }
}

TEST(SynthTest, AudioCarriesTheCategoryBand) {
  const SynthConfig c = SmallConfig();
  for (const SynthSample& s : Generate(c)) {
    const NoiseBand band = CategoryBand(s.category, c);
    EXPECT_EQ(s.signature.freq_begin, band.freq_begin);
    EXPECT_GE(s.signature.frame_end - s.signature.frame_begin, 32);
    for (int f = band.freq_begin; f < band.freq_end; ++f) {
      for (int t = s.signature.frame_begin; t < s.signature.frame_end; ++t) {
        EXPECT_GE(s.audio(f, t), 1.0 - 1e-6);
      }
    }
  }
}

TEST(SynthTest, ValuesAreExactlyRepresentableAsFloat) {
  for (const SynthSample& s : Generate(SmallConfig())) {
    for (double v : s.image.flat()) {
      EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
    }
  }
}

TEST(SynthTest, InvalidConfigsAreRejected) {
  SynthConfig c;
  c.categories = 1;
  EXPECT_THROW(Generate(c), Error);
  c = SynthConfig{};
  c.samples = 4;
  EXPECT_THROW(Generate(c), Error);
  c = SynthConfig{};
  c.max_radius = 20;
  EXPECT_THROW(Generate(c), Error);
}

TEST(SynthTest, ImpossiblePlacementIsAGenerationError) {
  SynthConfig c = SmallConfig();
  c.distractor_rate = 1.0;
  c.min_radius = c.max_radius = 13;
  c.distractor_min_radius = c.distractor_max_radius = 13;
  try {
    Generate(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kGeneration);
  }
}

TEST(PersistenceTest, DatasetRoundTripsBitExactly) {
  const auto dir = TempDir("synth_roundtrip");
  std::vector<SynthSample> samples = Generate(SmallConfig());
  SaveDataset(dir, samples);
  std::vector<SynthSample> loaded = LoadDataset(dir);
  ASSERT_EQ(loaded.size(), samples.size());
  EXPECT_EQ(ContentHash(loaded), ContentHash(samples));
  for (size_t i = 0; i < samples.size(); ++i) {
    EXPECT_EQ(loaded[i].distractors.size(), samples[i].distractors.size());
    EXPECT_EQ(loaded[i].target.radius, samples[i].target.radius);
  }
}

TEST(PersistenceTest, FloatArrayHeader) {
  const auto dir = TempDir("synth_header");
  Tensor t(diffcore::Shape{2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6.5});
  WriteFloatArray(dir / "t.f32", t);
  EXPECT_EQ(std::filesystem::file_size(dir / "t.f32"), 16u + 6 * 4);
  std::ifstream in(dir / "t.f32", std::ios::binary);
  char header[16];
  in.read(header, 16);
  EXPECT_EQ(std::string(header, 3), "JSF");
  EXPECT_EQ(header[3], 2);
  EXPECT_EQ(header[4], 2);
  EXPECT_EQ(header[8], 3);
  EXPECT_EQ(header[12], 1);
  EXPECT_EQ(ReadFloatArray(dir / "t.f32"), t);
}

TEST(PersistenceTest, MissingManifestNamesThePath) {
  const auto dir = TempDir("synth_missing");
  try {
    LoadDataset(dir / "nowhere");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("nowhere"), std::string::npos);
  }
}

}  // namespace
}  // namespace jsaloc::synthbench
