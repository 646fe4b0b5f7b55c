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

#include "jsaloc/localization/localization.h"

#include <cmath>
#include <fstream>
#include <vector>

#include "gtest/gtest.h"
#include "jsaloc/error.h"
#include "jsaloc/log.h"
#include "jsaloc/jsa/joint_slot_attention.h"
#include "testing/test_util.h"

namespace jsaloc::localization {
namespace {

using diffcore::Graph;
using diffcore::Shape;
using ::jsaloc::testing::RandomTensor;
using ::jsaloc::testing::TempDir;

TEST(CrossModalTest, SumsToOneOverKeys) {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const Tensor q = RandomTensor(Shape{2, 8}, rng, -2, 2);
    const Tensor k = RandomTensor(Shape{49, 8}, rng, -2, 2);
    std::vector<double> ca = CrossModalAttention(q, k, 1);
    ASSERT_EQ(ca.size(), 49u);
    double s = 0;
    for (double v : ca) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(CrossModalTest, EqualsIntraModalMapForSameQueries) {
  Rng rng(2);
  Graph g;
  const Tensor q = RandomTensor(Shape{2, 4}, rng);
  const Tensor k = RandomTensor(Shape{7, 4}, rng);
  jsa::AttentionMaps maps = jsa::ComputeAttention(g.Input(k), g.Input(q));
  std::vector<double> ca = CrossModalAttention(q, k, 1);
  for (int r = 0; r < 7; ++r) {
    EXPECT_EQ(ca[r], maps.normalized.value()(r, 0));
  }
}

TEST(CrossModalTest, IdenticalQueriesGiveUniformMap) {
  Rng rng(6);
  const Tensor row = RandomTensor(Shape{1, 4}, rng);
  Tensor q(Shape{2, 4});
  for (int c = 0; c < 4; ++c) q(0, c) = q(1, c) = row[c];
  std::vector<double> ca =
      CrossModalAttention(q, RandomTensor(Shape{9, 4}, rng), 1);
  for (double v : ca) EXPECT_NEAR(v, 1.0 / 9.0, 1e-15);
}

TEST(CrossModalTest, AlignedKeyTakesAlmostAllMass) {
  const Tensor q = Tensor::FromRows({{20, 0, 0, 0}, {0, 0, 0, 20}});
  const Tensor k = Tensor::FromRows(
      {{0, 0, 0, 1}, {1, 0, 0, 0}, {0, 0, 1, 1}, {0, 1, 0, 1}});
  std::vector<double> ca = CrossModalAttention(q, k, 1);
  EXPECT_GT(ca[1], 0.9);
  // Oracle: softmax over slots per key, then normalize the target column.
  std::vector<double> raw(4);
  double total = 0;
  for (int i = 0; i < 4; ++i) {
    double l0 = 0, l1 = 0;
    for (int c = 0; c < 4; ++c) {
      l0 += k(i, c) * q(0, c) / 2.0;
      l1 += k(i, c) * q(1, c) / 2.0;
    }
    raw[i] = 1.0 / (1.0 + std::exp(l1 - l0));
    total += raw[i];
  }
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(ca[i], raw[i] / total, 1e-12);
}

TEST(CrossModalTest, PermutingKeysPermutesMap) {
  Rng rng(7);
  const Tensor q = RandomTensor(Shape{2, 4}, rng);
  const Tensor k = RandomTensor(Shape{5, 4}, rng);
  const int perm[] = {3, 0, 4, 1, 2};
  Tensor shuffled(Shape{5, 4});
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 4; ++c) shuffled(r, c) = k(perm[r], c);
  }
  std::vector<double> a = CrossModalAttention(q, k, 1);
  std::vector<double> b = CrossModalAttention(q, shuffled, 1);
  for (int r = 0; r < 5; ++r) EXPECT_NEAR(b[r], a[perm[r]], 1e-15);
}

TEST(CrossModalTest, TargetCountOutOfRangeIsAConfigError) {
  Rng rng(3);
  EXPECT_THROW(CrossModalAttention(RandomTensor(Shape{2, 4}, rng),
                                   RandomTensor(Shape{5, 4}, rng), 3),
               Error);
}

TEST(RefineTest, AlphaOneIsCrossModalAlphaZeroIsIntraModal) {
  const std::vector<double> ca = {0.1, 0.2, 0.7};
  const std::vector<double> ia = {0.5, 0.3, 0.2};
  EXPECT_EQ(RefineIqr(ca, ia, 1.0), ca);
  EXPECT_EQ(RefineIqr(ca, ia, 0.0), ia);
  std::vector<double> mid = RefineIqr(ca, ia, 0.5);
  EXPECT_DOUBLE_EQ(mid[0], 0.3);
  EXPECT_DOUBLE_EQ(mid[2], 0.45);
}

TEST(RefineTest, DefaultAlphaHandExample) {
  const std::vector<double> ca = {0.8, 0.2};
  const std::vector<double> ia = {0.2, 0.8};
  std::vector<double> out = RefineIqr(ca, ia, 0.6);
  EXPECT_NEAR(out[0], 0.56, 1e-15);
  EXPECT_NEAR(out[1], 0.44, 1e-15);
}

TEST(RefineTest, BadAlphaOrLengthIsRejected) {
  const std::vector<double> a = {0.5, 0.5};
  const std::vector<double> b = {1.0};
  EXPECT_THROW(RefineIqr(a, a, 1.5), Error);
  EXPECT_THROW(RefineIqr(a, a, -0.1), Error);
  EXPECT_THROW(RefineIqr(a, b, 0.5), Error);
}

TEST(UpsampleTest, TwoByTwoToFourByFourMatchesHandValues) {
  Tensor heat = Tensor::FromRows({{1, 0}, {0, 0}});
  Tensor up = UpsampleBilinear(heat, 4, 4);
  EXPECT_DOUBLE_EQ(up(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(up(0, 1), 0.75);
  EXPECT_DOUBLE_EQ(up(1, 1), 0.5625);
  EXPECT_DOUBLE_EQ(up(1, 2), 0.1875);
  EXPECT_DOUBLE_EQ(up(2, 2), 0.0625);
  EXPECT_DOUBLE_EQ(up(3, 3), 0.0);
}

TEST(UpsampleTest, ConstantMapStaysConstant) {
  Tensor heat(Shape{7, 7}, 0.25);
  Tensor up = UpsampleBilinear(heat, 28, 28);
  for (double v : up.flat()) EXPECT_DOUBLE_EQ(v, 0.25);
}

TEST(UpsampleTest, StaysWithinSourceRange) {
  Rng rng(4);
  Tensor heat = RandomTensor(Shape{7, 7}, rng, 0, 1);
  double lo = 1, hi = 0;
  for (double v : heat.flat()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : UpsampleBilinear(heat, 28, 28).flat()) {
    EXPECT_GE(v, lo - 1e-15);
    EXPECT_LE(v, hi + 1e-15);
  }
}

TEST(UpsampleTest, SameSizeIsIdentity) {
  Rng rng(5);
  Tensor heat = RandomTensor(Shape{5, 3}, rng);
  EXPECT_EQ(UpsampleBilinear(heat, 5, 3), heat);
}

TEST(ThresholdTest, KeepsStrictlyGreaterPixels) {
  Tensor heat = Tensor::FromRows({{0.1, 0.2}, {0.3, 0.4}});
  LocalizationMap map = UpsampleAndThreshold(heat, 2, 2, 0.2);
  EXPECT_EQ(map.mask, (std::vector<uint8_t>{0, 0, 1, 1}));
  EXPECT_EQ(map.theta, 0.2);
}

TEST(ThresholdTest, ThresholdBelowMinimumSelectsEverything) {
  GlobalLogLevel() = LogLevel::kQuiet;
  Tensor heat = Tensor::FromRows({{0.1, 0.2}, {0.3, 0.4}});
  LocalizationMap all = UpsampleAndThreshold(heat, 4, 4, 0.0);
  for (uint8_t m : all.mask) EXPECT_EQ(m, 1);
  LocalizationMap none = UpsampleAndThreshold(heat, 4, 4, 1.0);
  for (uint8_t m : none.mask) EXPECT_EQ(m, 0);
  GlobalLogLevel() = LogLevel::kWarning;
}

TEST(ThresholdTest, RaisingThetaNeverGrowsTheMask) {
  GlobalLogLevel() = LogLevel::kQuiet;
  Rng rng(8);
  const Tensor heat = RandomTensor(Shape{7, 7}, rng, 0, 1);
  std::vector<uint8_t> previous(28 * 28, 1);
  for (int step = 0; step <= 20; ++step) {
    LocalizationMap map = UpsampleAndThreshold(heat, 28, 28, step / 20.0);
    for (size_t i = 0; i < previous.size(); ++i) {
      EXPECT_LE(map.mask[i], previous[i]);
    }
    previous = map.mask;
  }
  GlobalLogLevel() = LogLevel::kWarning;
}

TEST(ThresholdTest, MeanPlusStdPolicy) {
  Tensor up = Tensor::FromRows({{0, 0}, {0, 4}});
  EXPECT_DOUBLE_EQ(ResolveThreshold(up, ThresholdPolicy::MeanPlusStd(1.0)),
                   1.0 + std::sqrt(3.0));
  EXPECT_DOUBLE_EQ(ResolveThreshold(up, ThresholdPolicy::Absolute(0.3)), 0.3);
}

TEST(PgmTest, RoundTripsMask) {
  auto dir = TempDir("pgm");
  std::vector<uint8_t> mask = {1, 0, 0, 1, 1, 1};
  WriteMaskPgm(dir / "m.pgm", mask, 2, 3);
  int h = 0, w = 0;
  EXPECT_EQ(ReadMaskPgm(dir / "m.pgm", &h, &w), mask);
  EXPECT_EQ(h, 2);
  EXPECT_EQ(w, 3);
  EXPECT_THROW(WriteMaskPgm(dir / "bad.pgm", mask, 2, 2), Error);
  EXPECT_THROW(ReadMaskPgm(dir / "missing.pgm", &h, &w), Error);
}

TEST(CsvTest, WritesOneLinePerRow) {
  auto dir = TempDir("csv");
  WriteHeatCsv(dir / "h.csv", Tensor::FromRows({{0.5, 1}, {2, 3}}));
  std::ifstream in(dir / "h.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "0.5,1");
  std::getline(in, line);
  EXPECT_EQ(line, "2,3");
}

}  // namespace
}  // namespace jsaloc::localization
