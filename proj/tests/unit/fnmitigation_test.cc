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

#include "jsaloc/fnmitigation/fnmitigation.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "gtest/gtest.h"
#include "jsaloc/diffcore/graph.h"
#include "jsaloc/error.h"
#include "jsaloc/log.h"
#include "jsaloc/objectives/objectives.h"
#include "testing/oracles.h"
#include "testing/test_util.h"

namespace jsaloc::fnmitigation {
namespace {

using diffcore::Shape;
using ::jsaloc::testing::BruteForceKnn;
using ::jsaloc::testing::BruteForceReciprocal;
using ::jsaloc::testing::Contains;
using ::jsaloc::testing::RandomTensor;

TEST(KnnTest, IdenticalRowsBreakTiesByIndex) {
  Tensor x = Tensor::FromRows({{1, 2}, {1, 2}, {1, 2}});
  IndexLists nn = KnnCosine(x, 1);
  EXPECT_EQ(nn, (IndexLists{{1}, {0}, {0}}));
}

TEST(KnnTest, OrthogonalBasisPicksLowestOtherIndex) {
  Tensor x = Tensor::FromRows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  EXPECT_EQ(KnnCosine(x, 1), (IndexLists{{1}, {0}, {0}}));
}

TEST(KnnTest, MatchesExhaustiveSort) {
  Rng rng(1);
  const Tensor x = RandomTensor(Shape{32, 8}, rng);
  EXPECT_EQ(KnnCosine(x, 5), BruteForceKnn(x, 5));
}

TEST(KnnTest, RejectsBadK) {
  Tensor x = Tensor::FromRows({{1, 0}, {0, 1}});
  EXPECT_THROW(KnnCosine(x, 2), Error);
  EXPECT_THROW(KnnCosine(x, 0), Error);
  Tensor z = Tensor::FromRows({{1, 0}, {0, 0}});
  EXPECT_THROW(KnnCosine(z, 1), Error);
}

TEST(ReciprocalTest, MatchesBruteForceOnRandomBatches) {
  GlobalLogLevel() = LogLevel::kQuiet;
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const int b = 2 + static_cast<int>(UniformIndex(rng, 31));
    const int k = 1 + static_cast<int>(UniformIndex(rng, 20));
    const Tensor v = RandomTensor(Shape{b, 6}, rng);
    const Tensor a = RandomTensor(Shape{b, 6}, rng);
    NeighborSets sets = ReciprocalFilter(v, a, k);
    const int kk = std::min(k, b - 1);
    EXPECT_EQ(sets.k, kk);
    IndexLists rv = BruteForceReciprocal(BruteForceKnn(v, kk));
    IndexLists ra = BruteForceReciprocal(BruteForceKnn(a, kk));
    EXPECT_EQ(sets.reciprocal_image, rv);
    EXPECT_EQ(sets.reciprocal_audio, ra);
    for (int i = 0; i < b; ++i) {
      std::vector<int> both;
      for (int j : rv[i]) {
        if (Contains(ra[i], j)) both.push_back(j);
      }
      EXPECT_EQ(sets.reciprocal[i], both);
      for (int j : sets.reciprocal[i]) {
        EXPECT_TRUE(Contains(sets.reciprocal[j], i));
      }
      for (int j = 0; j < b; ++j) {
        EXPECT_EQ(sets.negative_mask[i * b + j] == 0,
                  i != j && Contains(both, j));
      }
      EXPECT_EQ(sets.negative_mask[i * b + i], 1);
    }
  }
  GlobalLogLevel() = LogLevel::kWarning;
}

TEST(ReciprocalTest, DuplicatedPairIsExcludedBothWays) {
  Rng rng(3);
  Tensor v = RandomTensor(Shape{10, 6}, rng);
  Tensor a = RandomTensor(Shape{10, 6}, rng);
  for (int c = 0; c < 6; ++c) {
    v(7, c) = v(2, c);
    a(7, c) = a(2, c);
  }
  NeighborSets sets = ReciprocalFilter(v, a, 1);
  EXPECT_TRUE(Contains(sets.reciprocal[2], 7));
  EXPECT_TRUE(Contains(sets.reciprocal[7], 2));
  EXPECT_EQ(sets.negative_mask[2 * 10 + 7], 0);
  EXPECT_EQ(sets.negative_mask[7 * 10 + 2], 0);
}

TEST(ReciprocalTest, AgreementInOneModalityIsNotEnough) {
  Rng rng(4);
  const int b = 12;
  Tensor v = RandomTensor(Shape{b, 6}, rng);
  Tensor a = RandomTensor(Shape{b, 6}, rng);
  for (int c = 0; c < 6; ++c) v(5, c) = v(3, c) * 1.01;
  for (int c = 0; c < 6; ++c) {
    a(3, c) = c == 0 ? 1.0 : 0.0;
    a(5, c) = c == 1 ? 1.0 : 0.0;
  }
  NeighborSets sets = ReciprocalFilter(v, a, 1);
  EXPECT_TRUE(Contains(sets.reciprocal_image[3], 5));
  EXPECT_FALSE(Contains(sets.reciprocal[3], 5));
}

TEST(ReciprocalTest, ClampsKAndHandlesSingleton) {
  GlobalLogLevel() = LogLevel::kQuiet;
  EXPECT_EQ(EffectiveK(20, 16), 15);
  EXPECT_EQ(EffectiveK(2, 16), 2);
  EXPECT_EQ(EffectiveK(20, 1), 0);
  Tensor one = Tensor::FromRows({{1, 2}});
  NeighborSets sets = ReciprocalFilter(one, one, 20);
  EXPECT_EQ(sets.negative_mask, (std::vector<uint8_t>{1}));
  GlobalLogLevel() = LogLevel::kWarning;
}

TEST(ReciprocalTest, EmptySetsReproduceUnfilteredLossBitExactly) {
  Rng rng(5);
  const Tensor v = RandomTensor(Shape{16, 8}, rng);
  const Tensor a = RandomTensor(Shape{16, 8}, rng);
  NeighborSets sets = ReciprocalFilter(v, a, 0);
  for (const auto& r : sets.reciprocal) EXPECT_TRUE(r.empty());
  diffcore::Graph g;
  const double masked =
      objectives::ContrastiveLoss(g.Input(v), g.Input(a), 0.03,
                                  sets.negative_mask)
          .value()
          .item();
  const double plain =
      objectives::ContrastiveLoss(g.Input(v), g.Input(a), 0.03).value().item();
  EXPECT_EQ(masked, plain);
}

TEST(ReciprocalTest, MaskedDenominatorsAreSubsets) {
  Rng rng(6);
  const Tensor v = RandomTensor(Shape{16, 4}, rng);
  const Tensor a = RandomTensor(Shape{16, 4}, rng);
  NeighborSets sets = ReciprocalFilter(v, a, 3);
  const std::vector<uint8_t> full = FullNegativeMask(16);
  for (size_t i = 0; i < full.size(); ++i) {
    EXPECT_LE(sets.negative_mask[i], full[i]);
  }
}

TEST(ReciprocalTest, DebugRecordUsesSampleIds) {
  Tensor v = Tensor::FromRows({{1, 0}, {1, 0.01}, {0, 1}});
  NeighborSets sets = ReciprocalFilter(v, v, 1);
  std::ostringstream out;
  const std::vector<int> ids = {40, 41, 42};
  WriteNeighborRecord(out, 9, sets, ids);
  EXPECT_EQ(out.str(),
            "{\"sets\":[{\"id\":40,\"neighbors\":[41]},{\"id\":41,"
            "\"neighbors\":[40]},{\"id\":42,\"neighbors\":[]}],\"step\":9}\n");
}

}  // namespace
}  // namespace jsaloc::fnmitigation
