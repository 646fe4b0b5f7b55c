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

#include "jsaloc/evaluation/evaluation.h"

#include <algorithm>
#include <vector>

#include "gtest/gtest.h"
#include "jsaloc/error.h"
#include "testing/test_util.h"

namespace jsaloc::evaluation {
namespace {

using diffcore::Shape;
using ::jsaloc::testing::RandomTensor;

// Direct trapezoid over the 21-point grid, written out independently.
double ReferenceAuc(const std::vector<double>& scores) {
  double ys[21];
  for (int i = 0; i <= 20; ++i) {
    const double t = i / 20.0;
    int n = 0;
    for (double s : scores) n += s >= t;
    ys[i] = static_cast<double>(n) / scores.size();
  }
  double area = 0;
  for (int i = 0; i < 20; ++i) area += (ys[i] + ys[i + 1]) / 2.0 * 0.05;
  return area;
}

TEST(CiouTest, HandCases) {
  const std::vector<uint8_t> gt = {1, 1, 1, 1, 0, 0};
  EXPECT_EQ(Ciou(gt, gt), 1.0);
  EXPECT_EQ(Ciou(std::vector<uint8_t>{0, 0, 0, 0, 1, 1}, gt), 0.0);
  EXPECT_EQ(Ciou(std::vector<uint8_t>{1, 1, 0, 0, 0, 0}, gt), 0.5);
  const std::vector<uint8_t> empty(6, 0);
  EXPECT_EQ(Ciou(empty, empty), 1.0);
  EXPECT_EQ(Ciou(empty, gt), 0.0);
  EXPECT_THROW(Ciou(std::vector<uint8_t>{1}, gt), Error);
}

TEST(AucTest, ClosedFormValues) {
  EXPECT_NEAR(SuccessAuc(std::vector<double>(5, 1.0)), 1.0, 1e-12);
  EXPECT_NEAR(SuccessAuc(std::vector<double>(5, 0.0)), 0.025, 1e-12);
  EXPECT_NEAR(SuccessAuc(std::vector<double>{0.5}), 0.525, 1e-12);
  // Half the samples at 1, half at 0: success is 1 at t=0 then 0.5.
  EXPECT_NEAR(SuccessAuc(std::vector<double>{0.0, 1.0}), 0.5 + 0.0125, 1e-12);
}

TEST(AucTest, MatchesReferenceTrapezoid) {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> scores(1 + UniformIndex(rng, 40));
    for (double& s : scores) {
      s = Bernoulli(rng, 0.3) ? UniformIndex(rng, 21) / 20.0
                              : Uniform01(rng);
    }
    EXPECT_NEAR(SuccessAuc(scores), ReferenceAuc(scores), 1e-12);
  }
}

TEST(AucTest, RaisingAScoreNeverLowersAuc) {
  Rng rng(2);
  std::vector<double> scores(30);
  for (double& s : scores) s = Uniform01(rng);
  double previous = SuccessAuc(scores);
  for (int i = 0; i < 30; ++i) {
    scores[i] = std::min(1.0, scores[i] + 0.2);
    const double current = SuccessAuc(scores);
    EXPECT_GE(current, previous);
    previous = current;
  }
}

TEST(AucTest, OrderDoesNotMatter) {
  std::vector<double> scores = {0.1, 0.7, 0.35, 0.9, 0.55};
  const double a = SuccessAuc(scores);
  std::reverse(scores.begin(), scores.end());
  EXPECT_EQ(SuccessAuc(scores), a);
}

TEST(MaskScoresTest, HandCases) {
  const std::vector<uint8_t> gt = {1, 1, 1, 1, 0, 0};
  MaskScores perfect = MaskIouFscore(gt, gt);
  EXPECT_EQ(perfect.iou, 1.0);
  EXPECT_EQ(perfect.fscore, 1.0);
  MaskScores none = MaskIouFscore(std::vector<uint8_t>(6, 0), gt);
  EXPECT_EQ(none.iou, 0.0);
  EXPECT_EQ(none.fscore, 0.0);
  MaskScores half = MaskIouFscore(std::vector<uint8_t>{1, 1, 0, 0, 0, 0}, gt);
  EXPECT_EQ(half.iou, 0.5);
  EXPECT_NEAR(half.fscore, 2.0 / 3.0, 1e-15);
}

TEST(RecallTest, OwnPairFirstWithUniqueLabels) {
  Rng rng(3);
  const Tensor x = RandomTensor(Shape{12, 8}, rng);
  std::vector<int> labels(12);
  for (int i = 0; i < 12; ++i) labels[i] = i;
  const int ks[] = {1, 5, 10};
  RecallReport r = RetrievalRecall(x, x, labels, ks);
  for (int k : ks) {
    EXPECT_EQ(r.audio_to_image[k], 1.0);
    EXPECT_EQ(r.image_to_audio[k], 1.0);
  }
}

TEST(RecallTest, HandBuiltFourItemCase) {
  // Unit vectors at angles 0, 10, 90, 100 degrees (images) and 3, 93, 48,
  // 180 degrees (audio).
  auto unit = [](double deg) {
    const double r = deg * 3.14159265358979323846 / 180.0;
    return std::vector<double>{std::cos(r), std::sin(r)};
  };
  Tensor v(Shape{4, 2}), a(Shape{4, 2});
  const double vd[] = {0, 10, 90, 100};
  const double ad[] = {3, 93, 48, 180};
  for (int i = 0; i < 4; ++i) {
    auto u = unit(vd[i]);
    auto w = unit(ad[i]);
    v(i, 0) = u[0];
    v(i, 1) = u[1];
    a(i, 0) = w[0];
    a(i, 1) = w[1];
  }
  const std::vector<int> labels = {0, 1, 0, 1};
  const int ks[] = {1, 2};
  RecallReport r = RetrievalRecall(v, a, labels, ks);
  // audio 0 -> image 0: hit. audio 1 -> image 2 (3 deg, label 0) then image
  // 3 (7 deg): hit at 2. audio 2 -> image 1 (38 deg, label 1) then image 2
  // (42 deg): hit at 2. audio 3 -> image 3 (80 deg): hit.
  EXPECT_DOUBLE_EQ(r.audio_to_image[1], 0.5);
  EXPECT_DOUBLE_EQ(r.audio_to_image[2], 1.0);
  // image 0 -> audio 0: hit. image 1 -> audio 0 then audio 2, both label 0:
  // miss. image 2 -> audio 1 (label 1) then audio 2: hit at 2. image 3 ->
  // audio 1: hit.
  EXPECT_DOUBLE_EQ(r.image_to_audio[1], 0.5);
  EXPECT_DOUBLE_EQ(r.image_to_audio[2], 0.75);
}

TEST(RecallTest, RandomSlotsSitNearClassPrior) {
  Rng rng(4);
  const int m = 2000;
  const Tensor v = RandomTensor(Shape{m, 16}, rng);
  const Tensor a = RandomTensor(Shape{m, 16}, rng);
  std::vector<int> labels(m);
  for (int& l : labels) l = static_cast<int>(UniformIndex(rng, 10));
  const int ks[] = {1, 5, 10};
  RecallReport r = RetrievalRecall(v, a, labels, ks);
  EXPECT_NEAR(r.audio_to_image[1], 0.1, 0.05);
  EXPECT_NEAR(r.image_to_audio[1], 0.1, 0.05);
  EXPECT_LE(r.audio_to_image[1], r.audio_to_image[5]);
  EXPECT_LE(r.audio_to_image[5], r.audio_to_image[10]);
  EXPECT_LE(r.image_to_audio[5], r.image_to_audio[10]);
}

TEST(RecallTest, PermutingSamplesLeavesRecallUnchanged) {
  Rng rng(5);
  const Tensor v = RandomTensor(Shape{30, 4}, rng);
  const Tensor a = RandomTensor(Shape{30, 4}, rng);
  std::vector<int> labels(30);
  for (int i = 0; i < 30; ++i) labels[i] = i % 3;
  const int ks[] = {1, 5};
  RecallReport base = RetrievalRecall(v, a, labels, ks);
  Tensor pv(Shape{30, 4}), pa(Shape{30, 4});
  std::vector<int> pl(30);
  for (int i = 0; i < 30; ++i) {
    const int src = (i * 7) % 30;
    for (int c = 0; c < 4; ++c) {
      pv(i, c) = v(src, c);
      pa(i, c) = a(src, c);
    }
    pl[i] = labels[src];
  }
  RecallReport permuted = RetrievalRecall(pv, pa, pl, ks);
  EXPECT_EQ(base.audio_to_image, permuted.audio_to_image);
  EXPECT_EQ(base.image_to_audio, permuted.image_to_audio);
}

TEST(RecallTest, BadInputsAreRejected) {
  Tensor v = Tensor::FromRows({{1, 0}, {0, 1}});
  Tensor z = Tensor::FromRows({{1, 0}, {0, 0}});
  const std::vector<int> labels = {0, 1};
  const int too_big[] = {3};
  const int one[] = {1};
  EXPECT_THROW(RetrievalRecall(v, v, labels, too_big), Error);
  EXPECT_THROW(RetrievalRecall(v, z, labels, one), Error);
}

TEST(ReportTest, FillsLocalizationMetrics) {
  std::vector<SampleScore> scores = {{0, 1.0, 1.0}, {1, 0.4, 0.5},
                                     {2, 0.6, 0.7}, {3, 0.0, 0.0}};
  EvalReport report;
  FillLocalization(scores, report);
  EXPECT_EQ(report.n_samples, 4);
  EXPECT_DOUBLE_EQ(report.ciou_at_050, 0.5);
  EXPECT_DOUBLE_EQ(report.miou, 0.5);
  EXPECT_DOUBLE_EQ(report.fscore, 0.55);
  EXPECT_NEAR(report.auc, ReferenceAuc({1.0, 0.4, 0.6, 0.0}), 1e-12);
  for (const auto& [key, value] : report.Flatten()) {
    if (key != "n_samples") {
      EXPECT_GE(value, 0.0) << key;
      EXPECT_LE(value, 1.0) << key;
    }
  }
}

}  // namespace
}  // namespace jsaloc::evaluation
