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
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>

#include "jsaloc/error.h"

namespace jsaloc::evaluation {
namespace {

void RequireSameSize(std::span<const uint8_t> a, std::span<const uint8_t> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kDimension,
                "mask sizes differ: " + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()));
  }
}

struct Counts {
  size_t pred = 0;
  size_t gt = 0;
  size_t both = 0;
};

Counts Count(std::span<const uint8_t> pred, std::span<const uint8_t> gt) {
  RequireSameSize(pred, gt);
  Counts c;
  for (size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0;
    const bool g = gt[i] != 0;
    c.pred += p;
    c.gt += g;
    c.both += p && g;
  }
  return c;
}

std::vector<double> NormalizedRows(const Tensor& x) {
  std::vector<double> out(x.values());
  for (int i = 0; i < x.rows(); ++i) {
    double ss = 0.0;
    for (double v : x.row(i)) ss += v * v;
    const double norm = std::sqrt(ss);
    if (!(norm > 1e-12)) {
      throw Error(ErrorKind::kDegenerateInput,
                  "retrieval: slot " + std::to_string(i) + " has zero norm");
    }
    for (int c = 0; c < x.cols(); ++c) out[i * x.cols() + c] /= norm;
  }
  return out;
}

// hits[k] for queries in `q` against items in `items`.
std::map<int, double> Recall(const std::vector<double>& q,
                             const std::vector<double>& items, int m, int d,
                             std::span<const int> labels,
                             std::span<const int> ks) {
  std::map<int, double> hits;
  for (int k : ks) hits[k] = 0.0;
  std::vector<double> sim(static_cast<size_t>(m));
  std::vector<int> order(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      double dot = 0.0;
      for (int c = 0; c < d; ++c) dot += q[i * d + c] * items[j * d + c];
      sim[j] = dot;
    }
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return sim[a] > sim[b]; });
    for (int k : ks) {
      for (int r = 0; r < k; ++r) {
        if (labels[order[r]] == labels[i]) {
          hits[k] += 1.0;
          break;
        }
      }
    }
  }
  for (auto& [k, h] : hits) h /= m;
  return hits;
}

}  // namespace

double Ciou(std::span<const uint8_t> pred, std::span<const uint8_t> gt) {
  const Counts c = Count(pred, gt);
  const size_t uni = c.pred + c.gt - c.both;
  if (uni == 0) return 1.0;
  return static_cast<double>(c.both) / static_cast<double>(uni);
}

double SuccessRate(std::span<const double> scores, double threshold) {
  if (scores.empty()) {
    throw Error(ErrorKind::kDegenerateInput, "success rate of no samples");
  }
  size_t n = 0;
  for (double s : scores) n += s >= threshold;
  return static_cast<double>(n) / static_cast<double>(scores.size());
}

double SuccessAuc(std::span<const double> scores) {
  if (scores.empty()) {
    throw Error(ErrorKind::kDegenerateInput, "auc of no samples");
  }
  const double step = 1.0 / kAucSteps;
  double area = 0.0;
  double previous = SuccessRate(scores, 0.0);
  for (int i = 1; i <= kAucSteps; ++i) {
    const double current =
        SuccessRate(scores, static_cast<double>(i) / kAucSteps);
    area += 0.5 * step * (previous + current);
    previous = current;
  }
  return area;
}

MaskScores MaskIouFscore(std::span<const uint8_t> pred,
                         std::span<const uint8_t> gt) {
  const Counts c = Count(pred, gt);
  MaskScores s;
  s.iou = Ciou(pred, gt);
  if (c.pred == 0 && c.gt == 0) {
    s.fscore = 1.0;
    return s;
  }
  const double precision =
      c.pred ? static_cast<double>(c.both) / static_cast<double>(c.pred) : 0;
  const double recall =
      c.gt ? static_cast<double>(c.both) / static_cast<double>(c.gt) : 0;
  s.fscore = precision + recall > 0
                 ? 2.0 * precision * recall / (precision + recall)
                 : 0.0;
  return s;
}

RecallReport RetrievalRecall(const Tensor& image_targets,
                             const Tensor& audio_targets,
                             std::span<const int> labels,
                             std::span<const int> ks) {
  if (!image_targets.SameShape(audio_targets) || image_targets.rank() != 2) {
    throw Error(ErrorKind::kDimension,
                "retrieval: " + image_targets.ShapeString() + " vs " +
                    audio_targets.ShapeString());
  }
  const int m = image_targets.rows();
  const int d = image_targets.cols();
  if (labels.size() != static_cast<size_t>(m)) {
    throw Error(ErrorKind::kDimension, "retrieval: label count mismatch");
  }
  for (int k : ks) {
    if (k < 1 || k > m) {
      throw Error(ErrorKind::kConfig, "retrieval: K = " + std::to_string(k) +
                                          " out of range for " +
                                          std::to_string(m) + " items");
    }
  }
  const std::vector<double> v = NormalizedRows(image_targets);
  const std::vector<double> a = NormalizedRows(audio_targets);
  RecallReport report;
  report.audio_to_image = Recall(a, v, m, d, labels, ks);
  report.image_to_audio = Recall(v, a, m, d, labels, ks);
  return report;
}

std::vector<std::pair<std::string, double>> EvalReport::Flatten() const {
  std::vector<std::pair<std::string, double>> out = {
      {"ciou_at_050", ciou_at_050},
      {"auc", auc},
      {"miou", miou},
      {"fscore", fscore}};
  for (const auto& [k, v] : recall.audio_to_image) {
    out.push_back({"recall_a2v_at_" + std::to_string(k), v});
  }
  for (const auto& [k, v] : recall.image_to_audio) {
    out.push_back({"recall_v2a_at_" + std::to_string(k), v});
  }
  out.push_back({"n_samples", static_cast<double>(n_samples)});
  out.push_back({"iqr", iqr ? 1.0 : 0.0});
  return out;
}

void FillLocalization(std::span<const SampleScore> scores, EvalReport& report) {
  if (scores.empty()) {
    throw Error(ErrorKind::kDegenerateInput, "evaluation over no samples");
  }
  std::vector<double> ious;
  double fsum = 0.0;
  for (const SampleScore& s : scores) {
    ious.push_back(s.ciou);
    fsum += s.fscore;
  }
  report.n_samples = static_cast<int>(scores.size());
  report.ciou_at_050 = SuccessRate(ious, 0.5);
  report.auc = SuccessAuc(ious);
  report.miou = std::accumulate(ious.begin(), ious.end(), 0.0) / ious.size();
  report.fscore = fsum / static_cast<double>(scores.size());
}

void WriteScoresCsv(const std::string& path,
                    std::span<const SampleScore> scores) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  out << "sample_id,ciou\n";
  for (const SampleScore& s : scores) out << s.id << "," << s.ciou << "\n";
}

}  // namespace jsaloc::evaluation
