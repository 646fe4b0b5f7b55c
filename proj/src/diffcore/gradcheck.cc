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

#include "jsaloc/diffcore/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "jsaloc/diffcore/ops.h"

namespace jsaloc::diffcore {
namespace {

std::vector<size_t> PickEntries(size_t n, int limit, std::mt19937_64& rng) {
  std::vector<size_t> all(n);
  std::iota(all.begin(), all.end(), size_t{0});
  if (limit <= 0 || static_cast<size_t>(limit) >= n) return all;
  // Partial Fisher-Yates, then sorted for a stable report order.
  for (size_t i = 0; i < static_cast<size_t>(limit); ++i) {
    const size_t j = i + rng() % (n - i);
    std::swap(all[i], all[j]);
  }
  all.resize(static_cast<size_t>(limit));
  std::sort(all.begin(), all.end());
  return all;
}

struct Numeric {
  double value;
  bool smooth;
};

// Central differences at h and h/2, halving h until the stencil is clear of
// kinks. Two tests must pass: the h and h/2 estimates agree, and the
// forward/backward asymmetry, which is h * f'' for a smooth function, halves
// with h. A kink close to the point biases both central estimates equally
// but keeps the asymmetry from shrinking. Accepted pairs are combined by
// Richardson extrapolation.
Numeric CentralDifference(const std::function<double(double)>& at,
                          double step) {
  const double f0 = at(0.0);
  const double scale = std::max(1.0, std::abs(f0));
  double h = step;
  double plus = at(h), minus = at(-h);
  while (true) {
    const double half_plus = at(0.5 * h), half_minus = at(-0.5 * h);
    const double coarse = (plus - minus) / (2.0 * h);
    const double fine = (half_plus - half_minus) / h;
    const double coarse_asymmetry = (plus - 2.0 * f0 + minus) / h;
    const double fine_asymmetry = (half_plus - 2.0 * f0 + half_minus) / (0.5 * h);
    const double roundoff = kRoundoffPerStep * scale / (0.5 * h);
    const double tolerance = kSmoothnessTolerance * std::abs(fine) + roundoff;
    if (std::abs(coarse - fine) <= tolerance &&
        std::abs(fine_asymmetry - 0.5 * coarse_asymmetry) <= 4.0 * tolerance) {
      return {(4.0 * fine - coarse) / 3.0, true};
    }
    h *= 0.5;
    if (h < kMinimumStep) return {fine, false};
    plus = half_plus;
    minus = half_minus;
  }
}

void Record(GradCheckResult& result, double analytic, const Numeric& n,
            const std::string& label, size_t index) {
  if (!n.smooth) {
    ++result.nonsmooth_entries;
    return;
  }
  const double numeric = n.value;
  const double rel = RelativeError(analytic, numeric);
  result.max_absolute_error =
      std::max(result.max_absolute_error, std::abs(analytic - numeric));
  if (std::max(std::abs(analytic), std::abs(numeric)) < kNearZeroGradient) {
    ++result.near_zero_entries;
    ++result.entries_checked;
    return;
  }
  if (rel > result.max_relative_error || result.entries_checked == 0) {
    result.max_relative_error = std::max(result.max_relative_error, rel);
    result.worst_entry = label + "[" + std::to_string(index) + "]";
  }
  ++result.entries_checked;
}

}  // namespace

double RelativeError(double analytic, double numeric) {
  return std::abs(analytic - numeric) / (std::abs(analytic) + 1e-8);
}

GradCheckResult CheckInputGradients(const InputFn& fn,
                                    std::vector<Tensor> inputs, double step,
                                    int max_entries_per_input, uint64_t seed) {
  auto evaluate = [&](bool backward, std::vector<Tensor>* grads) {
    Graph graph;
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const Tensor& t : inputs) vars.push_back(graph.Input(t));
    Var out = fn(graph, vars);
    if (backward) {
      graph.Backward(out);
      for (const Var& v : vars) grads->push_back(v.grad());
    }
    return out.value().item();
  };

  std::vector<Tensor> analytic;
  evaluate(true, &analytic);

  std::mt19937_64 rng(seed);
  GradCheckResult result;
  for (size_t k = 0; k < inputs.size(); ++k) {
    for (size_t i : PickEntries(inputs[k].size(), max_entries_per_input, rng)) {
      const double original = inputs[k][i];
      const Numeric n = CentralDifference(
          [&](double offset) {
            inputs[k][i] = original + offset;
            const double value = evaluate(false, nullptr);
            inputs[k][i] = original;
            return value;
          },
          step);
      Record(result, analytic[k][i], n, "input" + std::to_string(k), i);
    }
  }
  return result;
}

GradCheckResult CheckParameterGradients(const ParameterFn& fn,
                                        ParameterStore& store, double step,
                                        int max_entries_per_parameter,
                                        uint64_t seed) {
  std::vector<Tensor> analytic = store.MakeGradientBuffer();
  {
    Graph graph;
    Var out = fn(graph, store);
    graph.Backward(out);
    graph.AccumulateParameterGrads(analytic);
  }
  auto evaluate = [&]() {
    Graph graph;
    return fn(graph, store).value().item();
  };

  std::mt19937_64 rng(seed);
  GradCheckResult result;
  for (int p = 0; p < store.size(); ++p) {
    Parameter& param = store.at(p);
    if (!param.trainable) continue;
    for (size_t i :
         PickEntries(param.value.size(), max_entries_per_parameter, rng)) {
      const double original = param.value[i];
      const Numeric n = CentralDifference(
          [&](double offset) {
            param.value[i] = original + offset;
            const double value = evaluate();
            param.value[i] = original;
            return value;
          },
          step);
      Record(result, analytic[p][i], n, param.name, i);
    }
  }
  return result;
}

Tensor UniformTensor(Shape shape, Rng& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  for (double& v : t.flat()) v = UniformRange(rng, lo, hi);
  return t;
}

Var RandomContraction(Var out, uint64_t seed) {
  Rng rng(seed);
  Var weights = out.graph()->Constant(UniformTensor(out.value().shape(), rng));
  return Sum(Mul(out, weights));
}

}  // namespace jsaloc::diffcore
