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

#ifndef JSALOC_DIFFCORE_GRADCHECK_H_
#define JSALOC_DIFFCORE_GRADCHECK_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "jsaloc/diffcore/graph.h"
#include "jsaloc/diffcore/parameter.h"
#include "jsaloc/random.h"

namespace jsaloc::diffcore {

// Central finite differences against the reverse pass. Each entry starts at
// `step` and halves it until the h and h/2 estimates agree, then uses their
// Richardson combination. The numeric side only
// ever evaluates forward values, so it is independent of every backward rule.

inline constexpr double kFiniteDifferenceStep = 1e-4;

// Entries whose analytic and numeric values are both below this magnitude
// only contribute to the absolute error; their relative error is roundoff.
inline constexpr double kNearZeroGradient = 1e-7;
// Agreement required between the h and h/2 estimates: relative, plus the
// roundoff of a difference quotient of a function of magnitude |f|, which
// is kRoundoffPerStep * max(1, |f|) / h.
inline constexpr double kSmoothnessTolerance = 1e-5;
inline constexpr double kRoundoffPerStep = 1e-13;
// Entries still disagreeing below this step are reported as non-smooth.
inline constexpr double kMinimumStep = 1e-8;

// |analytic - numeric| / (|analytic| + 1e-8).
double RelativeError(double analytic, double numeric);

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  int entries_checked = 0;
  int near_zero_entries = 0;
  // Entries with a kink inside every stencil tried; excluded from the error.
  int nonsmooth_entries = 0;
  std::string worst_entry;  // "<input or parameter>[flat index]"
};

// Builds a scalar from graph inputs holding `inputs`.
using InputFn = std::function<Var(Graph&, std::span<const Var>)>;

// Checks every entry of every input (or a seeded sample of at most
// `max_entries_per_input` entries when it is positive).
GradCheckResult CheckInputGradients(const InputFn& fn,
                                    std::vector<Tensor> inputs,
                                    double step = kFiniteDifferenceStep,
                                    int max_entries_per_input = -1,
                                    uint64_t seed = 0);

// Builds a scalar from a graph that binds parameters of `store`.
using ParameterFn = std::function<Var(Graph&, const ParameterStore&)>;

// Checks trainable parameters of `store`; `store` values are restored on
// return. Entries are sampled per parameter as above.
GradCheckResult CheckParameterGradients(const ParameterFn& fn,
                                        ParameterStore& store,
                                        double step = kFiniteDifferenceStep,
                                        int max_entries_per_parameter = -1,
                                        uint64_t seed = 0);

Tensor UniformTensor(Shape shape, Rng& rng, double lo = -1.0,
                     double hi = 1.0);

// Contracts an output of any shape with a fixed random weight tensor, so one
// scalar check covers the whole Jacobian.
Var RandomContraction(Var out, uint64_t seed);

}  // namespace jsaloc::diffcore

#endif  // JSALOC_DIFFCORE_GRADCHECK_H_
