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

#ifndef JSALOC_HARNESS_GRADSUITE_H_
#define JSALOC_HARNESS_GRADSUITE_H_

#include <cstdint>
#include <string>
#include <vector>

namespace jsaloc::harness {

struct GradSuiteRow {
  std::string name;
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  int entries = 0;
  int nonsmooth_entries = 0;
  std::string worst_entry;
};

// Central finite differences for every differentiable operation, the model
// components, and the full training objective at random initialization
// (three seeds derived from `seed`).
std::vector<GradSuiteRow> RunGradientSuite(uint64_t seed);

// Just the full-objective rows.
std::vector<GradSuiteRow> RunObjectiveGradientChecks(uint64_t seed,
                                                     int seeds = 3);

}  // namespace jsaloc::harness

#endif  // JSALOC_HARNESS_GRADSUITE_H_
