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

#ifndef JSALOC_HARNESS_PARALLEL_H_
#define JSALOC_HARNESS_PARALLEL_H_

#include <functional>

namespace jsaloc::harness {

// Runs body(i) for i in [0, count) on up to `threads` workers. Each index
// runs exactly once; results must be written to per-index slots. The
// exception of the lowest failing index is rethrown after all workers join.
void ParallelFor(int count, int threads, const std::function<void(int)>& body);

}  // namespace jsaloc::harness

#endif  // JSALOC_HARNESS_PARALLEL_H_
