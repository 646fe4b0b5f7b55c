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

#ifndef JSALOC_HARNESS_OPTIMIZER_H_
#define JSALOC_HARNESS_OPTIMIZER_H_

#include <cstdint>
#include <vector>

#include "jsaloc/diffcore/parameter.h"

namespace jsaloc::harness {

struct AdamWConfig {
  double lr = 2e-3;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with decoupled weight decay: every trainable parameter is first
// shrunk by (1 - lr * weight_decay), then moved by the bias-corrected moment
// ratio. Moments are kept in store order.
class AdamW {
 public:
  AdamW() = default;
  AdamW(const diffcore::ParameterStore& store, AdamWConfig config);

  void Step(diffcore::ParameterStore& store);

  const AdamWConfig& config() const { return config_; }
  int64_t steps_taken() const { return steps_taken_; }
  const std::vector<diffcore::Tensor>& first_moments() const { return m_; }
  const std::vector<diffcore::Tensor>& second_moments() const { return v_; }

  // Restores saved state; shapes must match the store.
  void Restore(const diffcore::ParameterStore& store, int64_t steps_taken,
               std::vector<diffcore::Tensor> m,
               std::vector<diffcore::Tensor> v);

 private:
  AdamWConfig config_;
  int64_t steps_taken_ = 0;
  std::vector<diffcore::Tensor> m_;
  std::vector<diffcore::Tensor> v_;
};

}  // namespace jsaloc::harness

#endif  // JSALOC_HARNESS_OPTIMIZER_H_
