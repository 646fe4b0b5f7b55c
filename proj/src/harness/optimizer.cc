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

#include "jsaloc/harness/optimizer.h"

#include <cmath>
#include <span>
#include <utility>

#include "jsaloc/error.h"

namespace jsaloc::harness {

AdamW::AdamW(const diffcore::ParameterStore& store, AdamWConfig config)
    : config_(config),
      m_(store.MakeGradientBuffer()),
      v_(store.MakeGradientBuffer()) {}

void AdamW::Step(diffcore::ParameterStore& store) {
  if (static_cast<int>(m_.size()) != store.size()) {
    throw Error(ErrorKind::kContract, "optimizer state does not match store");
  }
  ++steps_taken_;
  const double t = static_cast<double>(steps_taken_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  const double decay = 1.0 - config_.lr * config_.weight_decay;
  for (int i = 0; i < store.size(); ++i) {
    diffcore::Parameter& p = store.at(i);
    if (!p.trainable) continue;
    std::span<double> value = p.value.flat();
    std::span<const double> grad = std::as_const(p.grad).flat();
    std::span<double> m = m_[i].flat();
    std::span<double> v = v_[i].flat();
    for (size_t j = 0; j < value.size(); ++j) {
      const double g = grad[j];
      m[j] = config_.beta1 * m[j] + (1.0 - config_.beta1) * g;
      v[j] = config_.beta2 * v[j] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      value[j] = value[j] * decay -
                 config_.lr * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

void AdamW::Restore(const diffcore::ParameterStore& store,
                    int64_t steps_taken, std::vector<diffcore::Tensor> m,
                    std::vector<diffcore::Tensor> v) {
  if (static_cast<int>(m.size()) != store.size() ||
      static_cast<int>(v.size()) != store.size()) {
    throw Error(ErrorKind::kConfig, "optimizer state size mismatch");
  }
  for (int i = 0; i < store.size(); ++i) {
    if (!m[i].SameShape(store.at(i).value) ||
        !v[i].SameShape(store.at(i).value)) {
      throw Error(ErrorKind::kConfig,
                  "optimizer state shape mismatch at " + store.at(i).name);
    }
  }
  steps_taken_ = steps_taken;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace jsaloc::harness
