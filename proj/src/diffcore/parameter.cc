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

#include "jsaloc/diffcore/parameter.h"

#include "jsaloc/error.h"

namespace jsaloc::diffcore {

Parameter& ParameterStore::Add(std::string name, Tensor value,
                               bool trainable) {
  if (index_.contains(name)) {
    throw Error(ErrorKind::kContract, "duplicate parameter name " + name);
  }
  index_.emplace(name, static_cast<int>(params_.size()));
  Tensor grad = Tensor::ZerosLike(value);
  params_.push_back(Parameter{std::move(name), std::move(value),
                              std::move(grad), trainable});
  return params_.back();
}

bool ParameterStore::Contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

int ParameterStore::IndexOf(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw Error(ErrorKind::kContract,
                "unknown parameter " + std::string(name));
  }
  return it->second;
}

void ParameterStore::ZeroGrad() {
  for (auto& p : params_) p.grad.Fill(0.0);
}

std::vector<Tensor> ParameterStore::MakeGradientBuffer() const {
  std::vector<Tensor> buffer;
  buffer.reserve(params_.size());
  for (const auto& p : params_) buffer.push_back(Tensor::ZerosLike(p.value));
  return buffer;
}

size_t ParameterStore::TotalElements() const {
  size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

}  // namespace jsaloc::diffcore
