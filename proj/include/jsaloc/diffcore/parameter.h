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

#ifndef JSALOC_DIFFCORE_PARAMETER_H_
#define JSALOC_DIFFCORE_PARAMETER_H_

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "jsaloc/diffcore/tensor.h"

namespace jsaloc::diffcore {

struct Parameter {
  std::string name;  // slash-separated path, unique within a store
  Tensor value;
  Tensor grad;
  bool trainable = true;
};

// Ordered collection of named parameters. Indices are stable for the lifetime
// of the store; references returned by Add/Get are invalidated by later Adds.
class ParameterStore {
 public:
  Parameter& Add(std::string name, Tensor value, bool trainable = true);

  bool Contains(std::string_view name) const;
  int IndexOf(std::string_view name) const;
  Parameter& Get(std::string_view name) { return params_[IndexOf(name)]; }
  const Parameter& Get(std::string_view name) const {
    return params_[IndexOf(name)];
  }
  Parameter& at(int index) { return params_[index]; }
  const Parameter& at(int index) const { return params_[index]; }
  int size() const { return static_cast<int>(params_.size()); }

  std::vector<Parameter>::iterator begin() { return params_.begin(); }
  std::vector<Parameter>::iterator end() { return params_.end(); }
  std::vector<Parameter>::const_iterator begin() const {
    return params_.begin();
  }
  std::vector<Parameter>::const_iterator end() const { return params_.end(); }

  void ZeroGrad();
  // Zero-filled buffers shaped like each parameter, in store order.
  std::vector<Tensor> MakeGradientBuffer() const;
  size_t TotalElements() const;

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace jsaloc::diffcore

#endif  // JSALOC_DIFFCORE_PARAMETER_H_
