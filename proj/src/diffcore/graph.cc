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

#include "jsaloc/diffcore/graph.h"

#include <algorithm>

#include "jsaloc/error.h"

namespace jsaloc::diffcore {

const Tensor& Var::value() const { return graph_->value(id_); }
const Tensor& Var::grad() const { return graph_->grad(id_); }

Var Graph::Constant(Tensor value) {
  Tensor grad = Tensor::ZerosLike(value);
  nodes_.push_back(
      Node{std::move(value), std::move(grad), "constant", false, true, {}});
  return Var(this, size() - 1);
}

Var Graph::Input(Tensor value, bool requires_grad) {
  Tensor grad = Tensor::ZerosLike(value);
  nodes_.push_back(Node{std::move(value), std::move(grad), "input",
                        requires_grad, true, {}});
  return Var(this, size() - 1);
}

Var Graph::Bind(const ParameterStore& store, int index) {
  if (store_ != nullptr && store_ != &store) {
    throw Error(ErrorKind::kContract,
                "graph already bound to a different parameter store");
  }
  store_ = &store;
  if (auto it = bound_.find(index); it != bound_.end()) {
    return Var(this, it->second);
  }
  const Parameter& p = store.at(index);
  nodes_.push_back(Node{p.value, Tensor::ZerosLike(p.value), "parameter",
                        p.trainable, true, {}});
  bound_.emplace(index, size() - 1);
  return Var(this, size() - 1);
}

Var Graph::Bind(const ParameterStore& store, std::string_view name) {
  return Bind(store, store.IndexOf(name));
}

Var Graph::StopGradient(Var x) {
  CheckOwned(x);
  return Emit(x.value(), "stop_gradient", false, {});
}

Var Graph::Emit(Tensor value, const char* op, bool requires_grad,
                BackwardFn backward) {
  Tensor grad = Tensor::ZerosLike(value);
  nodes_.push_back(Node{std::move(value), std::move(grad), op, requires_grad,
                        false, requires_grad ? std::move(backward) : nullptr});
  return Var(this, size() - 1);
}

void Graph::Backward(Var root) { Backward(root, {}); }

void Graph::Backward(Var root,
                     std::span<const std::pair<Var, Tensor>> seeds) {
  if (root.valid()) {
    CheckOwned(root);
    if (root.value().size() != 1) {
      throw Error(ErrorKind::kContract,
                  "backward root must be scalar, got shape " +
                      root.value().ShapeString());
    }
  }
  for (auto& node : nodes_) {
    if (!node.leaf) node.grad.Fill(0.0);
  }
  if (root.valid() && nodes_[root.id()].requires_grad) {
    nodes_[root.id()].grad[0] += 1.0;
  }
  for (const auto& [node, g] : seeds) {
    CheckOwned(node);
    Tensor& target = nodes_[node.id()].grad;
    if (!g.SameShape(target)) {
      throw Error(ErrorKind::kDimension,
                  "seed gradient " + g.ShapeString() + " for node " +
                      target.ShapeString());
    }
    if (!nodes_[node.id()].requires_grad) continue;
    for (size_t i = 0; i < g.size(); ++i) target[i] += g[i];
  }
  for (int id = size() - 1; id >= 0; --id) {
    Node& node = nodes_[id];
    if (node.requires_grad && node.backward) node.backward(*this, id);
  }
}

void Graph::AccumulateParameterGrads(std::vector<Tensor>& buffer) const {
  for (const auto& [index, id] : bound_) {
    const Tensor& g = nodes_[id].grad;
    Tensor& out = buffer.at(index);
    for (size_t i = 0; i < g.size(); ++i) out[i] += g[i];
  }
}

void Graph::AccumulateParameterGrads(ParameterStore& store) const {
  for (const auto& [index, id] : bound_) {
    const Tensor& g = nodes_[id].grad;
    Tensor& out = store.at(index).grad;
    for (size_t i = 0; i < g.size(); ++i) out[i] += g[i];
  }
}

void Graph::CheckOwned(Var v) const {
  if (v.graph() != this || v.id() < 0 || v.id() >= size()) {
    throw Error(ErrorKind::kContract, "variable does not belong to graph");
  }
}

}  // namespace jsaloc::diffcore
