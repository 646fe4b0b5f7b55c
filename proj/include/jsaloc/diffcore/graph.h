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

#ifndef JSALOC_DIFFCORE_GRAPH_H_
#define JSALOC_DIFFCORE_GRAPH_H_

#include <deque>
#include <functional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "jsaloc/diffcore/parameter.h"
#include "jsaloc/diffcore/tensor.h"

namespace jsaloc::diffcore {

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Tensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  Graph* graph() const { return graph_; }
  int id() const { return id_; }
  bool valid() const { return graph_ != nullptr; }

 private:
  friend class Graph;
  Var(Graph* graph, int id) : graph_(graph), id_(id) {}

  Graph* graph_ = nullptr;
  int id_ = -1;
};

// Define-by-run tape. Nodes are appended in creation order, which is a
// topological order, so the reverse pass is a single backwards sweep.
//
// A graph is single-threaded. Parameters are copied into graph-local leaves
// by Bind, so independent graphs over one ParameterStore can run on separate
// threads and merge gradients afterwards.
class Graph {
 public:
  // Called during the reverse sweep with the id of the node being processed.
  using BackwardFn = std::function<void(Graph&, int)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var Constant(Tensor value);
  Var Input(Tensor value, bool requires_grad = true);
  Var Bind(const ParameterStore& store, int index);
  Var Bind(const ParameterStore& store, std::string_view name);

  // Value passes through; gradient does not.
  Var StopGradient(Var x);

  // Used by op implementations. `requires_grad` is normally the OR over the
  // op's inputs; `backward` may be empty when it is false.
  Var Emit(Tensor value, const char* op, bool requires_grad,
           BackwardFn backward);

  // Reverse pass from a scalar root. Intermediate gradients are recomputed on
  // every call; leaf gradients accumulate across calls.
  void Backward(Var root);
  // As above, additionally injecting upstream gradients into arbitrary nodes.
  // `root` may be invalid when only seeds drive the pass.
  void Backward(Var root, std::span<const std::pair<Var, Tensor>> seeds);

  // Adds bound-leaf gradients into `buffer` (indexed like the store).
  void AccumulateParameterGrads(std::vector<Tensor>& buffer) const;
  void AccumulateParameterGrads(ParameterStore& store) const;

  const Tensor& value(int id) const { return nodes_[id].value; }
  Tensor& grad(int id) { return nodes_[id].grad; }
  const Tensor& grad(int id) const { return nodes_[id].grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  const char* op(int id) const { return nodes_[id].op; }
  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    const char* op;
    bool requires_grad;
    bool leaf;
    BackwardFn backward;
  };

  void CheckOwned(Var v) const;

  std::deque<Node> nodes_;
  std::unordered_map<int, int> bound_;  // parameter index -> node id
  const ParameterStore* store_ = nullptr;
};

}  // namespace jsaloc::diffcore

#endif  // JSALOC_DIFFCORE_GRAPH_H_
