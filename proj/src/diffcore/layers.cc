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

#include "jsaloc/diffcore/layers.h"

#include <cmath>

#include "jsaloc/diffcore/ops.h"
#include "jsaloc/error.h"

namespace jsaloc::diffcore {

Tensor GlorotUniform(int fan_in, int fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  Tensor t(Shape{fan_in, fan_out});
  for (double& v : t.flat()) v = UniformRange(rng, -limit, limit);
  return t;
}

void AddLinear(ParameterStore& store, const std::string& prefix, int in,
               int out, Rng& rng) {
  store.Add(prefix + "/weight", GlorotUniform(in, out, rng));
  store.Add(prefix + "/bias", Tensor(Shape{out}));
}

LinearParams BindLinear(Graph& graph, const ParameterStore& store,
                        const std::string& prefix) {
  return {graph.Bind(store, prefix + "/weight"),
          graph.Bind(store, prefix + "/bias")};
}

Var Linear(Var x, const LinearParams& p) {
  return AddRow(MatMul(x, p.weight), p.bias);
}

void AddLayerNorm(ParameterStore& store, const std::string& prefix, int c) {
  store.Add(prefix + "/gain", Tensor(Shape{c}, 1.0));
  store.Add(prefix + "/bias", Tensor(Shape{c}));
}

LayerNormParams BindLayerNorm(Graph& graph, const ParameterStore& store,
                              const std::string& prefix) {
  return {graph.Bind(store, prefix + "/gain"),
          graph.Bind(store, prefix + "/bias")};
}

Var ApplyLayerNorm(Var x, const LayerNormParams& p) {
  return LayerNorm(x, p.gain, p.bias);
}

void AddGru(ParameterStore& store, const std::string& prefix, int d,
            Rng& rng) {
  // Each gate block gets its own Glorot scale.
  Tensor wi(Shape{d, 3 * d});
  Tensor wh(Shape{d, 3 * d});
  for (int block = 0; block < 3; ++block) {
    Tensor bi = GlorotUniform(d, d, rng);
    Tensor bh = GlorotUniform(d, d, rng);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        wi(i, block * d + j) = bi(i, j);
        wh(i, block * d + j) = bh(i, j);
      }
    }
  }
  store.Add(prefix + "/input_weight", std::move(wi));
  store.Add(prefix + "/hidden_weight", std::move(wh));
  store.Add(prefix + "/input_bias", Tensor(Shape{3 * d}));
  store.Add(prefix + "/hidden_bias", Tensor(Shape{3 * d}));
}

GruParams BindGru(Graph& graph, const ParameterStore& store,
                  const std::string& prefix) {
  return {graph.Bind(store, prefix + "/input_weight"),
          graph.Bind(store, prefix + "/hidden_weight"),
          graph.Bind(store, prefix + "/input_bias"),
          graph.Bind(store, prefix + "/hidden_bias")};
}

Var GruCell(Var hidden, Var input, const GruParams& p) {
  if (!hidden.value().SameShape(input.value())) {
    throw Error(ErrorKind::kDimension,
                "gru_cell: hidden " + hidden.value().ShapeString() +
                    " vs input " + input.value().ShapeString());
  }
  const int d = hidden.value().cols();
  if (p.input_weight.value().rows() != d ||
      p.input_weight.value().cols() != 3 * d) {
    throw Error(ErrorKind::kDimension,
                "gru_cell: weights " + p.input_weight.value().ShapeString() +
                    " for state width " + std::to_string(d));
  }
  Var gi = AddRow(MatMul(input, p.input_weight), p.input_bias);
  Var gh = AddRow(MatMul(hidden, p.hidden_weight), p.hidden_bias);
  Var reset = Sigmoid(Add(SliceColumns(gi, 0, d), SliceColumns(gh, 0, d)));
  Var update = Sigmoid(Add(SliceColumns(gi, d, d), SliceColumns(gh, d, d)));
  Var candidate = Tanh(
      Add(SliceColumns(gi, 2 * d, d), Mul(reset, SliceColumns(gh, 2 * d, d))));
  return Add(hidden, Mul(update, Sub(candidate, hidden)));
}

}  // namespace jsaloc::diffcore
