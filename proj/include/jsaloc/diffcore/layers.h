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

#ifndef JSALOC_DIFFCORE_LAYERS_H_
#define JSALOC_DIFFCORE_LAYERS_H_

#include <string>

#include "jsaloc/diffcore/graph.h"
#include "jsaloc/diffcore/parameter.h"
#include "jsaloc/random.h"

namespace jsaloc::diffcore {

// Composite layers over the primitives in ops.h, with the parameter naming
// convention "<prefix>/<field>".

// Glorot-uniform [fan_in x fan_out] matrix.
Tensor GlorotUniform(int fan_in, int fan_out, Rng& rng);

struct LinearParams {
  Var weight;  // [in x out]
  Var bias;    // [out]
};
void AddLinear(ParameterStore& store, const std::string& prefix, int in,
               int out, Rng& rng);
LinearParams BindLinear(Graph& graph, const ParameterStore& store,
                        const std::string& prefix);
Var Linear(Var x, const LinearParams& p);

struct LayerNormParams {
  Var gain;  // [c], initialized to 1
  Var bias;  // [c], initialized to 0
};
void AddLayerNorm(ParameterStore& store, const std::string& prefix, int c);
LayerNormParams BindLayerNorm(Graph& graph, const ParameterStore& store,
                              const std::string& prefix);
Var ApplyLayerNorm(Var x, const LayerNormParams& p);

// Gate blocks are packed column-wise as [reset | update | candidate].
struct GruParams {
  Var input_weight;   // [d x 3d]
  Var hidden_weight;  // [d x 3d]
  Var input_bias;     // [3d]
  Var hidden_bias;    // [3d]
};
void AddGru(ParameterStore& store, const std::string& prefix, int d,
            Rng& rng);
GruParams BindGru(Graph& graph, const ParameterStore& store,
                  const std::string& prefix);

// Row-wise GRU update on [s x d] states:
//   r = sigmoid(x Wir + bir + h Whr + bhr)
//   z = sigmoid(x Wiz + biz + h Whz + bhz)
//   n = tanh(x Win + bin + r * (h Whn + bhn))
//   h' = (1 - z) * h + z * n
Var GruCell(Var hidden, Var input, const GruParams& p);

}  // namespace jsaloc::diffcore

#endif  // JSALOC_DIFFCORE_LAYERS_H_
