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

#ifndef JSALOC_DIFFCORE_OPS_H_
#define JSALOC_DIFFCORE_OPS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "jsaloc/diffcore/graph.h"

namespace jsaloc::diffcore {

// Differentiable primitives. Every op takes handles from one graph and emits a
// node on it; the backward rule accumulates only into inputs that require
// gradients.

// [m x k] * [k x n] -> [m x n].
Var MatMul(Var a, Var b);
Var Transpose(Var a);

// Elementwise, identical shapes.
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
Var Scale(Var x, double factor);

// x[m x n] + row[n] broadcast over rows. `row` may be rank 1 or [1 x n].
Var AddRow(Var x, Var row);
// x[m x n] with row i multiplied by w[i]; `w` has m elements.
Var ScaleRows(Var x, Var w);

Var Relu(Var x);
Var Sigmoid(Var x);
Var Tanh(Var x);

// Row-wise softmax with max subtraction. NaN input is a numeric error.
Var SoftmaxRows(Var x);
// Divides each column by its sum. A column summing below 1e-12 is a
// degenerate-input error.
Var NormalizeColumns(Var x);

// Row-wise layer normalization with biased variance; gain and bias hold one
// entry per column.
inline constexpr double kLayerNormEpsilon = 1e-5;
Var LayerNorm(Var x, Var gain, Var bias, double epsilon = kLayerNormEpsilon);

Var Sum(Var x);
Var SumSquares(Var x);

// Rank-1 views and slices (copies).
Var Row(Var x, int r);
Var Column(Var x, int c);
Var SliceRows(Var x, int begin, int count);
Var SliceColumns(Var x, int begin, int count);
Var ConcatRows(std::span<const Var> parts);
Var ConcatColumns(std::span<const Var> parts);
// Stacks rank-1 vectors of equal length into a matrix.
Var StackRows(std::span<const Var> rows);
Var Reshape(Var x, Shape shape);

// Copy of x[m x n] whose listed rows are replaced by token[n].
Var ReplaceRows(Var x, std::span<const int> rows, Var token);

// cos(x, y) over flattened inputs. Norms below 1e-12 are degenerate.
Var CosineSim(Var x, Var y);
// Each row scaled to unit L2 norm. Rows below 1e-12 are degenerate.
Var NormalizeRowsL2(Var x);

// out[i] = log sum_{j : mask[i][j]} exp(x[i][j]) for x[m x n]; `mask` is
// row-major m*n and every row must keep at least one entry.
Var MaskedLogSumExpRows(Var x, std::span<const uint8_t> mask);
Var Diagonal(Var x);
// out[i] = max_{begin <= j < begin+count} x[i][j]; the gradient routes to the
// first maximizing column.
Var RowMaxOverColumns(Var x, int begin, int count);

// sum_i weights[i] * terms[i] over scalars.
Var WeightedSum(std::span<const Var> terms, std::span<const double> weights);

}  // namespace jsaloc::diffcore

#endif  // JSALOC_DIFFCORE_OPS_H_
