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

#include "jsaloc/diffcore/ops.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "jsaloc/error.h"

namespace jsaloc::diffcore {
namespace {

using RowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

constexpr double kDegenerateNorm = 1e-12;

Graph& SameGraph(Var a, Var b) {
  if (a.graph() == nullptr || a.graph() != b.graph()) {
    throw Error(ErrorKind::kContract, "operands belong to different graphs");
  }
  return *a.graph();
}

Graph& GraphOf(Var a) {
  if (a.graph() == nullptr) {
    throw Error(ErrorKind::kContract, "operand is not attached to a graph");
  }
  return *a.graph();
}

void RequireRank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw Error(ErrorKind::kDimension, std::string(op) +
                                           " expects a matrix, got " +
                                           t.ShapeString());
  }
}

void RequireSameShape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.SameShape(b)) {
    throw Error(ErrorKind::kDimension, std::string(op) + ": shapes " +
                                           a.ShapeString() + " and " +
                                           b.ShapeString() + " differ");
  }
}

ConstMap View(const Tensor& t) {
  return ConstMap(t.flat().data(), t.rows(), t.cols());
}

MutMap View(Tensor& t) { return MutMap(t.flat().data(), t.rows(), t.cols()); }

void AddInto(Tensor& dst, const Tensor& src) {
  for (size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
}

}  // namespace

Var MatMul(Var a, Var b) {
  Graph& g = SameGraph(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  RequireRank2(av, "matmul");
  RequireRank2(bv, "matmul");
  if (av.cols() != bv.rows()) {
    throw Error(ErrorKind::kDimension, "matmul inner dimensions differ: " +
                                           av.ShapeString() + " * " +
                                           bv.ShapeString());
  }
  Tensor out(Shape{av.rows(), bv.cols()});
  View(out).noalias() = View(av) * View(bv);
  const int ia = a.id();
  const int ib = b.id();
  return g.Emit(std::move(out), "matmul",
                g.requires_grad(ia) || g.requires_grad(ib),
                [ia, ib](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  if (gr.requires_grad(ia)) {
                    View(gr.grad(ia)).noalias() +=
                        View(go) * View(gr.value(ib)).transpose();
                  }
                  if (gr.requires_grad(ib)) {
                    View(gr.grad(ib)).noalias() +=
                        View(gr.value(ia)).transpose() * View(go);
                  }
                });
}

Var Transpose(Var a) {
  Graph& g = GraphOf(a);
  const Tensor& av = a.value();
  RequireRank2(av, "transpose");
  Tensor out(Shape{av.cols(), av.rows()});
  View(out) = View(av).transpose();
  const int ia = a.id();
  return g.Emit(std::move(out), "transpose", g.requires_grad(ia),
                [ia](Graph& gr, int self) {
                  View(gr.grad(ia)) += View(gr.grad(self)).transpose();
                });
}

Var Add(Var a, Var b) {
  Graph& g = SameGraph(a, b);
  RequireSameShape(a.value(), b.value(), "add");
  Tensor out = a.value();
  AddInto(out, b.value());
  const int ia = a.id();
  const int ib = b.id();
  return g.Emit(std::move(out), "add",
                g.requires_grad(ia) || g.requires_grad(ib),
                [ia, ib](Graph& gr, int self) {
                  if (gr.requires_grad(ia)) AddInto(gr.grad(ia), gr.grad(self));
                  if (gr.requires_grad(ib)) AddInto(gr.grad(ib), gr.grad(self));
                });
}

Var Sub(Var a, Var b) {
  Graph& g = SameGraph(a, b);
  RequireSameShape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  const int ia = a.id();
  const int ib = b.id();
  return g.Emit(std::move(out), "sub",
                g.requires_grad(ia) || g.requires_grad(ib),
                [ia, ib](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  if (gr.requires_grad(ia)) AddInto(gr.grad(ia), go);
                  if (gr.requires_grad(ib)) {
                    Tensor& gb = gr.grad(ib);
                    for (size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
                  }
                });
}

Var Mul(Var a, Var b) {
  Graph& g = SameGraph(a, b);
  RequireSameShape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const Tensor& bv = b.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const int ia = a.id();
  const int ib = b.id();
  return g.Emit(std::move(out), "mul",
                g.requires_grad(ia) || g.requires_grad(ib),
                [ia, ib](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  if (gr.requires_grad(ia)) {
                    Tensor& ga = gr.grad(ia);
                    const Tensor& bv = gr.value(ib);
                    for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv[i];
                  }
                  if (gr.requires_grad(ib)) {
                    Tensor& gb = gr.grad(ib);
                    const Tensor& av = gr.value(ia);
                    for (size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av[i];
                  }
                });
}

Var Scale(Var x, double factor) {
  Graph& g = GraphOf(x);
  Tensor out = x.value();
  for (size_t i = 0; i < out.size(); ++i) out[i] *= factor;
  const int ix = x.id();
  return g.Emit(std::move(out), "scale", g.requires_grad(ix),
                [ix, factor](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  Tensor& gx = gr.grad(ix);
                  for (size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * factor;
                });
}

Var AddRow(Var x, Var row) {
  Graph& g = SameGraph(x, row);
  const Tensor& xv = x.value();
  const Tensor& rv = row.value();
  RequireRank2(xv, "add_row");
  if (static_cast<int>(rv.size()) != xv.cols() || rv.rank() > 2 ||
      (rv.rank() == 2 && rv.rows() != 1)) {
    throw Error(ErrorKind::kDimension, "add_row: row " + rv.ShapeString() +
                                           " does not broadcast over " +
                                           xv.ShapeString());
  }
  Tensor out = xv;
  const int m = xv.rows();
  const int n = xv.cols();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out(i, j) += rv[j];
  }
  const int ix = x.id();
  const int ir = row.id();
  return g.Emit(std::move(out), "add_row",
                g.requires_grad(ix) || g.requires_grad(ir),
                [ix, ir, m, n](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  if (gr.requires_grad(ix)) AddInto(gr.grad(ix), go);
                  if (gr.requires_grad(ir)) {
                    Tensor& gv = gr.grad(ir);
                    for (int i = 0; i < m; ++i) {
                      for (int j = 0; j < n; ++j) gv[j] += go(i, j);
                    }
                  }
                });
}

Var ScaleRows(Var x, Var w) {
  Graph& g = SameGraph(x, w);
  const Tensor& xv = x.value();
  const Tensor& wv = w.value();
  RequireRank2(xv, "scale_rows");
  if (static_cast<int>(wv.size()) != xv.rows()) {
    throw Error(ErrorKind::kDimension, "scale_rows: weights " +
                                           wv.ShapeString() + " vs " +
                                           xv.ShapeString());
  }
  const int m = xv.rows();
  const int n = xv.cols();
  Tensor out = xv;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out(i, j) *= wv[i];
  }
  const int ix = x.id();
  const int iw = w.id();
  return g.Emit(std::move(out), "scale_rows",
                g.requires_grad(ix) || g.requires_grad(iw),
                [ix, iw, m, n](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  const Tensor& xv = gr.value(ix);
                  const Tensor& wv = gr.value(iw);
                  if (gr.requires_grad(ix)) {
                    Tensor& gx = gr.grad(ix);
                    for (int i = 0; i < m; ++i) {
                      for (int j = 0; j < n; ++j) gx(i, j) += go(i, j) * wv[i];
                    }
                  }
                  if (gr.requires_grad(iw)) {
                    Tensor& gw = gr.grad(iw);
                    for (int i = 0; i < m; ++i) {
                      double acc = 0.0;
                      for (int j = 0; j < n; ++j) acc += go(i, j) * xv(i, j);
                      gw[i] += acc;
                    }
                  }
                });
}

Var Relu(Var x) {
  Graph& g = GraphOf(x);
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
  const int ix = x.id();
  return g.Emit(std::move(out), "relu", g.requires_grad(ix),
                [ix](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  const Tensor& xv = gr.value(ix);
                  Tensor& gx = gr.grad(ix);
                  for (size_t i = 0; i < go.size(); ++i) {
                    if (xv[i] > 0.0) gx[i] += go[i];
                  }
                });
}

Var Sigmoid(Var x) {
  Graph& g = GraphOf(x);
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (size_t i = 0; i < in.size(); ++i) {
    out[i] = in[i] >= 0.0 ? 1.0 / (1.0 + std::exp(-in[i]))
                          : std::exp(in[i]) / (1.0 + std::exp(in[i]));
  }
  const int ix = x.id();
  return g.Emit(std::move(out), "sigmoid", g.requires_grad(ix),
                [ix](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  const Tensor& y = gr.value(self);
                  Tensor& gx = gr.grad(ix);
                  for (size_t i = 0; i < go.size(); ++i) {
                    gx[i] += go[i] * y[i] * (1.0 - y[i]);
                  }
                });
}

Var Tanh(Var x) {
  Graph& g = GraphOf(x);
  const Tensor& in = x.value();
  Tensor out(in.shape());
  for (size_t i = 0; i < in.size(); ++i) out[i] = std::tanh(in[i]);
  const int ix = x.id();
  return g.Emit(std::move(out), "tanh", g.requires_grad(ix),
                [ix](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  const Tensor& y = gr.value(self);
                  Tensor& gx = gr.grad(ix);
                  for (size_t i = 0; i < go.size(); ++i) {
                    gx[i] += go[i] * (1.0 - y[i] * y[i]);
                  }
                });
}

Var SoftmaxRows(Var x) {
  Graph& g = GraphOf(x);
  const Tensor& in = x.value();
  RequireRank2(in, "softmax_rows");
  const int m = in.rows();
  const int n = in.cols();
  Tensor out(in.shape());
  for (int i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (std::isnan(in(i, j))) {
        throw Error(ErrorKind::kNumeric, "softmax_rows: NaN input at row " +
                                             std::to_string(i));
      }
      mx = std::max(mx, in(i, j));
    }
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
      out(i, j) = std::exp(in(i, j) - mx);
      total += out(i, j);
    }
    for (int j = 0; j < n; ++j) out(i, j) /= total;
  }
  const int ix = x.id();
  return g.Emit(std::move(out), "softmax_rows", g.requires_grad(ix),
                [ix, m, n](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  const Tensor& y = gr.value(self);
                  Tensor& gx = gr.grad(ix);
                  for (int i = 0; i < m; ++i) {
                    double dot = 0.0;
                    for (int j = 0; j < n; ++j) dot += go(i, j) * y(i, j);
                    for (int j = 0; j < n; ++j) {
                      gx(i, j) += y(i, j) * (go(i, j) - dot);
                    }
                  }
                });
}

Var NormalizeColumns(Var x) {
  Graph& g = GraphOf(x);
  const Tensor& in = x.value();
  RequireRank2(in, "normalize_columns");
  const int m = in.rows();
  const int n = in.cols();
  std::vector<double> sums(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) sums[j] += in(i, j);
  }
  for (int j = 0; j < n; ++j) {
    if (!(sums[j] >= kDegenerateNorm)) {
      throw Error(ErrorKind::kDegenerateInput,
                  "normalize_columns: column " + std::to_string(j) +
                      " sums to " + std::to_string(sums[j]));
    }
  }
  Tensor out(in.shape());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) out(i, j) = in(i, j) / sums[j];
  }
  const int ix = x.id();
  return g.Emit(std::move(out), "normalize_columns", g.requires_grad(ix),
                [ix, m, n, sums](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  const Tensor& y = gr.value(self);
                  Tensor& gx = gr.grad(ix);
                  for (int j = 0; j < n; ++j) {
                    double dot = 0.0;
                    for (int i = 0; i < m; ++i) dot += go(i, j) * y(i, j);
                    for (int i = 0; i < m; ++i) {
                      gx(i, j) += (go(i, j) - dot) / sums[j];
                    }
                  }
                });
}

Var LayerNorm(Var x, Var gain, Var bias, double epsilon) {
  Graph& g = SameGraph(x, gain);
  SameGraph(x, bias);
  const Tensor& in = x.value();
  RequireRank2(in, "layer_norm");
  const int m = in.rows();
  const int c = in.cols();
  if (c < 2) {
    throw Error(ErrorKind::kDimension, "layer_norm needs at least 2 columns");
  }
  if (static_cast<int>(gain.value().size()) != c ||
      static_cast<int>(bias.value().size()) != c) {
    throw Error(ErrorKind::kDimension,
                "layer_norm: affine parameters " + gain.value().ShapeString() +
                    "/" + bias.value().ShapeString() + " for " +
                    in.ShapeString());
  }
  Tensor normalized(in.shape());
  std::vector<double> inv_std(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    double mean = 0.0;
    for (int j = 0; j < c; ++j) mean += in(i, j);
    mean /= c;
    double var = 0.0;
    for (int j = 0; j < c; ++j) {
      const double d = in(i, j) - mean;
      var += d * d;
    }
    var /= c;
    inv_std[i] = 1.0 / std::sqrt(var + epsilon);
    for (int j = 0; j < c; ++j) normalized(i, j) = (in(i, j) - mean) * inv_std[i];
  }
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  Tensor out(in.shape());
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < c; ++j) out(i, j) = normalized(i, j) * gv[j] + bv[j];
  }
  const int ix = x.id();
  const int ig = gain.id();
  const int ib = bias.id();
  const bool needs =
      g.requires_grad(ix) || g.requires_grad(ig) || g.requires_grad(ib);
  return g.Emit(
      std::move(out), "layer_norm", needs,
      [ix, ig, ib, m, c, normalized = std::move(normalized),
       inv_std = std::move(inv_std)](Graph& gr, int self) {
        const Tensor& go = gr.grad(self);
        const Tensor& gv = gr.value(ig);
        if (gr.requires_grad(ig)) {
          Tensor& gg = gr.grad(ig);
          for (int i = 0; i < m; ++i) {
            for (int j = 0; j < c; ++j) gg[j] += go(i, j) * normalized(i, j);
          }
        }
        if (gr.requires_grad(ib)) {
          Tensor& gb = gr.grad(ib);
          for (int i = 0; i < m; ++i) {
            for (int j = 0; j < c; ++j) gb[j] += go(i, j);
          }
        }
        if (gr.requires_grad(ix)) {
          Tensor& gx = gr.grad(ix);
          for (int i = 0; i < m; ++i) {
            double mean_d = 0.0;
            double mean_dn = 0.0;
            for (int j = 0; j < c; ++j) {
              const double d = go(i, j) * gv[j];
              mean_d += d;
              mean_dn += d * normalized(i, j);
            }
            mean_d /= c;
            mean_dn /= c;
            for (int j = 0; j < c; ++j) {
              const double d = go(i, j) * gv[j];
              gx(i, j) += inv_std[i] * (d - mean_d - normalized(i, j) * mean_dn);
            }
          }
        }
      });
}

Var Sum(Var x) {
  Graph& g = GraphOf(x);
  double total = 0.0;
  for (double v : x.value().flat()) total += v;
  const int ix = x.id();
  return g.Emit(Tensor::Scalar(total), "sum", g.requires_grad(ix),
                [ix](Graph& gr, int self) {
                  const double go = gr.grad(self)[0];
                  for (double& v : gr.grad(ix).flat()) v += go;
                });
}

Var SumSquares(Var x) {
  Graph& g = GraphOf(x);
  double total = 0.0;
  for (double v : x.value().flat()) total += v * v;
  const int ix = x.id();
  return g.Emit(Tensor::Scalar(total), "sum_squares", g.requires_grad(ix),
                [ix](Graph& gr, int self) {
                  const double go = gr.grad(self)[0];
                  const Tensor& xv = gr.value(ix);
                  Tensor& gx = gr.grad(ix);
                  for (size_t i = 0; i < xv.size(); ++i) {
                    gx[i] += 2.0 * go * xv[i];
                  }
                });
}

Var Row(Var x, int r) {
  Graph& g = GraphOf(x);
  const Tensor& in = x.value();
  RequireRank2(in, "row");
  if (r < 0 || r >= in.rows()) {
    throw Error(ErrorKind::kDimension, "row index " + std::to_string(r) +
                                           " out of range for " +
                                           in.ShapeString());
  }
  auto src = in.row(r);
  Tensor out = Tensor::Vector(std::vector<double>(src.begin(), src.end()));
  const int ix = x.id();
  return g.Emit(std::move(out), "row", g.requires_grad(ix),
                [ix, r](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  auto dst = gr.grad(ix).row(r);
                  for (size_t j = 0; j < go.size(); ++j) dst[j] += go[j];
                });
}

Var Column(Var x, int c) {
  Graph& g = GraphOf(x);
  const Tensor& in = x.value();
  RequireRank2(in, "column");
  if (c < 0 || c >= in.cols()) {
    throw Error(ErrorKind::kDimension, "column index " + std::to_string(c) +
                                           " out of range for " +
                                           in.ShapeString());
  }
  const int m = in.rows();
  std::vector<double> values(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) values[i] = in(i, c);
  const int ix = x.id();
  return g.Emit(Tensor::Vector(std::move(values)), "column",
                g.requires_grad(ix), [ix, c, m](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  Tensor& gx = gr.grad(ix);
                  for (int i = 0; i < m; ++i) gx(i, c) += go[i];
                });
}

Var SliceRows(Var x, int begin, int count) {
  Graph& g = GraphOf(x);
  const Tensor& in = x.value();
  RequireRank2(in, "slice_rows");
  if (begin < 0 || count < 0 || begin + count > in.rows()) {
    throw Error(ErrorKind::kDimension, "slice_rows out of range for " +
                                           in.ShapeString());
  }
  const int n = in.cols();
  Tensor out(Shape{count, n});
  for (int i = 0; i < count; ++i) {
    for (int j = 0; j < n; ++j) out(i, j) = in(begin + i, j);
  }
  const int ix = x.id();
  return g.Emit(std::move(out), "slice_rows", g.requires_grad(ix),
                [ix, begin, count, n](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  Tensor& gx = gr.grad(ix);
                  for (int i = 0; i < count; ++i) {
                    for (int j = 0; j < n; ++j) gx(begin + i, j) += go(i, j);
                  }
                });
}

Var SliceColumns(Var x, int begin, int count) {
  Graph& g = GraphOf(x);
  const Tensor& in = x.value();
  RequireRank2(in, "slice_columns");
  if (begin < 0 || count < 0 || begin + count > in.cols()) {
    throw Error(ErrorKind::kDimension, "slice_columns out of range for " +
                                           in.ShapeString());
  }
  const int m = in.rows();
  Tensor out(Shape{m, count});
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < count; ++j) out(i, j) = in(i, begin + j);
  }
  const int ix = x.id();
  return g.Emit(std::move(out), "slice_columns", g.requires_grad(ix),
                [ix, begin, count, m](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  Tensor& gx = gr.grad(ix);
                  for (int i = 0; i < m; ++i) {
                    for (int j = 0; j < count; ++j) gx(i, begin + j) += go(i, j);
                  }
                });
}

Var ConcatRows(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorKind::kDimension, "concat of nothing");
  Graph& g = GraphOf(parts[0]);
  const int n = parts[0].value().cols();
  int total = 0;
  bool needs = false;
  std::vector<int> ids;
  std::vector<int> offsets;
  for (const Var& p : parts) {
    SameGraph(parts[0], p);
    RequireRank2(p.value(), "concat_rows");
    if (p.value().cols() != n) {
      throw Error(ErrorKind::kDimension, "concat_rows: column mismatch");
    }
    ids.push_back(p.id());
    offsets.push_back(total);
    total += p.value().rows();
    needs = needs || g.requires_grad(p.id());
  }
  Tensor out(Shape{total, n});
  for (size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    std::copy(pv.flat().begin(), pv.flat().end(),
              out.flat().begin() + static_cast<long>(offsets[k]) * n);
  }
  return g.Emit(std::move(out), "concat_rows", needs,
                [ids, offsets, n](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  for (size_t k = 0; k < ids.size(); ++k) {
                    if (!gr.requires_grad(ids[k])) continue;
                    Tensor& gp = gr.grad(ids[k]);
                    const size_t base = static_cast<size_t>(offsets[k]) * n;
                    for (size_t i = 0; i < gp.size(); ++i) gp[i] += go[base + i];
                  }
                });
}

Var ConcatColumns(std::span<const Var> parts) {
  if (parts.empty()) throw Error(ErrorKind::kDimension, "concat of nothing");
  Graph& g = GraphOf(parts[0]);
  const int m = parts[0].value().rows();
  int total = 0;
  bool needs = false;
  std::vector<int> ids;
  std::vector<int> offsets;
  std::vector<int> widths;
  for (const Var& p : parts) {
    SameGraph(parts[0], p);
    RequireRank2(p.value(), "concat_columns");
    if (p.value().rows() != m) {
      throw Error(ErrorKind::kDimension, "concat_columns: row mismatch");
    }
    ids.push_back(p.id());
    offsets.push_back(total);
    widths.push_back(p.value().cols());
    total += p.value().cols();
    needs = needs || g.requires_grad(p.id());
  }
  Tensor out(Shape{m, total});
  for (size_t k = 0; k < parts.size(); ++k) {
    const Tensor& pv = parts[k].value();
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < widths[k]; ++j) out(i, offsets[k] + j) = pv(i, j);
    }
  }
  return g.Emit(std::move(out), "concat_columns", needs,
                [ids, offsets, widths, m](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  for (size_t k = 0; k < ids.size(); ++k) {
                    if (!gr.requires_grad(ids[k])) continue;
                    Tensor& gp = gr.grad(ids[k]);
                    for (int i = 0; i < m; ++i) {
                      for (int j = 0; j < widths[k]; ++j) {
                        gp(i, j) += go(i, offsets[k] + j);
                      }
                    }
                  }
                });
}

Var StackRows(std::span<const Var> rows) {
  if (rows.empty()) throw Error(ErrorKind::kDimension, "stack of nothing");
  Graph& g = GraphOf(rows[0]);
  const int n = static_cast<int>(rows[0].value().size());
  const int m = static_cast<int>(rows.size());
  Tensor out(Shape{m, n});
  std::vector<int> ids;
  bool needs = false;
  for (int i = 0; i < m; ++i) {
    SameGraph(rows[0], rows[i]);
    const Tensor& rv = rows[i].value();
    if (static_cast<int>(rv.size()) != n) {
      throw Error(ErrorKind::kDimension, "stack_rows: length mismatch");
    }
    std::copy(rv.flat().begin(), rv.flat().end(), out.row(i).begin());
    ids.push_back(rows[i].id());
    needs = needs || g.requires_grad(rows[i].id());
  }
  return g.Emit(std::move(out), "stack_rows", needs,
                [ids](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  for (size_t i = 0; i < ids.size(); ++i) {
                    if (!gr.requires_grad(ids[i])) continue;
                    Tensor& gp = gr.grad(ids[i]);
                    auto src = go.row(static_cast<int>(i));
                    for (size_t j = 0; j < gp.size(); ++j) gp[j] += src[j];
                  }
                });
}

Var Reshape(Var x, Shape shape) {
  Graph& g = GraphOf(x);
  if (NumElements(shape) != x.value().size()) {
    throw Error(ErrorKind::kDimension, "reshape " + x.value().ShapeString() +
                                           " to " + ShapeToString(shape));
  }
  Tensor out(std::move(shape), x.value().values());
  const int ix = x.id();
  return g.Emit(std::move(out), "reshape", g.requires_grad(ix),
                [ix](Graph& gr, int self) {
                  AddInto(gr.grad(ix), gr.grad(self));
                });
}

Var ReplaceRows(Var x, std::span<const int> rows, Var token) {
  Graph& g = SameGraph(x, token);
  const Tensor& xv = x.value();
  RequireRank2(xv, "replace_rows");
  const int n = xv.cols();
  if (static_cast<int>(token.value().size()) != n) {
    throw Error(ErrorKind::kDimension, "replace_rows: token " +
                                           token.value().ShapeString() +
                                           " for " + xv.ShapeString());
  }
  std::vector<uint8_t> replaced(static_cast<size_t>(xv.rows()), 0);
  for (int r : rows) {
    if (r < 0 || r >= xv.rows()) {
      throw Error(ErrorKind::kDimension, "replace_rows: row out of range");
    }
    replaced[r] = 1;
  }
  Tensor out = xv;
  const Tensor& tv = token.value();
  for (int r = 0; r < xv.rows(); ++r) {
    if (!replaced[r]) continue;
    for (int j = 0; j < n; ++j) out(r, j) = tv[j];
  }
  const int ix = x.id();
  const int it = token.id();
  return g.Emit(std::move(out), "replace_rows",
                g.requires_grad(ix) || g.requires_grad(it),
                [ix, it, n, replaced = std::move(replaced)](Graph& gr,
                                                            int self) {
                  const Tensor& go = gr.grad(self);
                  const int m = static_cast<int>(replaced.size());
                  for (int r = 0; r < m; ++r) {
                    if (replaced[r]) {
                      if (!gr.requires_grad(it)) continue;
                      Tensor& gt = gr.grad(it);
                      for (int j = 0; j < n; ++j) gt[j] += go(r, j);
                    } else if (gr.requires_grad(ix)) {
                      Tensor& gx = gr.grad(ix);
                      for (int j = 0; j < n; ++j) gx(r, j) += go(r, j);
                    }
                  }
                });
}

Var CosineSim(Var x, Var y) {
  Graph& g = SameGraph(x, y);
  const Tensor& xv = x.value();
  const Tensor& yv = y.value();
  if (xv.size() != yv.size()) {
    throw Error(ErrorKind::kDimension, "cosine_sim: " + xv.ShapeString() +
                                           " vs " + yv.ShapeString());
  }
  double dot = 0.0, xx = 0.0, yy = 0.0;
  for (size_t i = 0; i < xv.size(); ++i) {
    dot += xv[i] * yv[i];
    xx += xv[i] * xv[i];
    yy += yv[i] * yv[i];
  }
  const double nx = std::sqrt(xx);
  const double ny = std::sqrt(yy);
  if (!(nx > kDegenerateNorm) || !(ny > kDegenerateNorm)) {
    throw Error(ErrorKind::kDegenerateInput,
                "cosine_sim of a zero-norm vector");
  }
  const double cosv = dot / (nx * ny);
  const int ixx = x.id();
  const int iyy = y.id();
  return g.Emit(
      Tensor::Scalar(cosv), "cosine_sim",
      g.requires_grad(ixx) || g.requires_grad(iyy),
      [ixx, iyy, nx, ny, cosv](Graph& gr, int self) {
        const double go = gr.grad(self)[0];
        const Tensor& xv = gr.value(ixx);
        const Tensor& yv = gr.value(iyy);
        if (gr.requires_grad(ixx)) {
          Tensor& gx = gr.grad(ixx);
          for (size_t i = 0; i < xv.size(); ++i) {
            gx[i] += go * (yv[i] / (nx * ny) - cosv * xv[i] / (nx * nx));
          }
        }
        if (gr.requires_grad(iyy)) {
          Tensor& gy = gr.grad(iyy);
          for (size_t i = 0; i < yv.size(); ++i) {
            gy[i] += go * (xv[i] / (nx * ny) - cosv * yv[i] / (ny * ny));
          }
        }
      });
}

Var NormalizeRowsL2(Var x) {
  Graph& g = GraphOf(x);
  const Tensor& in = x.value();
  RequireRank2(in, "normalize_rows_l2");
  const int m = in.rows();
  const int n = in.cols();
  std::vector<double> norms(static_cast<size_t>(m));
  Tensor out(in.shape());
  for (int i = 0; i < m; ++i) {
    double ss = 0.0;
    for (int j = 0; j < n; ++j) ss += in(i, j) * in(i, j);
    norms[i] = std::sqrt(ss);
    if (!(norms[i] > kDegenerateNorm)) {
      throw Error(ErrorKind::kDegenerateInput,
                  "normalize_rows_l2: row " + std::to_string(i) +
                      " has zero norm");
    }
    for (int j = 0; j < n; ++j) out(i, j) = in(i, j) / norms[i];
  }
  const int ix = x.id();
  return g.Emit(std::move(out), "normalize_rows_l2", g.requires_grad(ix),
                [ix, m, n, norms = std::move(norms)](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  const Tensor& y = gr.value(self);
                  Tensor& gx = gr.grad(ix);
                  for (int i = 0; i < m; ++i) {
                    double dot = 0.0;
                    for (int j = 0; j < n; ++j) dot += go(i, j) * y(i, j);
                    for (int j = 0; j < n; ++j) {
                      gx(i, j) += (go(i, j) - y(i, j) * dot) / norms[i];
                    }
                  }
                });
}

Var MaskedLogSumExpRows(Var x, std::span<const uint8_t> mask) {
  Graph& g = GraphOf(x);
  const Tensor& in = x.value();
  RequireRank2(in, "masked_logsumexp_rows");
  const int m = in.rows();
  const int n = in.cols();
  if (mask.size() != in.size()) {
    throw Error(ErrorKind::kDimension, "masked_logsumexp_rows: mask size");
  }
  std::vector<uint8_t> keep(mask.begin(), mask.end());
  Tensor weights(in.shape());
  std::vector<double> out(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (keep[static_cast<size_t>(i) * n + j]) mx = std::max(mx, in(i, j));
    }
    if (!std::isfinite(mx)) {
      throw Error(ErrorKind::kContract,
                  "masked_logsumexp_rows: row " + std::to_string(i) +
                      " keeps no finite entry");
    }
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
      if (!keep[static_cast<size_t>(i) * n + j]) continue;
      weights(i, j) = std::exp(in(i, j) - mx);
      total += weights(i, j);
    }
    for (int j = 0; j < n; ++j) weights(i, j) /= total;
    out[i] = mx + std::log(total);
  }
  const int ix = x.id();
  return g.Emit(Tensor::Vector(std::move(out)), "masked_logsumexp_rows",
                g.requires_grad(ix),
                [ix, m, n, weights = std::move(weights)](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  Tensor& gx = gr.grad(ix);
                  for (int i = 0; i < m; ++i) {
                    for (int j = 0; j < n; ++j) gx(i, j) += go[i] * weights(i, j);
                  }
                });
}

Var Diagonal(Var x) {
  Graph& g = GraphOf(x);
  const Tensor& in = x.value();
  RequireRank2(in, "diagonal");
  const int n = std::min(in.rows(), in.cols());
  std::vector<double> values(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) values[i] = in(i, i);
  const int ix = x.id();
  return g.Emit(Tensor::Vector(std::move(values)), "diagonal",
                g.requires_grad(ix), [ix, n](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  Tensor& gx = gr.grad(ix);
                  for (int i = 0; i < n; ++i) gx(i, i) += go[i];
                });
}

Var RowMaxOverColumns(Var x, int begin, int count) {
  Graph& g = GraphOf(x);
  const Tensor& in = x.value();
  RequireRank2(in, "row_max");
  if (begin < 0 || count <= 0 || begin + count > in.cols()) {
    throw Error(ErrorKind::kDimension, "row_max column range out of bounds");
  }
  const int m = in.rows();
  std::vector<double> values(static_cast<size_t>(m));
  std::vector<int> argmax(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    argmax[i] = begin;
    for (int j = begin + 1; j < begin + count; ++j) {
      if (in(i, j) > in(i, argmax[i])) argmax[i] = j;
    }
    values[i] = in(i, argmax[i]);
  }
  const int ix = x.id();
  return g.Emit(Tensor::Vector(std::move(values)), "row_max",
                g.requires_grad(ix),
                [ix, m, argmax = std::move(argmax)](Graph& gr, int self) {
                  const Tensor& go = gr.grad(self);
                  Tensor& gx = gr.grad(ix);
                  for (int i = 0; i < m; ++i) gx(i, argmax[i]) += go[i];
                });
}

Var WeightedSum(std::span<const Var> terms, std::span<const double> weights) {
  if (terms.empty() || terms.size() != weights.size()) {
    throw Error(ErrorKind::kDimension, "weighted_sum: terms/weights mismatch");
  }
  Graph& g = GraphOf(terms[0]);
  double total = 0.0;
  bool needs = false;
  std::vector<int> ids;
  std::vector<double> w(weights.begin(), weights.end());
  for (size_t k = 0; k < terms.size(); ++k) {
    SameGraph(terms[0], terms[k]);
    total += w[k] * terms[k].value().item();
    ids.push_back(terms[k].id());
    needs = needs || g.requires_grad(terms[k].id());
  }
  return g.Emit(Tensor::Scalar(total), "weighted_sum", needs,
                [ids, w](Graph& gr, int self) {
                  const double go = gr.grad(self)[0];
                  for (size_t k = 0; k < ids.size(); ++k) {
                    if (gr.requires_grad(ids[k])) gr.grad(ids[k])[0] += go * w[k];
                  }
                });
}

}  // namespace jsaloc::diffcore
