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

#include "jsaloc/diffcore/tensor.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "jsaloc/error.h"

namespace jsaloc::diffcore {

size_t NumElements(const Shape& shape) {
  size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw Error(ErrorKind::kDimension, "negative dimension");
    n *= static_cast<size_t>(d);
  }
  return n;
}

std::string ShapeToString(const Shape& shape) {
  std::ostringstream out;
  out << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out << "x";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(NumElements(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != NumElements(shape_)) {
    throw Error(ErrorKind::kDimension,
                "tensor data of length " + std::to_string(data_.size()) +
                    " does not fill shape " + ShapeToString(shape_));
  }
}

Tensor Tensor::Scalar(double value) { return Tensor(Shape{}, {value}); }

Tensor Tensor::Vector(std::vector<double> values) {
  const int n = static_cast<int>(values.size());
  return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::Matrix(int rows, int cols, std::vector<double> values) {
  return Tensor(Shape{rows, cols}, std::move(values));
}

Tensor Tensor::FromRows(
    std::initializer_list<std::initializer_list<double>> rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r == 0 ? 0 : static_cast<int>(rows.begin()->size());
  std::vector<double> data;
  data.reserve(static_cast<size_t>(r) * static_cast<size_t>(c));
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != c) {
      throw Error(ErrorKind::kDimension, "ragged rows in FromRows");
    }
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor(Shape{r, c}, std::move(data));
}

Tensor Tensor::ZerosLike(const Tensor& other) { return Tensor(other.shape_); }

int Tensor::rows() const {
  if (rank() == 2) return shape_[0];
  if (rank() == 1) return 1;
  throw Error(ErrorKind::kDimension,
              "rows() on tensor of shape " + ShapeString());
}

int Tensor::cols() const {
  if (rank() == 2) return shape_[1];
  if (rank() == 1) return shape_[0];
  throw Error(ErrorKind::kDimension,
              "cols() on tensor of shape " + ShapeString());
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw Error(ErrorKind::kContract,
                "item() on non-scalar tensor " + ShapeString());
  }
  return data_[0];
}

std::span<const double> Tensor::row(int r) const {
  const size_t c = static_cast<size_t>(cols());
  return std::span<const double>(data_).subspan(static_cast<size_t>(r) * c, c);
}

std::span<double> Tensor::row(int r) {
  const size_t c = static_cast<size_t>(cols());
  return std::span<double>(data_).subspan(static_cast<size_t>(r) * c, c);
}

void Tensor::Fill(double value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::AllFinite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

std::string Tensor::ShapeString() const { return ShapeToString(shape_); }

}  // namespace jsaloc::diffcore
