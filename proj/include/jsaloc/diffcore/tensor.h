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

#ifndef JSALOC_DIFFCORE_TENSOR_H_
#define JSALOC_DIFFCORE_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace jsaloc::diffcore {

using Shape = std::vector<int>;

// Dense row-major array of doubles. Rank 0 is a scalar, rank 1 a vector and
// rank 2 a matrix; higher ranks are storable but only elementwise ops accept
// them.
class Tensor {
 public:
  Tensor() : data_(1, 0.0) {}
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  static Tensor Scalar(double value);
  static Tensor Vector(std::vector<double> values);
  static Tensor Matrix(int rows, int cols, std::vector<double> values);
  static Tensor FromRows(
      std::initializer_list<std::initializer_list<double>> rows);
  static Tensor ZerosLike(const Tensor& other);

  const Shape& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  size_t size() const { return data_.size(); }

  // Matrix view. Rank-1 tensors read as a single row.
  int rows() const;
  int cols() const;

  double& operator()(int r, int c) { return data_[Offset(r, c)]; }
  double operator()(int r, int c) const { return data_[Offset(r, c)]; }
  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }
  double item() const;

  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }
  std::span<const double> row(int r) const;
  std::span<double> row(int r);
  const std::vector<double>& values() const { return data_; }

  void Fill(double value);
  bool SameShape(const Tensor& other) const { return shape_ == other.shape_; }
  bool AllFinite() const;
  std::string ShapeString() const;

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  size_t Offset(int r, int c) const {
    return static_cast<size_t>(r) * static_cast<size_t>(cols()) +
           static_cast<size_t>(c);
  }

  Shape shape_;
  std::vector<double> data_;
};

std::string ShapeToString(const Shape& shape);
size_t NumElements(const Shape& shape);

}  // namespace jsaloc::diffcore

#endif  // JSALOC_DIFFCORE_TENSOR_H_
