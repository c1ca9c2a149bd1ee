// Copyright 2026 The pdan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "common/error.hpp"

namespace pdan::tensor {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

/// Dense row-major tensor. A rank-0 shape is a scalar with one element.
///
/// The gradient buffer is allocated lazily and always matches the data shape.
template <class Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() : data_(1, Real(0)) {}
  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(pdan::tensor::numel(shape_), Real(0)) {}
  Tensor(Shape shape, std::vector<Real> data) : shape_(std::move(shape)), data_(std::move(data)) {
    require(pdan::tensor::numel(shape_) == data_.size(), ErrorKind::kDimension,
            "tensor data length " + std::to_string(data_.size()) + " does not match shape " +
                shape_str(shape_));
  }

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, Real v) {
    Tensor t(std::move(shape));
    for (auto& x : t.data_) x = v;
    return t;
  }
  static Tensor scalar(Real v) { return Tensor(Shape{}, std::vector<Real>{v}); }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t numel() const noexcept { return data_.size(); }
  std::size_t rows() const { return shape_.at(0); }
  std::size_t cols() const { return shape_.at(1); }

  std::span<Real> data() noexcept { return data_; }
  std::span<const Real> data() const noexcept { return data_; }
  std::vector<Real>& storage() noexcept { return data_; }
  const std::vector<Real>& storage() const noexcept { return data_; }

  Real& operator[](std::size_t i) { return data_[i]; }
  const Real& operator[](std::size_t i) const { return data_[i]; }
  Real& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  const Real& at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  Real item() const {
    require(data_.size() == 1, ErrorKind::kDimension,
            "item() on tensor of shape " + shape_str(shape_));
    return data_[0];
  }

  void reshape(Shape shape) {
    require(pdan::tensor::numel(shape) == data_.size(), ErrorKind::kDimension,
            "cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
    shape_ = std::move(shape);
  }

  bool requires_grad() const noexcept { return requires_grad_; }
  void set_requires_grad(bool on) { requires_grad_ = on; }

  bool has_grad() const noexcept { return !grad_.empty(); }
  std::span<Real> grad() {
    if (grad_.size() != data_.size()) grad_.assign(data_.size(), Real(0));
    return grad_;
  }
  std::span<const Real> grad() const noexcept { return grad_; }
  void zero_grad() { grad_.assign(data_.size(), Real(0)); }
  void drop_grad() { grad_.clear(); }

 private:
  Shape shape_;
  std::vector<Real> data_;
  std::vector<Real> grad_;
  bool requires_grad_ = false;
};

template <class To, class From>
Tensor<To> cast(const Tensor<From>& t) {
  std::vector<To> out(t.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<To>(t[i]);
  return Tensor<To>(t.shape(), std::move(out));
}

}  // namespace pdan::tensor
