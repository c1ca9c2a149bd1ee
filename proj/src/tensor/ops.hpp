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
#include <cstdint>
#include <span>
#include <vector>

#include "tensor/tape.hpp"

namespace pdan::tensor {

enum class Activation { kRelu, kSigmoid };
enum class ReduceKind { kMax, kMean, kSum };

/// out[t, j] = sum_i x[t, i] * weight[i, j] + bias[j]  (a 1x1 convolution).
template <class Real>
Var<Real> linear(const Var<Real>& x, const Var<Real>& weight, const Var<Real>& bias);

/// max over each group of rows of relu(linear(x)): x holds `groups`
/// consecutive blocks of rows, the result is groups x cout. Equivalent to
/// reduce(relu(linear(x)), max) without materializing the per-row output.
template <class Real>
Var<Real> linear_relu_max(const Var<Real>& x, const Var<Real>& weight, const Var<Real>& bias,
                          std::size_t groups);

/// Elementwise relu or sigmoid. relu'(0) = 0.
template <class Real>
Var<Real> activation(const Var<Real>& x, Activation kind);

template <class Real>
Var<Real> relu(const Var<Real>& x) { return activation(x, Activation::kRelu); }
template <class Real>
Var<Real> sigmoid(const Var<Real>& x) { return activation(x, Activation::kSigmoid); }

/// Reduces one axis away. For kMax the winning index along the axis is
/// written to `argmax` (ties resolve to the lowest index) and the backward
/// pass routes gradient to those positions only.
template <class Real>
Var<Real> reduce(const Var<Real>& x, std::size_t axis, ReduceKind kind,
                 std::vector<std::size_t>* argmax = nullptr);

template <class Real>
Var<Real> sum_all(const Var<Real>& x);
template <class Real>
Var<Real> mean_all(const Var<Real>& x);

/// Row-wise softmax over the last axis of a B x K tensor, max-subtracted.
template <class Real>
Var<Real> softmax(const Var<Real>& x);

template <class Real>
Var<Real> add(const Var<Real>& a, const Var<Real>& b);
template <class Real>
Var<Real> sub(const Var<Real>& a, const Var<Real>& b);
template <class Real>
Var<Real> mul(const Var<Real>& a, const Var<Real>& b);
template <class Real>
Var<Real> scale(const Var<Real>& x, double factor);
template <class Real>
Var<Real> add_scalar(const Var<Real>& x, double c);
template <class Real>
Var<Real> exp(const Var<Real>& x);
template <class Real>
Var<Real> abs(const Var<Real>& x);
/// log(max(x, floor)); no gradient flows where the clamp is active.
template <class Real>
Var<Real> log_clamped(const Var<Real>& x, double floor);

/// out[i, :] = x[i, :] * s[i]. `s` holds one value per row of `x`.
template <class Real>
Var<Real> mul_rows(const Var<Real>& x, const Var<Real>& s);

template <class Real>
Var<Real> reshape(const Var<Real>& x, Shape shape);

/// [a | b] along the column axis of two 2-D tensors with equal row counts.
template <class Real>
Var<Real> concat_cols(const Var<Real>& a, const Var<Real>& b);
/// Stacks 2-D tensors with equal column counts.
template <class Real>
Var<Real> concat_rows(std::span<const Var<Real>> parts);

/// out[m, :] = x[index[m], :]; the backward pass scatter-adds.
template <class Real>
Var<Real> gather_rows(const Var<Real>& x, std::span<const std::uint32_t> index);

/// out[i, j] = ||a[i, :] - b[j, :]||^2.
template <class Real>
Var<Real> pairwise_sqdist(const Var<Real>& a, const Var<Real>& b);

/// 2-D matrix product.
template <class Real>
Var<Real> matmul(const Var<Real>& a, const Var<Real>& b);

/// Dense kernels shared with non-tape code.
namespace kernels {
/// out (m x n) = a (m x k) * b (k x n), row-major; accumulate when `add`.
template <class Real>
void gemm(const Real* a, const Real* b, Real* out, std::size_t m, std::size_t k, std::size_t n,
          bool add = false);
}  // namespace kernels

}  // namespace pdan::tensor
