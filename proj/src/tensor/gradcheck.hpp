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
#include <functional>
#include <string>
#include <vector>

#include "tensor/tape.hpp"

namespace pdan::tensor {

struct GradcheckOptions {
  double eps = 1e-5;
  double tol = 1e-5;
  /// Lower bound on the error denominator max(|analytic|, |numeric|), so
  /// near-zero gradients are rated by absolute error against tol * floor.
  double denom_floor = 1e-8;
  /// Per-tensor cap on checked coordinates (0 = all); a seeded subset is
  /// drawn when the cap is smaller than the tensor.
  std::size_t max_coords_per_tensor = 0;
  std::uint64_t seed = 0;
};

struct GradcheckReport {
  std::string name;
  std::size_t checked = 0;
  /// Coordinates where +-eps crossed a kink (branch signature changed).
  std::size_t skipped = 0;
  std::vector<std::size_t> skipped_coords;
  double max_abs_err = 0.0;
  double max_rel_err = 0.0;
  /// Tensor index and coordinate of the worst relative error.
  std::size_t worst_tensor = 0;
  std::size_t worst_coord = 0;
  bool passed = false;
};

/// Builds a scalar function on a fresh tape; inputs are the watched tensors.
template <class Real>
using ScalarFn = std::function<Var<Real>(Tape<Real>&, const std::vector<Var<Real>>&)>;

/// Compares reverse-mode gradients of `f` w.r.t. every tensor in `inputs`
/// against central differences (f(x+eps) - f(x-eps)) / (2 eps).
template <class Real>
GradcheckReport gradcheck(const ScalarFn<Real>& f, std::vector<Tensor<Real>*> inputs,
                          const GradcheckOptions& opt, std::string name = {});

/// Single-input convenience overload; `x` is left unchanged.
template <class Real>
GradcheckReport gradcheck(const std::function<Var<Real>(Tape<Real>&, const Var<Real>&)>& f,
                          Tensor<Real> x, double eps, double tol);

}  // namespace pdan::tensor
