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

#include <cstdint>
#include <span>
#include <vector>

#include "network/params.hpp"

namespace pdan::training {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moments of one tensor, kept in double regardless of
/// the parameter precision.
struct AdamMoments {
  std::vector<double> m, v;
  std::uint64_t steps = 0;
};

/// One Adam step with decoupled weight decay:
///   p <- p - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * p
template <class Real>
void adam_update(std::span<Real> param, std::span<const Real> grad, AdamMoments& state, double lr, double wd,
                 const AdamHyper& hyper = {});

/// Adam over a ModelParams, one moment set per tensor. Only the groups
/// passed to step() are touched.
template <class Real>
class Adam {
 public:
  Adam() = default;
  Adam(const network::ModelParams<Real>& params, AdamHyper hyper = {});

  /// Throws a numerical error naming the parameter group if any gradient in
  /// `groups` is not finite; nothing is updated in that case.
  void step(network::ModelParams<Real>& params, std::span<const network::ParamGroup> groups, double lr, double wd);

  const AdamMoments& moments(std::size_t index) const { return state_.at(index); }

 private:
  AdamHyper hyper_;
  std::vector<AdamMoments> state_;
};

}  // namespace pdan::training
