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
#include <vector>

#include "tensor/ops.hpp"

namespace pdan::losses {

using tensor::Var;

/// Weights of the composite objectives: lambda scales the classifier
/// discrepancy, beta the node-feature MMD.
struct LossWeights {
  double lambda = 1.0;
  double beta = 1.0;
  void validate() const;
};

/// RBF bandwidths, given as sigma^2 values. In median mode the set is
/// median * multipliers, where the median is taken over pairwise squared
/// distances of the joint batch (1.0 if that median is 0).
struct KernelConfig {
  bool median = true;
  std::vector<double> multipliers = {0.5, 1.0, 2.0};
  std::vector<double> bandwidths;

  static KernelConfig fixed(std::vector<double> sigma2);
  void validate() const;
  /// "median" or a comma-separated list of sigma^2 values.
  static KernelConfig parse(const std::string& text);
  std::string to_string() const;
};

inline constexpr double kProbabilityFloor = 1e-12;

/// -mean_b log(max(probs[b, y_b], 1e-12)).
template <class Real>
Var<Real> cross_entropy(const Var<Real>& probs, std::span<const int> labels);

/// Mean over the batch of the mean over classes of |p1 - p2|.
template <class Real>
Var<Real> discrepancy(const Var<Real>& p1, const Var<Real>& p2);

/// mean_ij (1/|S|) sum_s exp(-||a_i - b_j||^2 / (2 s)) over sigma^2 set S.
/// Fused so that no N x M intermediate survives on the tape.
template <class Real>
Var<Real> rbf_kernel_mean(const Var<Real>& a, const Var<Real>& b, std::span<const double> sigma2);

/// Median of pairwise squared distances over the rows of [a; b], i < j.
template <class Real>
double median_sqdist(const tensor::Tensor<Real>& a, const tensor::Tensor<Real>& b);

/// Biased MMD^2 estimate with a (multi-bandwidth) RBF kernel:
/// mean k(s,s') - 2 mean k(s,t) + mean k(t,t'). The median bandwidth is a
/// constant of the batch (no gradient flows through it).
template <class Real>
Var<Real> mmd_rbf(const Var<Real>& h_source, const Var<Real>& h_target, const KernelConfig& kernel);

/// l_cls - lambda * l_dis (classifier step).
template <class Real>
Var<Real> step1_objective(const Var<Real>& l_cls, const Var<Real>& l_dis, const LossWeights& w);

/// l_cls + lambda * l_dis + beta * l_mmd (feature extractor step).
template <class Real>
Var<Real> step2_objective(const Var<Real>& l_cls, const Var<Real>& l_dis, const Var<Real>& l_mmd,
                          const LossWeights& w);

}  // namespace pdan::losses
