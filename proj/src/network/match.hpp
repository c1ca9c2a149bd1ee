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
#include <vector>

#include "tensor/tensor.hpp"

namespace pdan::network {

struct NodeMatch {
  std::size_t source;
  std::size_t target;
  double score;
};

/// Scores every (source node, target node) pair by M = h_s * h_t^T and
/// returns the `top_m` largest entries, descending; equal scores are
/// ordered by (source, target).
template <class Real>
std::vector<NodeMatch> match_nodes(const tensor::Tensor<Real>& h_source,
                                   const tensor::Tensor<Real>& h_target, std::size_t top_m);

}  // namespace pdan::network
