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
#include <vector>

#include "tensor/ops.hpp"

namespace pdan::geometry {

using tensor::Tensor;
using tensor::Var;

/// Self-adaptive nodes of one cloud.
///
/// Indices are local to the cloud. `row_offset` locates the cloud inside a
/// stacked (batch * T) x C feature matrix when gathering features.
template <class Real>
struct NodeSet {
  std::size_t count = 0;
  std::size_t k = 0;
  std::uint32_t row_offset = 0;
  /// FPS-selected point index of every node, fixed at initialization.
  std::vector<std::uint32_t> centers;
  /// count x k point indices, sorted by distance to the node position.
  std::vector<std::uint32_t> neighbors;
  /// count x 3 node positions.
  Var<Real> positions;
  /// count x 3 offsets applied by update_nodes (zero before the update).
  Var<Real> offsets;
};

/// Seeds `n` nodes by farthest point sampling (started at fps_start) and
/// collects their kNN regions.
/// `points` is a T x 3 constant.
template <class Real>
NodeSet<Real> init_nodes(const Var<Real>& points, std::size_t n, std::size_t k,
                         std::uint32_t row_offset = 0);

/// Offset of every node: the mean over its k edges of the edge vector
/// (x_cj - x_c) weighted by a scalar learned from the edge feature
/// (v_cj - v_c). `rt_weight` is C x 1, `rt_bias` has one element.
template <class Real>
Var<Real> predict_offsets(const NodeSet<Real>& nodes, const Var<Real>& points,
                          const Var<Real>& point_features, const Var<Real>& rt_weight,
                          const Var<Real>& rt_bias);

/// Shifts node positions once by `offsets` and recomputes the kNN regions
/// around the shifted positions. Region membership carries no gradient.
template <class Real>
NodeSet<Real> update_nodes(const NodeSet<Real>& nodes, const Var<Real>& offsets,
                           const Var<Real>& points, std::size_t k);

/// Elementwise max over each node's region of already-transformed features.
template <class Real>
Var<Real> pool_regions(const NodeSet<Real>& nodes, const Var<Real>& transformed_features);

/// Node features: max over the region of relu(R_G(v)), R_G a C -> C' layer.
template <class Real>
Var<Real> gather_node_features(const NodeSet<Real>& nodes, const Var<Real>& point_features,
                               const Var<Real>& rg_weight, const Var<Real>& rg_bias);

/// Inverse-squared-distance interpolation from the 3 nearest nodes:
/// w_c = 1 / (d_c^2 + 1e-10), normalized over the 3 nodes. Differentiable
/// w.r.t. node positions and node features. `points` is a T x 3 constant.
template <class Real>
Var<Real> interpolate_to_points(const Var<Real>& node_positions, const Var<Real>& node_features,
                                const Tensor<Real>& points);

inline constexpr double kInterpolationEps = 1e-10;
inline constexpr std::size_t kInterpolationNeighbors = 3;

}  // namespace pdan::geometry
