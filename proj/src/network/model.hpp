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
#include <vector>

#include "geometry/point_cloud.hpp"
#include "geometry/sa_nodes.hpp"
#include "network/params.hpp"

namespace pdan::network {

/// Ablation switches on the forward pass. With `adaptive_nodes` off the
/// node offsets are forced to zero and the attention gate to one, which
/// leaves a fixed-node pipeline.
struct ForwardSwitches {
  bool adaptive_nodes = true;
};

/// Everything a forward pass over a batch of B clouds (T points each,
/// n nodes each) produces. All rows are stacked sample-major.
template <class Real>
struct Features {
  std::size_t batch = 0;
  std::size_t points = 0;
  Var<Real> point_features;          // (B*T) x C, encoder stage 3
  std::vector<geometry::NodeSet<Real>> nodes;  // one per sample, after the update
  Var<Real> node_features;           // (B*n) x C, region max
  Var<Real> gate;                    // B x n, attention gate
  Var<Real> node_features_attended;  // (B*n) x C
  Var<Real> fused;                   // (B*T) x 2C, [interpolated nodes | point features]
  Var<Real> global_feature;          // B x d
};

template <class Real>
struct ForwardOutput {
  Features<Real> features;
  Var<Real> logits1, logits2;
  Var<Real> probs1, probs2;
};

/// Max norm accepted by the encoder; clouds must be normalized first.
inline constexpr double kMaxInputNorm = 1.0 + 1e-3;

/// Stacks a batch of clouds into a (B*T) x 3 tensor. All clouds must have
/// the same point count and be normalized.
template <class Real>
Tensor<Real> stack_points(std::span<const geometry::PointCloud* const> clouds);

/// Three pointwise linear + relu stages over (N x 3) coordinates.
template <class Real>
Var<Real> encode(const BoundParams<Real>& p, const Var<Real>& points);

/// Node attention. `node_features` is (B*n) x C. The squeeze is the mean
/// over channels of each node; the bottleneck runs across the node axis
/// and produces a per-node gate g in (0,1); output = g * v + v.
/// `gate_out` receives the B x n gate.
template <class Real>
Var<Real> attend_nodes(const BoundParams<Real>& p, const Var<Real>& node_features, std::size_t batch,
                       Var<Real>* gate_out = nullptr);

/// Encoder, SA nodes, attention, interpolation, fusion, generator, max-pool.
template <class Real>
Features<Real> extract(const BoundParams<Real>& p, std::span<const geometry::PointCloud* const> clouds,
                       const ForwardSwitches& sw = {});

/// Two-layer classifier head (1 or 2) on B x d global features; returns logits.
template <class Real>
Var<Real> classify(const BoundParams<Real>& p, const Var<Real>& global_feature, int head);

template <class Real>
ForwardOutput<Real> forward(const BoundParams<Real>& p, std::span<const geometry::PointCloud* const> clouds,
                            const ForwardSwitches& sw = {});

}  // namespace pdan::network
