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

#include "network/model.hpp"

#include <string>

#include "tensor/ops.hpp"

namespace pdan::network {

using namespace tensor;

template <class Real>
Tensor<Real> stack_points(std::span<const geometry::PointCloud* const> clouds) {
  require(!clouds.empty(), ErrorKind::kInvalidArgument, "forward: empty batch");
  const std::size_t t = clouds[0]->size();
  std::vector<Real> v;
  v.reserve(clouds.size() * t * 3);
  for (const auto* c : clouds) {
    require(c->size() == t, ErrorKind::kDimension,
            "forward: clouds in a batch must share a point count (" + std::to_string(t) + " vs " +
                std::to_string(c->size()) + ")");
    require(geometry::max_norm(*c) <= kMaxInputNorm, ErrorKind::kInvalidArgument,
            "encode: input cloud is not normalized (max norm " + std::to_string(geometry::max_norm(*c)) +
                ")");
    for (double x : c->xyz) v.push_back(static_cast<Real>(x));
  }
  return Tensor<Real>({clouds.size() * t, 3}, std::move(v));
}

template <class Real>
Var<Real> encode(const BoundParams<Real>& p, const Var<Real>& points) {
  Var<Real> h = points;
  const auto& widths = p.config().encoder_widths;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    const std::string l = "encoder." + std::to_string(i);
    h = relu(linear(h, p[l + ".weight"], p[l + ".bias"]));
  }
  return h;
}

template <class Real>
Var<Real> attend_nodes(const BoundParams<Real>& p, const Var<Real>& node_features, std::size_t batch,
                       Var<Real>* gate_out) {
  const std::size_t n = p.config().n_nodes;
  require(node_features.shape().size() == 2 && node_features.shape()[0] == batch * n,
          ErrorKind::kDimension,
          "attend_nodes: expected " + std::to_string(batch * n) + " node rows, got " +
              shape_str(node_features.shape()));
  auto z = reshape(reduce(node_features, 1, ReduceKind::kMean), Shape{batch, n});
  auto down = relu(linear(z, p["attention.down.weight"], p["attention.down.bias"]));
  auto gate = sigmoid(linear(down, p["attention.up.weight"], p["attention.up.bias"]));
  if (gate_out) *gate_out = gate;
  return add(mul_rows(node_features, reshape(gate, Shape{batch * n})), node_features);
}

template <class Real>
Features<Real> extract(const BoundParams<Real>& p, std::span<const geometry::PointCloud* const> clouds,
                       const ForwardSwitches& sw) {
  const ModelConfig& cfg = p.config();
  Tape<Real>& tape = p.tape();
  Features<Real> out;
  out.batch = clouds.size();
  Tensor<Real> stacked = stack_points<Real>(clouds);
  const std::size_t t = clouds[0]->size();
  out.points = t;
  require(t >= cfg.n_nodes && t >= cfg.k_neighbors, ErrorKind::kInvalidArgument,
          "forward: " + std::to_string(t) + " points cannot host " + std::to_string(cfg.n_nodes) +
              " nodes with " + std::to_string(cfg.k_neighbors) + " neighbors");

  auto all_points = tape.constant(stacked);
  out.point_features = encode(p, all_points);
  auto transformed = relu(linear(out.point_features, p["gather.weight"], p["gather.bias"]));

  std::vector<Tensor<Real>> cloud_points;
  std::vector<Var<Real>> pooled;
  for (std::size_t b = 0; b < out.batch; ++b) {
    std::vector<Real> pts(stacked.data().begin() + static_cast<std::ptrdiff_t>(b * t * 3),
                          stacked.data().begin() + static_cast<std::ptrdiff_t>((b + 1) * t * 3));
    cloud_points.emplace_back(Shape{t, 3}, std::move(pts));
    auto points = tape.constant(cloud_points.back());
    const auto row_offset = static_cast<std::uint32_t>(b * t);
    auto nodes = geometry::init_nodes(points, cfg.n_nodes, cfg.k_neighbors, row_offset);
    Var<Real> offsets = sw.adaptive_nodes
                            ? geometry::predict_offsets(nodes, points, out.point_features,
                                                        p["transform.weight"], p["transform.bias"])
                            : nodes.offsets;
    nodes = geometry::update_nodes(nodes, offsets, points, cfg.k_neighbors);
    pooled.push_back(geometry::pool_regions(nodes, transformed));
    out.nodes.push_back(std::move(nodes));
  }
  out.node_features = concat_rows(std::span<const Var<Real>>(pooled));

  if (sw.adaptive_nodes) {
    out.node_features_attended = attend_nodes(p, out.node_features, out.batch, &out.gate);
  } else {
    out.gate = tape.constant(Tensor<Real>::full({out.batch, cfg.n_nodes}, Real(1)));
    out.node_features_attended =
        add(mul_rows(out.node_features, reshape(out.gate, Shape{out.batch * cfg.n_nodes})),
            out.node_features);
  }

  std::vector<Var<Real>> interpolated;
  for (std::size_t b = 0; b < out.batch; ++b) {
    std::vector<std::uint32_t> rows(cfg.n_nodes);
    for (std::size_t c = 0; c < cfg.n_nodes; ++c) rows[c] = static_cast<std::uint32_t>(b * cfg.n_nodes + c);
    auto h_b = gather_rows(out.node_features_attended, std::span<const std::uint32_t>(rows));
    interpolated.push_back(geometry::interpolate_to_points(out.nodes[b].positions, h_b, cloud_points[b]));
  }
  out.fused = concat_cols(concat_rows(std::span<const Var<Real>>(interpolated)), out.point_features);

  Var<Real> g = out.fused;
  const std::size_t last = cfg.generator_widths.size() - 1;
  for (std::size_t i = 0; i < last; ++i) {
    const std::string l = "generator." + std::to_string(i);
    g = relu(linear(g, p[l + ".weight"], p[l + ".bias"]));
  }
  const std::string l = "generator." + std::to_string(last);
  out.global_feature = linear_relu_max(g, p[l + ".weight"], p[l + ".bias"], out.batch);
  return out;
}

template <class Real>
Var<Real> classify(const BoundParams<Real>& p, const Var<Real>& global_feature, int head) {
  require(head == 1 || head == 2, ErrorKind::kInvalidArgument, "classify: head must be 1 or 2");
  const std::string prefix = "classifier" + std::to_string(head);
  auto h = relu(linear(global_feature, p[prefix + ".0.weight"], p[prefix + ".0.bias"]));
  return linear(h, p[prefix + ".1.weight"], p[prefix + ".1.bias"]);
}

template <class Real>
ForwardOutput<Real> forward(const BoundParams<Real>& p, std::span<const geometry::PointCloud* const> clouds,
                            const ForwardSwitches& sw) {
  ForwardOutput<Real> out;
  out.features = extract(p, clouds, sw);
  out.logits1 = classify(p, out.features.global_feature, 1);
  out.logits2 = classify(p, out.features.global_feature, 2);
  out.probs1 = softmax(out.logits1);
  out.probs2 = softmax(out.logits2);
  return out;
}

#define PDAN_INSTANTIATE_MODEL(R)                                                                  \
  template Tensor<R> stack_points<R>(std::span<const geometry::PointCloud* const>);               \
  template Var<R> encode(const BoundParams<R>&, const Var<R>&);                                    \
  template Var<R> attend_nodes(const BoundParams<R>&, const Var<R>&, std::size_t, Var<R>*);        \
  template Features<R> extract(const BoundParams<R>&, std::span<const geometry::PointCloud* const>, \
                               const ForwardSwitches&);                                            \
  template Var<R> classify(const BoundParams<R>&, const Var<R>&, int);                             \
  template ForwardOutput<R> forward(const BoundParams<R>&, std::span<const geometry::PointCloud* const>, \
                                    const ForwardSwitches&);

PDAN_INSTANTIATE_MODEL(float)
PDAN_INSTANTIATE_MODEL(double)

}  // namespace pdan::network
