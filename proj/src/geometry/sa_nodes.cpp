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

#include "geometry/sa_nodes.hpp"

#include <string>

#include "common/rng.hpp"
#include "geometry/sampling.hpp"

namespace pdan::geometry {
namespace {

std::uint64_t hash_u32(const std::vector<std::uint32_t>& v) {
  std::uint64_t h = 0x7f4a7c15ULL ^ v.size();
  for (auto x : v) h = mix64(h ^ x);
  return h;
}

std::vector<std::uint32_t> shifted(const std::vector<std::uint32_t>& idx, std::uint32_t offset) {
  std::vector<std::uint32_t> out(idx);
  for (auto& v : out) v += offset;
  return out;
}

}  // namespace

template <class Real>
NodeSet<Real> init_nodes(const Var<Real>& points, std::size_t n, std::size_t k,
                         std::uint32_t row_offset) {
  const auto& pv = points.value();
  require(pv.rank() == 2 && pv.cols() == 3, ErrorKind::kDimension,
          "init_nodes: points must be T x 3, got " + tensor::shape_str(pv.shape()));
  NodeSet<Real> nodes;
  nodes.count = n;
  nodes.k = k;
  nodes.row_offset = row_offset;
  nodes.centers = fps<Real>(pv.data(), n, fps_start<Real>(pv.data()));
  nodes.positions = tensor::gather_rows(points, std::span<const std::uint32_t>(nodes.centers));
  nodes.neighbors = knn<Real>(nodes.positions.value().data(), pv.data(), k);
  nodes.offsets = points.tape().constant(Tensor<Real>({n, 3}));
  points.tape().note_branch(hash_u32(nodes.neighbors));
  return nodes;
}

template <class Real>
Var<Real> predict_offsets(const NodeSet<Real>& nodes, const Var<Real>& points,
                          const Var<Real>& point_features, const Var<Real>& rt_weight,
                          const Var<Real>& rt_bias) {
  const std::size_t t = points.value().rows();
  const auto& fs = point_features.shape();
  require(fs.size() == 2 && fs[0] % t == 0 && nodes.row_offset + t <= fs[0], ErrorKind::kDimension,
          "predict_offsets: feature rows " + tensor::shape_str(fs) + " do not match " +
              std::to_string(t) + " points");
  require(rt_weight.shape().size() == 2 && rt_weight.shape()[1] == 1, ErrorKind::kDimension,
          "predict_offsets: edge weight map must produce one scalar per edge");
  const std::size_t n = nodes.count, k = nodes.k;

  std::vector<std::uint32_t> rep_local(n * k);
  std::vector<std::uint32_t> rep_center(n * k);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t j = 0; j < k; ++j) {
      rep_local[c * k + j] = static_cast<std::uint32_t>(c);
      rep_center[c * k + j] = nodes.centers[c] + nodes.row_offset;
    }
  }
  const auto nb_rows = shifted(nodes.neighbors, nodes.row_offset);

  using namespace tensor;
  auto edge_feat = sub(gather_rows(point_features, std::span<const std::uint32_t>(nb_rows)),
                       gather_rows(point_features, std::span<const std::uint32_t>(rep_center)));
  auto weight = linear(edge_feat, rt_weight, rt_bias);
  auto edges = sub(gather_rows(points, std::span<const std::uint32_t>(nodes.neighbors)),
                   gather_rows(nodes.positions, std::span<const std::uint32_t>(rep_local)));
  auto weighted = reshape(mul_rows(edges, weight), Shape{n, k, 3});
  return reduce(weighted, 1, ReduceKind::kMean);
}

template <class Real>
NodeSet<Real> update_nodes(const NodeSet<Real>& nodes, const Var<Real>& offsets,
                           const Var<Real>& points, std::size_t k) {
  NodeSet<Real> out = nodes;
  out.k = k;
  out.offsets = offsets;
  out.positions = tensor::add(nodes.positions, offsets);
  out.neighbors = knn<Real>(out.positions.value().data(), points.value().data(), k);
  points.tape().note_branch(hash_u32(out.neighbors));
  return out;
}

template <class Real>
Var<Real> pool_regions(const NodeSet<Real>& nodes, const Var<Real>& transformed_features) {
  const auto& fs = transformed_features.shape();
  require(fs.size() == 2, ErrorKind::kDimension, "pool_regions: features must be 2-D");
  const auto rows = shifted(nodes.neighbors, nodes.row_offset);
  auto g = tensor::gather_rows(transformed_features, std::span<const std::uint32_t>(rows));
  auto r = tensor::reshape(g, tensor::Shape{nodes.count, nodes.k, fs[1]});
  return tensor::reduce(r, 1, tensor::ReduceKind::kMax);
}

template <class Real>
Var<Real> gather_node_features(const NodeSet<Real>& nodes, const Var<Real>& point_features,
                               const Var<Real>& rg_weight, const Var<Real>& rg_bias) {
  return pool_regions(nodes, tensor::relu(tensor::linear(point_features, rg_weight, rg_bias)));
}

template <class Real>
Var<Real> interpolate_to_points(const Var<Real>& node_positions, const Var<Real>& node_features,
                                const Tensor<Real>& points) {
  const auto& ps = node_positions.shape();
  const auto& fs = node_features.shape();
  require(ps.size() == 2 && ps[1] == 3, ErrorKind::kDimension,
          "interpolate_to_points: node positions must be n x 3, got " + tensor::shape_str(ps));
  require(fs.size() == 2 && fs[0] == ps[0], ErrorKind::kDimension,
          "interpolate_to_points: node feature rows " + tensor::shape_str(fs) +
              " do not match positions " + tensor::shape_str(ps));
  const std::size_t n = ps[0], c = fs[1], t = points.rows();
  constexpr std::size_t kN = kInterpolationNeighbors;
  require(n >= kN, ErrorKind::kInvalidArgument,
          "interpolate_to_points: need at least 3 nodes, got " + std::to_string(n));

  const auto& qv = node_positions.value();
  const auto& fv = node_features.value();
  auto idx = knn<Real>(points.data(), qv.data(), kN);
  node_positions.tape().note_branch(hash_u32(idx));

  // Per point: raw weights 1/(d^2+eps) and their sum.
  std::vector<Real> raw(t * kN);
  std::vector<Real> total(t);
  Tensor<Real> out({t, c});
  for (std::size_t p = 0; p < t; ++p) {
    const Real* x = points.data().data() + 3 * p;
    Real sum = 0;
    for (std::size_t m = 0; m < kN; ++m) {
      const Real* q = qv.data().data() + 3 * idx[p * kN + m];
      const Real dx = x[0] - q[0], dy = x[1] - q[1], dz = x[2] - q[2];
      const Real w = Real(1) / (dx * dx + dy * dy + dz * dz + static_cast<Real>(kInterpolationEps));
      raw[p * kN + m] = w;
      sum += w;
    }
    total[p] = sum;
    Real* o = out.data().data() + p * c;
    for (std::size_t m = 0; m < kN; ++m) {
      const Real w = raw[p * kN + m] / sum;
      const Real* f = fv.data().data() + idx[p * kN + m] * c;
      for (std::size_t j = 0; j < c; ++j) o[j] += w * f[j];
    }
  }

  Tensor<Real> pts = points;
  return node_positions.tape().record(
      std::move(out), {node_positions, node_features},
      [node_positions, node_features, idx = std::move(idx), raw = std::move(raw),
       total = std::move(total), pts = std::move(pts), t, c](
          tensor::Tape<Real>& tp, std::span<const Real> g, const Tensor<Real>& y) {
        const bool need_pos = tp.needs_grad(node_positions);
        const bool need_feat = tp.needs_grad(node_features);
        const Real* qv2 = tp.value(node_positions).data().data();
        const Real* fv2 = tp.value(node_features).data().data();
        Real* gq = need_pos ? tp.grad_of(node_positions).data() : nullptr;
        Real* gf = need_feat ? tp.grad_of(node_features).data() : nullptr;
        for (std::size_t p = 0; p < t; ++p) {
          const Real* gp = g.data() + p * c;
          const Real* yp = y.data().data() + p * c;
          Real s_out = 0;
          for (std::size_t j = 0; j < c; ++j) s_out += gp[j] * yp[j];
          const Real* x = pts.data().data() + 3 * p;
          for (std::size_t m = 0; m < kN; ++m) {
            const std::uint32_t node = idx[p * kN + m];
            const Real wr = raw[p * kN + m];
            if (gf) {
              const Real w = wr / total[p];
              Real* dst = gf + node * c;
              for (std::size_t j = 0; j < c; ++j) dst[j] += w * gp[j];
            }
            if (gq) {
              const Real* f = fv2 + node * c;
              Real s_c = 0;
              for (std::size_t j = 0; j < c; ++j) s_c += gp[j] * f[j];
              // dL/dd = dL/dw_raw * dw_raw/dd, with dw_raw/dd = -w_raw^2.
              const Real dl_dd = -(s_c - s_out) / total[p] * wr * wr;
              const Real* q = qv2 + 3 * node;
              for (int d = 0; d < 3; ++d) gq[3 * node + d] += dl_dd * Real(2) * (q[d] - x[d]);
            }
          }
        }
      });
}

#define PDAN_INSTANTIATE_SA(R)                                                                     \
  template NodeSet<R> init_nodes(const Var<R>&, std::size_t, std::size_t, std::uint32_t);         \
  template Var<R> predict_offsets(const NodeSet<R>&, const Var<R>&, const Var<R>&, const Var<R>&,  \
                                  const Var<R>&);                                                  \
  template NodeSet<R> update_nodes(const NodeSet<R>&, const Var<R>&, const Var<R>&, std::size_t); \
  template Var<R> pool_regions(const NodeSet<R>&, const Var<R>&);                                  \
  template Var<R> gather_node_features(const NodeSet<R>&, const Var<R>&, const Var<R>&,            \
                                       const Var<R>&);                                             \
  template Var<R> interpolate_to_points(const Var<R>&, const Var<R>&, const Tensor<R>&);

PDAN_INSTANTIATE_SA(float)
PDAN_INSTANTIATE_SA(double)

}  // namespace pdan::geometry
