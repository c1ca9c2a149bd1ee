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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "geometry/point_cloud.hpp"
#include "geometry/sa_nodes.hpp"
#include "geometry/sampling.hpp"
#include "test_util.hpp"

namespace pdan::geometry {
namespace {

double sqd(const double* a, const double* b) {
  double s = 0.0;
  for (int d = 0; d < 3; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

// Brute force: recompute every min-distance from scratch at each step.
std::vector<std::uint32_t> fps_oracle(const std::vector<double>& xyz, std::size_t n) {
  const std::size_t t = xyz.size() / 3;
  std::vector<std::uint32_t> sel = {0};
  while (sel.size() < n) {
    double best = -1.0;
    std::uint32_t arg = 0;
    for (std::uint32_t i = 0; i < t; ++i) {
      double dmin = INFINITY;
      for (auto s : sel) dmin = std::min(dmin, sqd(&xyz[3 * i], &xyz[3 * s]));
      if (dmin > best) {
        best = dmin;
        arg = i;
      }
    }
    sel.push_back(arg);
  }
  return sel;
}

std::vector<std::uint32_t> knn_oracle(const double* q, const std::vector<double>& xyz, std::size_t k) {
  std::vector<std::uint32_t> idx(xyz.size() / 3);
  std::iota(idx.begin(), idx.end(), 0u);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](auto a, auto b) { return sqd(q, &xyz[3 * a]) < sqd(q, &xyz[3 * b]); });
  idx.resize(k);
  return idx;
}

TEST(Sampling, FpsMatchesBruteForceOn200Clouds) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t t = 8 + rng.below(57);
    const std::size_t n = 1 + rng.below(t);
    std::vector<double> xyz(3 * t);
    for (auto& v : xyz) v = rng.uniform(-1, 1);
    EXPECT_EQ(fps<double>(xyz, n), fps_oracle(xyz, n)) << "trial " << trial;
  }
}

TEST(Sampling, FpsNeverRepeatsAPoint) {
  // Duplicated points: the oracle and the fast version must still agree and
  // every selected index must be distinct.
  std::vector<double> xyz;
  for (int i = 0; i < 6; ++i) xyz.insert(xyz.end(), {0.0, 0.0, 0.0});
  xyz.insert(xyz.end(), {1.0, 0.0, 0.0});
  auto sel = fps<double>(xyz, 7);
  std::sort(sel.begin(), sel.end());
  EXPECT_EQ(std::unique(sel.begin(), sel.end()), sel.end());
}

TEST(Sampling, KnnMatchesBruteForceOn200Clouds) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t t = 4 + rng.below(61);
    const std::size_t k = 1 + rng.below(t);
    const std::size_t q = 1 + rng.below(8);
    std::vector<double> xyz(3 * t), queries(3 * q);
    for (auto& v : xyz) v = rng.uniform(-1, 1);
    for (auto& v : queries) v = rng.uniform(-1, 1);
    const auto got = knn<double>(queries, xyz, k);
    for (std::size_t i = 0; i < q; ++i) {
      std::vector<std::uint32_t> row(got.begin() + i * k, got.begin() + (i + 1) * k);
      EXPECT_EQ(row, knn_oracle(&queries[3 * i], xyz, k)) << "trial " << trial;
    }
  }
}

TEST(Sampling, KnnBreaksTiesByIndex) {
  std::vector<double> pts = {1, 0, 0, -1, 0, 0, 0, 1, 0, 0, 0, 0};
  std::vector<double> q = {0, 0, 0};
  EXPECT_EQ(knn<double>(q, pts, 4), (std::vector<std::uint32_t>{3, 0, 1, 2}));
}

TEST(PointCloud, NormalizeCentersAndScales) {
  Rng rng(13);
  PointCloud c;
  for (int i = 0; i < 50; ++i) c.xyz.insert(c.xyz.end(), {rng.uniform(3, 9), rng.uniform(-2, 0), rng.uniform(0, 1)});
  const auto n = normalize(c);
  EXPECT_NEAR(max_norm(n), 1.0, 1e-12);
  EXPECT_LT(centroid_norm(n), 1e-12);
}

TEST(PointCloud, DegenerateCloudCollapsesToOrigin) {
  PointCloud c;
  for (int i = 0; i < 4; ++i) c.xyz.insert(c.xyz.end(), {2.0, 2.0, 2.0});
  const auto n = normalize(c);
  for (double v : n.xyz) EXPECT_EQ(v, 0.0);
}

class NodeTest : public ::testing::Test {
 protected:
  void SetUp() override {
    Rng rng(14);
    cloud = test::random_cloud(40, rng);
    points = to_tensor<double>(cloud);
    features = test::random_tensor<double>({40, 5}, rng);
  }
  PointCloud cloud;
  Tensor<double> points, features;
};

TEST_F(NodeTest, InitUsesFpsCentersAndKnnRegions) {
  tensor::Tape<double> tape;
  auto nodes = init_nodes(tape.constant(points), 6, 4);
  EXPECT_EQ(nodes.centers, fps<double>(points.data(), 6, fps_start<double>(points.data())));
  for (std::size_t c = 0; c < 6; ++c) {
    const double* pos = &points[3 * nodes.centers[c]];
    for (int d = 0; d < 3; ++d) EXPECT_EQ(nodes.positions.value()[3 * c + d], pos[d]);
    std::vector<std::uint32_t> row(nodes.neighbors.begin() + c * 4, nodes.neighbors.begin() + (c + 1) * 4);
    EXPECT_EQ(row, knn_oracle(pos, cloud.xyz, 4));
    EXPECT_EQ(row[0], nodes.centers[c]);
  }
}

TEST_F(NodeTest, ZeroOffsetsKeepNodes) {
  tensor::Tape<double> tape;
  auto pts = tape.constant(points);
  auto nodes = init_nodes(pts, 6, 4);
  auto moved = update_nodes(nodes, tape.constant(Tensor<double>({6, 3})), pts, 4);
  for (std::size_t i = 0; i < 18; ++i) EXPECT_EQ(moved.positions.value()[i], nodes.positions.value()[i]);
  EXPECT_EQ(moved.neighbors, nodes.neighbors);
}

TEST_F(NodeTest, PoolRegionsIsRegionMax) {
  tensor::Tape<double> tape;
  auto nodes = init_nodes(tape.constant(points), 5, 6);
  auto pooled = pool_regions(nodes, tape.constant(features));
  for (std::size_t c = 0; c < 5; ++c)
    for (std::size_t ch = 0; ch < 5; ++ch) {
      double mx = -INFINITY;
      for (std::size_t j = 0; j < 6; ++j) mx = std::max(mx, features.at(nodes.neighbors[c * 6 + j], ch));
      EXPECT_EQ(pooled.value().at(c, ch), mx);
    }
}

TEST_F(NodeTest, InterpolationReproducesConstantsAndNodeValues) {
  tensor::Tape<double> tape;
  Rng rng(15);
  auto node_pos = test::random_tensor<double>({6, 3}, rng);
  Tensor<double> ones = Tensor<double>::full({6, 2}, 2.5);
  auto out = interpolate_to_points(tape.constant(node_pos), tape.constant(ones), points);
  for (double v : out.value().data()) EXPECT_NEAR(v, 2.5, 1e-12);

  // A query sitting on a node takes that node's feature.
  auto node_feat = test::random_tensor<double>({6, 2}, rng);
  auto at_nodes = interpolate_to_points(tape.constant(node_pos), tape.constant(node_feat), node_pos);
  for (std::size_t i = 0; i < node_feat.numel(); ++i) EXPECT_NEAR(at_nodes.value()[i], node_feat[i], 1e-8);
}

}  // namespace
}  // namespace pdan::geometry

namespace pdan::geometry {
namespace {

TEST(Sampling, FpsFromCanonicalStartIsPermutationCovariant) {
  Rng rng(16);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t t = 10 + rng.below(40);
    std::vector<double> xyz(3 * t);
    for (auto& v : xyz) v = rng.uniform(-1, 1);
    std::vector<std::uint32_t> perm(t);
    std::iota(perm.begin(), perm.end(), 0u);
    for (std::size_t i = t - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    std::vector<double> shuffled(3 * t);
    for (std::size_t i = 0; i < t; ++i)
      for (int d = 0; d < 3; ++d) shuffled[3 * i + d] = xyz[3 * perm[i] + d];

    const auto a = fps<double>(xyz, 8, fps_start<double>(xyz));
    const auto b = fps<double>(shuffled, 8, fps_start<double>(shuffled));
    for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(perm[b[j]], a[j]);
  }
}

TEST(Sampling, SquareCornersPickTheDiagonal) {
  std::vector<double> sq = {0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 1, 0};
  EXPECT_EQ(fps<double>(sq, 2, 0), (std::vector<std::uint32_t>{0, 3}));
  std::vector<double> line = {0, 0, 1, 0, 0, 2, 0, 0, 3};
  std::vector<double> origin = {0, 0, 0};
  EXPECT_EQ(knn<double>(origin, line, 2), (std::vector<std::uint32_t>{0, 1}));
  EXPECT_THROW(fps<double>(sq, 5, 0), Error);
  EXPECT_THROW(knn<double>(origin, line, 4), Error);
}

}  // namespace
}  // namespace pdan::geometry
