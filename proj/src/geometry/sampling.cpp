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

#include "geometry/sampling.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <utility>

#include "common/error.hpp"

namespace pdan::geometry {
namespace {

template <class Real>
Real sqdist(const Real* a, const Real* b) {
  const Real dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

template <class Real>
std::vector<std::uint32_t> fps(std::span<const Real> xyz, std::size_t n, std::size_t start) {
  const std::size_t t = xyz.size() / 3;
  require(xyz.size() % 3 == 0, ErrorKind::kDimension, "fps: coordinate buffer is not xyz-interleaved");
  require(n >= 1, ErrorKind::kInvalidArgument, "fps: need at least one sample");
  require(n <= t, ErrorKind::kInvalidArgument,
          "fps: requested " + std::to_string(n) + " samples from " + std::to_string(t) + " points");
  require(start < t, ErrorKind::kInvalidArgument, "fps: start index out of range");

  std::vector<std::uint32_t> picked;
  picked.reserve(n);
  std::vector<Real> mind(t, std::numeric_limits<Real>::infinity());
  std::vector<bool> taken(t, false);
  std::size_t cur = start;
  for (std::size_t s = 0; s < n; ++s) {
    picked.push_back(static_cast<std::uint32_t>(cur));
    taken[cur] = true;
    const Real* c = xyz.data() + 3 * cur;
    std::size_t best = 0;
    Real best_d = -1;
    for (std::size_t i = 0; i < t; ++i) {
      mind[i] = std::min(mind[i], sqdist(xyz.data() + 3 * i, c));
      // Duplicate points have distance 0; never re-pick an index.
      if (!taken[i] && mind[i] > best_d) {
        best_d = mind[i];
        best = i;
      }
    }
    cur = best;
  }
  return picked;
}

template <class Real>
std::vector<std::uint32_t> knn(std::span<const Real> queries, std::span<const Real> points,
                               std::size_t k) {
  const std::size_t t = points.size() / 3;
  const std::size_t q = queries.size() / 3;
  require(k >= 1, ErrorKind::kInvalidArgument, "knn: k must be positive");
  require(k <= t, ErrorKind::kInvalidArgument,
          "knn: k=" + std::to_string(k) + " exceeds point count " + std::to_string(t));
  std::vector<std::uint32_t> out(q * k);
  std::vector<std::pair<Real, std::uint32_t>> cand(t);
  for (std::size_t j = 0; j < q; ++j) {
    const Real* qp = queries.data() + 3 * j;
    for (std::size_t i = 0; i < t; ++i)
      cand[i] = {sqdist(points.data() + 3 * i, qp), static_cast<std::uint32_t>(i)};
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    for (std::size_t m = 0; m < k; ++m) out[j * k + m] = cand[m].second;
  }
  return out;
}

template <class Real>
std::size_t fps_start(std::span<const Real> xyz) {
  const std::size_t t = xyz.size() / 3;
  require(t >= 1 && xyz.size() % 3 == 0, ErrorKind::kDimension, "fps_start: need at least one xyz point");
  double c[3] = {0, 0, 0};
  for (std::size_t i = 0; i < t; ++i)
    for (int d = 0; d < 3; ++d) c[d] += static_cast<double>(xyz[3 * i + d]);
  for (double& v : c) v /= static_cast<double>(t);
  std::size_t best = 0;
  double best_d = -1.0;
  for (std::size_t i = 0; i < t; ++i) {
    double d2 = 0.0;
    for (int d = 0; d < 3; ++d) {
      const double e = static_cast<double>(xyz[3 * i + d]) - c[d];
      d2 += e * e;
    }
    const bool lex_smaller = std::lexicographical_compare(xyz.begin() + 3 * i, xyz.begin() + 3 * i + 3,
                                                          xyz.begin() + 3 * best, xyz.begin() + 3 * best + 3);
    if (d2 > best_d || (d2 == best_d && lex_smaller)) {
      best_d = d2;
      best = i;
    }
  }
  return best;
}

template std::vector<std::uint32_t> fps<float>(std::span<const float>, std::size_t, std::size_t);
template std::vector<std::uint32_t> fps<double>(std::span<const double>, std::size_t, std::size_t);
template std::size_t fps_start<float>(std::span<const float>);
template std::size_t fps_start<double>(std::span<const double>);
template std::vector<std::uint32_t> knn<float>(std::span<const float>, std::span<const float>, std::size_t);
template std::vector<std::uint32_t> knn<double>(std::span<const double>, std::span<const double>, std::size_t);

}  // namespace pdan::geometry
