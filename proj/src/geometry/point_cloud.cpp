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

#include "geometry/point_cloud.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace pdan::geometry {

PointCloud normalize(const PointCloud& cloud) {
  const std::size_t n = cloud.size();
  require(n >= 1, ErrorKind::kInvalidArgument, "normalize: empty point cloud");
  double c[3] = {0, 0, 0};
  for (std::size_t i = 0; i < n; ++i)
    for (int d = 0; d < 3; ++d) c[d] += cloud.xyz[3 * i + d];
  for (double& v : c) v /= static_cast<double>(n);

  PointCloud out = cloud;
  double r = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (int d = 0; d < 3; ++d) {
      const double v = cloud.xyz[3 * i + d] - c[d];
      out.xyz[3 * i + d] = v;
      s += v * v;
    }
    r = std::max(r, s);
  }
  r = std::sqrt(r);
  if (r == 0.0) r = 1.0;
  for (double& v : out.xyz) v /= r;
  return out;
}

double max_norm(const PointCloud& cloud) {
  double r = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double* p = cloud.point(i);
    r = std::max(r, std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
  }
  return r;
}

double centroid_norm(const PointCloud& cloud) {
  double c[3] = {0, 0, 0};
  for (std::size_t i = 0; i < cloud.size(); ++i)
    for (int d = 0; d < 3; ++d) c[d] += cloud.xyz[3 * i + d];
  const double n = static_cast<double>(std::max<std::size_t>(cloud.size(), 1));
  return std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]) / n;
}

}  // namespace pdan::geometry
