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

#include "data/domain.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <sstream>

#include "common/error.hpp"

namespace pdan::data {
namespace {

std::array<double, 3> random_direction(Rng& rng) {
  double v[3], n2 = 0.0;
  do {
    n2 = 0.0;
    for (double& c : v) {
      c = rng.normal();
      n2 += c * c;
    }
  } while (n2 < 1e-24);
  const double k = 1.0 / std::sqrt(n2);
  return {v[0] * k, v[1] * k, v[2] * k};
}

std::vector<double> project(const geometry::PointCloud& cloud, const std::array<double, 3>& d) {
  std::vector<double> proj(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const double* p = cloud.point(i);
    proj[i] = p[0] * d[0] + p[1] * d[1] + p[2] * d[2];
  }
  return proj;
}

geometry::PointCloud keep_points(const geometry::PointCloud& cloud, const std::vector<bool>& keep) {
  geometry::PointCloud out;
  out.label = cloud.label;
  out.domain = cloud.domain;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!keep[i]) continue;
    out.xyz.insert(out.xyz.end(), cloud.point(i), cloud.point(i) + 3);
  }
  return out;
}

}  // namespace

void DomainProfile::validate() const {
  require(occlusion_probability >= 0.0 && occlusion_probability <= 1.0, ErrorKind::kInvalidArgument,
          "domain profile: occlusion probability must lie in [0, 1]");
  require(occlusion_cap >= 0.0 && occlusion_cap <= 0.5, ErrorKind::kInvalidArgument,
          "domain profile: occlusion cap must lie in [0, 0.5]");
  require(jitter_sigma >= 0.0 && std::isfinite(jitter_sigma), ErrorKind::kInvalidArgument,
          "domain profile: jitter sigma must be >= 0");
}

std::string DomainProfile::describe() const {
  auto num = [](double v) {
    char buf[32];
    return std::string(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
  };
  std::ostringstream os;
  os << "sampling=" << (sampling == SamplingMode::kSurfaceUniform ? "surface_uniform" : "area_biased")
     << " occlusion_p=" << num(occlusion_probability) << " occlusion_cap=" << num(occlusion_cap)
     << " jitter=" << num(jitter_sigma) << " rotation=" << (rotation == Rotation::kNone ? "none" : "up")
     << " density_gradient=" << (density_gradient ? 1 : 0);
  return os.str();
}

DomainProfile DomainProfile::clean() { return DomainProfile{}; }

DomainProfile DomainProfile::scanned() {
  DomainProfile p;
  p.occlusion_probability = 0.7;
  p.occlusion_cap = 0.3;
  p.jitter_sigma = 0.01;
  p.density_gradient = true;
  return p;
}

geometry::PointCloud occlude(const geometry::PointCloud& cloud, double cap, Rng& rng, Occlusion* info) {
  const std::size_t n = cloud.size();
  require(n >= 1, ErrorKind::kInvalidArgument, "occlude: empty cloud");
  require(cap >= 0.0 && cap <= 0.5, ErrorKind::kInvalidArgument, "occlude: cap must lie in [0, 0.5]");
  const auto dir = random_direction(rng);
  const auto proj = project(cloud, dir);
  const auto [lo_it, hi_it] = std::minmax_element(proj.begin(), proj.end());
  const double lo = *lo_it, hi = *hi_it;
  const auto limit = static_cast<std::size_t>(std::floor(cap * static_cast<double>(n)));

  double depth = rng.uniform() * cap;
  for (int attempt = 0; attempt <= kOcclusionRetries; ++attempt) {
    const double offset = hi - depth * (hi - lo);
    std::vector<bool> keep(n);
    std::size_t removed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      keep[i] = !(proj[i] > offset);
      removed += keep[i] ? 0 : 1;
    }
    if (removed <= limit && removed < n) {
      if (info) *info = {dir, offset, removed, attempt};
      return keep_points(cloud, keep);
    }
    depth *= 0.5;
  }
  fail(ErrorKind::kInvalidArgument, "occlusion removed too many points after " +
                                        std::to_string(kOcclusionRetries) + " retries");
}

geometry::PointCloud repad(const geometry::PointCloud& cloud, std::size_t points, Rng& rng) {
  const std::size_t have = cloud.size();
  require(have >= 1, ErrorKind::kInvalidArgument, "repad: no surviving points");
  geometry::PointCloud out = cloud;
  out.xyz.reserve(points * 3);
  while (out.size() < points) {
    const auto src = static_cast<std::size_t>(rng.below(have));
    out.xyz.insert(out.xyz.end(), cloud.point(src), cloud.point(src) + 3);
  }
  out.xyz.resize(points * 3);
  return out;
}

geometry::PointCloud apply_domain(const geometry::PointCloud& cloud, const DomainProfile& profile, Rng& rng) {
  profile.validate();
  const std::size_t n = cloud.size();
  require(n >= kMinDomainPoints, ErrorKind::kInvalidArgument,
          "apply_domain: need at least " + std::to_string(kMinDomainPoints) + " points, got " + std::to_string(n));
  geometry::PointCloud out = cloud;

  if (profile.occlusion_probability > 0.0 && rng.bernoulli(profile.occlusion_probability)) {
    out = repad(occlude(out, profile.occlusion_cap, rng), n, rng);
  }

  if (profile.density_gradient) {
    const auto dir = random_direction(rng);
    const auto proj = project(out, dir);
    const auto [lo_it, hi_it] = std::minmax_element(proj.begin(), proj.end());
    const double lo = *lo_it, span = *hi_it - lo;
    std::vector<bool> keep(n);
    bool any = false;
    for (std::size_t i = 0; i < n; ++i) {
      // Keep probability falls linearly from 1 to 0.3 along the axis.
      const double t = span > 0.0 ? (proj[i] - lo) / span : 0.0;
      keep[i] = rng.uniform() < 1.0 - 0.7 * t;
      any = any || keep[i];
    }
    if (any) out = repad(keep_points(out, keep), n, rng);
  }

  if (profile.jitter_sigma > 0.0) {
    for (double& v : out.xyz) v += profile.jitter_sigma * rng.normal();
  }

  if (profile.rotation == Rotation::kRandomAboutUp) {
    const double a = 2 * std::numbers::pi * rng.uniform();
    const double c = std::cos(a), s = std::sin(a);
    for (std::size_t i = 0; i < n; ++i) {
      double* p = out.xyz.data() + 3 * i;
      const double x = c * p[0] - s * p[1];
      const double y = s * p[0] + c * p[1];
      p[0] = x;
      p[1] = y;
    }
  }
  return geometry::normalize(out);
}

}  // namespace pdan::data
