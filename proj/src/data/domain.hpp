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

#include <array>
#include <cstddef>
#include <string>

#include "common/rng.hpp"
#include "data/shapes.hpp"
#include "geometry/point_cloud.hpp"

namespace pdan::data {

enum class Rotation { kNone, kRandomAboutUp };

/// How a domain samples and corrupts its objects.
struct DomainProfile {
  SamplingMode sampling = SamplingMode::kSurfaceUniform;
  double occlusion_probability = 0.0;
  /// Largest fraction of points one occlusion may remove, in [0, 0.5].
  double occlusion_cap = 0.0;
  double jitter_sigma = 0.0;
  Rotation rotation = Rotation::kNone;
  bool density_gradient = false;

  void validate() const;
  std::string describe() const;

  /// Clean full-surface sampling.
  static DomainProfile clean();
  /// Partial, noisy scans: occlusion cap 0.3 with probability 0.7, a
  /// density gradient and jitter 0.01.
  static DomainProfile scanned();
};

inline constexpr std::size_t kMinDomainPoints = 8;
inline constexpr int kOcclusionRetries = 5;

/// Result of one half-space cut: points with dot(p, direction) > offset
/// are removed.
struct Occlusion {
  std::array<double, 3> direction{0, 0, 1};
  double offset = 0.0;
  std::size_t removed = 0;
  int retries = 0;
};

/// Removes the points beyond a random plane whose normal is uniform on the
/// sphere. The cut keeps at most `cap` of the points; a cut that removes too
/// much is retried with half the depth, up to kOcclusionRetries times.
geometry::PointCloud occlude(const geometry::PointCloud& cloud, double cap, Rng& rng, Occlusion* info = nullptr);

/// Draws points from `cloud` with replacement until it has `points` points.
geometry::PointCloud repad(const geometry::PointCloud& cloud, std::size_t points, Rng& rng);

/// Applies occlusion, density gradient, jitter and rotation in that order,
/// keeps the point count, and renormalizes.
geometry::PointCloud apply_domain(const geometry::PointCloud& cloud, const DomainProfile& profile, Rng& rng);

}  // namespace pdan::data
