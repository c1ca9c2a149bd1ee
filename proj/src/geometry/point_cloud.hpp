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
#include <optional>
#include <vector>

#include "tensor/tensor.hpp"

namespace pdan::geometry {

enum class DomainTag : std::uint8_t { kSource = 0, kTarget = 1 };

/// One object: T points, xyz interleaved.
struct PointCloud {
  std::vector<double> xyz;
  std::optional<int> label;
  DomainTag domain = DomainTag::kSource;

  std::size_t size() const noexcept { return xyz.size() / 3; }
  const double* point(std::size_t i) const { return xyz.data() + 3 * i; }
};

/// Centers the cloud on its centroid and scales the farthest point to unit
/// norm. A cloud of identical points collapses to the origin with scale 1.
PointCloud normalize(const PointCloud& cloud);

/// Largest point norm and centroid norm, for invariant checks.
double max_norm(const PointCloud& cloud);
double centroid_norm(const PointCloud& cloud);

template <class Real>
tensor::Tensor<Real> to_tensor(const PointCloud& cloud) {
  std::vector<Real> v(cloud.xyz.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<Real>(cloud.xyz[i]);
  return tensor::Tensor<Real>({cloud.size(), 3}, std::move(v));
}

}  // namespace pdan::geometry
