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
#include <span>
#include <vector>

namespace pdan::geometry {

/// Farthest point sampling over xyz-interleaved points.
///
/// Greedy max-min selection starting from `start`; ties go to the lowest
/// index. Returns `n` point indices in selection order.
template <class Real>
std::vector<std::uint32_t> fps(std::span<const Real> xyz, std::size_t n, std::size_t start = 0);

/// Start index that depends only on the geometry: the point farthest from
/// the centroid, ties broken by the lexicographically smallest coordinates.
/// Seeding fps with it makes node selection independent of point order.
template <class Real>
std::size_t fps_start(std::span<const Real> xyz);

/// k nearest points (Euclidean) for every query, row-major `queries x k`.
/// Each row is sorted by distance; ties go to the lowest point index.
template <class Real>
std::vector<std::uint32_t> knn(std::span<const Real> queries, std::span<const Real> points,
                               std::size_t k);

}  // namespace pdan::geometry
