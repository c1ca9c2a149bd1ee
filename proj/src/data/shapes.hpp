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
#include <vector>

#include "common/rng.hpp"
#include "geometry/point_cloud.hpp"

namespace pdan::data {

enum class PrimitiveKind { kBox, kCylinder, kCone, kSphere, kPlane };

/// One surface primitive, z-up in its own frame, then rotated by `yaw`
/// about z and translated to `center`.
///   box:      size = half extents (x, y, z)
///   cylinder: size = (radius, radius, half height)
///   cone:     size = (base radius, base radius, height); apex up
///   sphere:   size = (radius, radius, radius)
///   plane:    size = half extents (x, y, unused); lies in z = 0
struct Primitive {
  PrimitiveKind kind = PrimitiveKind::kBox;
  std::array<double, 3> center{0, 0, 0};
  std::array<double, 3> size{1, 1, 1};
  double yaw = 0.0;
};

struct ShapeSpec {
  int class_id = 0;
  std::string name;
  std::vector<Primitive> parts;
  int up_axis = 2;

  void validate() const;
};

enum class SamplingMode {
  kSurfaceUniform,  // every unit of area equally likely
  kAreaBiased,      // primitive chosen uniformly, then uniform on it
};

/// Surface area of a primitive; throws on a degenerate one.
double surface_area(const Primitive& p);

/// Unnormalized surface samples. When `surface_ids` is given it receives,
/// per point, the index of the primitive and the face within it encoded as
/// part * 8 + face (box faces 0-5 in order -x,+x,-y,+y,-z,+z; cylinder and
/// cone lateral 0, caps 1 (bottom) and 2 (top)).
geometry::PointCloud sample_surface(const ShapeSpec& spec, std::size_t points, Rng& rng,
                                    SamplingMode mode = SamplingMode::kSurfaceUniform,
                                    std::vector<int>* surface_ids = nullptr);

/// sample_surface followed by normalization.
geometry::PointCloud sample_shape(const ShapeSpec& spec, std::size_t points, Rng& rng,
                                  SamplingMode mode = SamplingMode::kSurfaceUniform);

/// The built-in class library: bathtub, bed, bookshelf, cabinet, chair,
/// lamp, monitor, plant, sofa, table.
std::size_t library_size();
const std::vector<std::string>& class_names();

/// One randomized instance of class `class_id`; proportions vary per draw.
ShapeSpec make_instance(int class_id, Rng& rng);

}  // namespace pdan::data
