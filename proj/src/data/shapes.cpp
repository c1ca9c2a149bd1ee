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

#include "data/shapes.hpp"

#include <cmath>
#include <numbers>

#include "common/error.hpp"

namespace pdan::data {
namespace {

constexpr double kPi = std::numbers::pi;

struct Face {
  std::size_t part;
  int face;
  double area;
};

std::vector<double> face_areas(const Primitive& p) {
  const auto& s = p.size;
  switch (p.kind) {
    case PrimitiveKind::kBox:
      return {4 * s[1] * s[2], 4 * s[1] * s[2], 4 * s[0] * s[2], 4 * s[0] * s[2], 4 * s[0] * s[1], 4 * s[0] * s[1]};
    case PrimitiveKind::kCylinder:
      return {2 * kPi * s[0] * 2 * s[2], kPi * s[0] * s[0], kPi * s[0] * s[0]};
    case PrimitiveKind::kCone:
      return {kPi * s[0] * std::sqrt(s[0] * s[0] + s[2] * s[2]), kPi * s[0] * s[0]};
    case PrimitiveKind::kSphere:
      return {4 * kPi * s[0] * s[0]};
    case PrimitiveKind::kPlane:
      return {4 * s[0] * s[1]};
  }
  return {};
}

std::array<double, 3> sample_disk(double r, double z, Rng& rng) {
  const double rr = r * std::sqrt(rng.uniform());
  const double a = 2 * kPi * rng.uniform();
  return {rr * std::cos(a), rr * std::sin(a), z};
}

std::array<double, 3> sample_face(const Primitive& p, int face, Rng& rng) {
  const auto& s = p.size;
  switch (p.kind) {
    case PrimitiveKind::kBox: {
      const int axis = face / 2;
      const double sign = (face % 2 == 0) ? -1.0 : 1.0;
      std::array<double, 3> q{};
      for (int d = 0; d < 3; ++d) q[d] = d == axis ? sign * s[d] : rng.uniform(-s[d], s[d]);
      return q;
    }
    case PrimitiveKind::kCylinder: {
      if (face == 0) {
        const double a = 2 * kPi * rng.uniform();
        return {s[0] * std::cos(a), s[0] * std::sin(a), rng.uniform(-s[2], s[2])};
      }
      return sample_disk(s[0], face == 1 ? -s[2] : s[2], rng);
    }
    case PrimitiveKind::kCone: {
      if (face == 0) {
        const double t = std::sqrt(rng.uniform());
        const double a = 2 * kPi * rng.uniform();
        return {s[0] * t * std::cos(a), s[0] * t * std::sin(a), s[2] * (1.0 - t)};
      }
      return sample_disk(s[0], 0.0, rng);
    }
    case PrimitiveKind::kSphere: {
      double v[3], n2 = 0.0;
      do {
        n2 = 0.0;
        for (double& c : v) {
          c = rng.normal();
          n2 += c * c;
        }
      } while (n2 < 1e-24);
      const double k = s[0] / std::sqrt(n2);
      return {v[0] * k, v[1] * k, v[2] * k};
    }
    case PrimitiveKind::kPlane:
      return {rng.uniform(-s[0], s[0]), rng.uniform(-s[1], s[1]), 0.0};
  }
  return {0, 0, 0};
}

std::size_t pick(const std::vector<double>& cumulative, double u) {
  const double target = u * cumulative.back();
  std::size_t lo = 0, hi = cumulative.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (cumulative[mid] > target) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  return lo;
}

Primitive box(double x, double y, double z, double hx, double hy, double hz) {
  return {PrimitiveKind::kBox, {x, y, z}, {hx, hy, hz}, 0.0};
}
Primitive cylinder(double x, double y, double z, double r, double hh) {
  return {PrimitiveKind::kCylinder, {x, y, z}, {r, r, hh}, 0.0};
}
Primitive cone(double x, double y, double z, double r, double h) {
  return {PrimitiveKind::kCone, {x, y, z}, {r, r, h}, 0.0};
}
Primitive sphere(double x, double y, double z, double r) {
  return {PrimitiveKind::kSphere, {x, y, z}, {r, r, r}, 0.0};
}
Primitive plane(double x, double y, double z, double hx, double hy) {
  return {PrimitiveKind::kPlane, {x, y, z}, {hx, hy, 1.0}, 0.0};
}

void add_legs(std::vector<Primitive>& parts, double hx, double hy, double r, double height) {
  for (double sx : {-1.0, 1.0})
    for (double sy : {-1.0, 1.0}) parts.push_back(cylinder(sx * hx, sy * hy, height / 2, r, height / 2));
}

}  // namespace

void ShapeSpec::validate() const {
  require(!parts.empty(), ErrorKind::kInvalidArgument, "shape '" + name + "' has no primitives");
  require(up_axis >= 0 && up_axis <= 2, ErrorKind::kInvalidArgument, "shape '" + name + "': bad up axis");
  for (const auto& p : parts) surface_area(p);
}

double surface_area(const Primitive& p) {
  const std::size_t used = p.kind == PrimitiveKind::kPlane ? 2 : 3;
  for (std::size_t d = 0; d < used; ++d) {
    require(std::isfinite(p.size[d]) && p.size[d] > 0.0, ErrorKind::kInvalidArgument,
            "degenerate primitive: non-positive scale");
  }
  double a = 0.0;
  for (double f : face_areas(p)) a += f;
  require(a > 0.0 && std::isfinite(a), ErrorKind::kInvalidArgument, "degenerate primitive: zero area");
  return a;
}

geometry::PointCloud sample_surface(const ShapeSpec& spec, std::size_t points, Rng& rng, SamplingMode mode,
                                    std::vector<int>* surface_ids) {
  require(points >= 1, ErrorKind::kInvalidArgument, "sample_shape: need at least one point");
  spec.validate();

  std::vector<Face> faces;
  std::vector<double> cumulative;
  double total = 0.0;
  for (std::size_t i = 0; i < spec.parts.size(); ++i) {
    const auto areas = face_areas(spec.parts[i]);
    double part_area = 0.0;
    for (double a : areas) part_area += a;
    for (std::size_t f = 0; f < areas.size(); ++f) {
      // Area-biased mode gives each primitive equal total weight.
      const double w = mode == SamplingMode::kSurfaceUniform ? areas[f] : areas[f] / part_area;
      total += w;
      faces.push_back({i, static_cast<int>(f), w});
      cumulative.push_back(total);
    }
  }

  geometry::PointCloud cloud;
  cloud.xyz.resize(points * 3);
  if (surface_ids) surface_ids->assign(points, 0);
  for (std::size_t t = 0; t < points; ++t) {
    const Face& f = faces[pick(cumulative, rng.uniform())];
    const Primitive& p = spec.parts[f.part];
    const auto q = sample_face(p, f.face, rng);
    const double c = std::cos(p.yaw), s = std::sin(p.yaw);
    double local[3] = {c * q[0] - s * q[1], s * q[0] + c * q[1], q[2]};
    double* out = cloud.xyz.data() + 3 * t;
    for (int d = 0; d < 3; ++d) local[d] += p.center[d];
    // Shapes are authored z-up; permute so that z lands on the up axis.
    for (int d = 0; d < 3; ++d) out[(d + spec.up_axis + 1) % 3] = local[d];
    if (surface_ids) (*surface_ids)[t] = static_cast<int>(f.part) * 8 + f.face;
  }
  return cloud;
}

geometry::PointCloud sample_shape(const ShapeSpec& spec, std::size_t points, Rng& rng, SamplingMode mode) {
  auto cloud = geometry::normalize(sample_surface(spec, points, rng, mode));
  cloud.label = spec.class_id;
  return cloud;
}

std::size_t library_size() { return class_names().size(); }

const std::vector<std::string>& class_names() {
  static const std::vector<std::string> names = {"bathtub", "bed",     "bookshelf", "cabinet", "chair",
                                                 "lamp",    "monitor", "plant",     "sofa",    "table"};
  return names;
}

ShapeSpec make_instance(int class_id, Rng& rng) {
  require(class_id >= 0 && static_cast<std::size_t>(class_id) < library_size(), ErrorKind::kInvalidArgument,
          "unknown shape class " + std::to_string(class_id));
  auto j = [&rng](double v) { return v * rng.uniform(0.85, 1.15); };
  ShapeSpec s;
  s.class_id = class_id;
  s.name = class_names()[static_cast<std::size_t>(class_id)];
  auto& parts = s.parts;
  switch (class_id) {
    case 0: {  // bathtub: floor and four low walls
      const double hx = j(0.9), hy = j(0.45), h = j(0.3), w = 0.03;
      parts.push_back(plane(0, 0, 0, hx, hy));
      parts.push_back(box(-hx, 0, h / 2, w, hy, h / 2));
      parts.push_back(box(hx, 0, h / 2, w, hy, h / 2));
      parts.push_back(box(0, -hy, h / 2, hx, w, h / 2));
      parts.push_back(box(0, hy, h / 2, hx, w, h / 2));
      break;
    }
    case 1: {  // bed: mattress, headboard, short legs
      const double hx = j(1.0), hy = j(0.7), leg = j(0.15), m = j(0.12);
      parts.push_back(box(0, 0, leg + m, hx, hy, m));
      parts.push_back(box(-hx, 0, leg + j(0.45), 0.04, hy, j(0.45)));
      add_legs(parts, hx * 0.9, hy * 0.9, 0.04, leg);
      break;
    }
    case 2: {  // bookshelf: two sides, back, shelves
      const double hx = j(0.5), hy = j(0.18), hh = j(0.9);
      parts.push_back(box(-hx, 0, hh, 0.03, hy, hh));
      parts.push_back(box(hx, 0, hh, 0.03, hy, hh));
      parts.push_back(box(0, -hy, hh, hx, 0.01, hh));
      const int shelves = 3 + static_cast<int>(rng.below(3));
      for (int i = 0; i <= shelves; ++i) parts.push_back(plane(0, 0, 2 * hh * i / shelves, hx, hy));
      break;
    }
    case 3: {  // cabinet: closed body on a plinth, with a knob
      const double hx = j(0.5), hy = j(0.35), hh = j(0.5);
      parts.push_back(box(0, 0, 0.05 + hh, hx, hy, hh));
      parts.push_back(box(0, 0, 0.025, hx * 0.9, hy * 0.9, 0.025));
      parts.push_back(sphere(hx * 0.6, hy + 0.03, 0.05 + hh * 1.5, 0.04));
      break;
    }
    case 4: {  // chair: seat, backrest, four legs
      const double hs = j(0.3), leg = j(0.45), back = j(0.4);
      parts.push_back(box(0, 0, leg + 0.03, hs, hs, 0.03));
      parts.push_back(box(-hs, 0, leg + 0.06 + back, 0.03, hs, back));
      add_legs(parts, hs * 0.85, hs * 0.85, 0.025, leg);
      break;
    }
    case 5: {  // lamp: base disk, pole, conical shade
      const double pole = j(0.6), shade = j(0.3);
      parts.push_back(cylinder(0, 0, 0.03, j(0.2), 0.03));
      parts.push_back(cylinder(0, 0, 0.06 + pole, 0.02, pole));
      parts.push_back(cone(0, 0, 0.06 + 2 * pole - shade * 0.5, j(0.3), shade));
      break;
    }
    case 6: {  // monitor: thin screen, neck, foot
      const double w = j(0.6), h = j(0.38), neck = j(0.15);
      parts.push_back(box(0, 0, 0.02, j(0.2), j(0.14), 0.02));
      parts.push_back(cylinder(0, 0, 0.04 + neck, 0.03, neck));
      parts.push_back(box(0, 0, 0.04 + 2 * neck + h, w, 0.03, h));
      break;
    }
    case 7: {  // plant: pot, stem, foliage blobs
      const double pot = j(0.2), stem = j(0.3);
      parts.push_back(cylinder(0, 0, pot, j(0.2), pot));
      parts.push_back(cylinder(0, 0, 2 * pot + stem, 0.02, stem));
      const int blobs = 1 + static_cast<int>(rng.below(3));
      for (int i = 0; i < blobs; ++i) {
        const double a = 2 * kPi * rng.uniform();
        const double off = i == 0 ? 0.0 : j(0.15);
        parts.push_back(sphere(off * std::cos(a), off * std::sin(a), 2 * pot + 2 * stem + j(0.1), j(0.25)));
      }
      break;
    }
    case 8: {  // sofa: long seat block, backrest, two arms
      const double hx = j(0.9), hy = j(0.4), seat = j(0.2);
      parts.push_back(box(0, 0, seat, hx, hy, seat));
      parts.push_back(box(0, -hy, 2 * seat + j(0.25), hx, 0.1, j(0.25)));
      for (double sx : {-1.0, 1.0}) parts.push_back(box(sx * hx, 0, seat + j(0.15), 0.1, hy, seat + 0.1));
      break;
    }
    case 9: {  // table: top and four legs
      const double hx = j(0.6), hy = j(0.4), leg = j(0.5);
      parts.push_back(box(0, 0, leg + 0.025, hx, hy, 0.025));
      add_legs(parts, hx * 0.9, hy * 0.9, 0.03, leg);
      break;
    }
    default:
      break;
  }
  s.validate();
  return s;
}

}  // namespace pdan::data
