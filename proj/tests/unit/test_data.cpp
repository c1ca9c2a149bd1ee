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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "data/benchmark.hpp"
#include "data/dataset.hpp"
#include "data/domain.hpp"
#include "data/shapes.hpp"
#include "test_util.hpp"

namespace pdan::data {
namespace {

namespace fs = std::filesystem;

ShapeSpec single(Primitive p) {
  ShapeSpec s;
  s.name = "probe";
  s.parts = {p};
  return s;
}

TEST(Shapes, SurfaceAreasMatchClosedForms) {
  using std::numbers::pi;
  EXPECT_NEAR(surface_area({PrimitiveKind::kBox, {}, {1, 2, 3}}), 8 * (1 * 2 + 1 * 3 + 2 * 3), 1e-12);
  EXPECT_NEAR(surface_area({PrimitiveKind::kSphere, {}, {2, 2, 2}}), 4 * pi * 4, 1e-12);
  EXPECT_NEAR(surface_area({PrimitiveKind::kCylinder, {}, {1, 1, 0.5}}), 2 * pi * 1 * 1 + 2 * pi, 1e-12);
  EXPECT_NEAR(surface_area({PrimitiveKind::kCone, {}, {3, 3, 4}}), pi * 3 * 5 + pi * 9, 1e-12);
  EXPECT_NEAR(surface_area({PrimitiveKind::kPlane, {}, {1, 2, 0}}), 8, 1e-12);
  EXPECT_THROW(surface_area({PrimitiveKind::kBox, {}, {0, 1, 1}}), Error);
}

TEST(Shapes, SpherePointsSitOnTheSphere) {
  Rng rng(1);
  auto c = sample_surface(single({PrimitiveKind::kSphere, {}, {1, 1, 1}}), 10000, rng);
  double mean = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double* p = c.point(i);
    mean += std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  }
  EXPECT_NEAR(mean / 10000.0, 1.0, 0.01);
}

TEST(Shapes, BoxFaceFrequenciesFollowAreas) {
  // Half extents (1, 2, 3): face areas are 4*yz, 4*xz, 4*xy for the x, y, z pairs.
  const std::size_t n = 60000;
  Rng rng(2);
  std::vector<int> ids;
  sample_surface(single({PrimitiveKind::kBox, {}, {1, 2, 3}}), n, rng, SamplingMode::kSurfaceUniform, &ids);
  const double areas[6] = {24, 24, 12, 12, 8, 8};
  const double total = 88;
  std::vector<std::size_t> count(6, 0);
  for (int id : ids) ++count.at(static_cast<std::size_t>(id));
  for (int f = 0; f < 6; ++f) {
    const double p = areas[f] / total;
    const double expected = p * n, sigma = std::sqrt(n * p * (1 - p));
    EXPECT_LE(std::abs(static_cast<double>(count[f]) - expected), 3 * sigma) << "face " << f;
  }
}

TEST(Shapes, BoxPointsLieOnTheirFace) {
  Rng rng(3);
  std::vector<int> ids;
  auto c = sample_surface(single({PrimitiveKind::kBox, {}, {1, 2, 3}}), 500, rng, SamplingMode::kSurfaceUniform, &ids);
  const double half[3] = {1, 2, 3};
  for (std::size_t i = 0; i < c.size(); ++i) {
    const int axis = ids[i] / 2, sign = ids[i] % 2 ? 1 : -1;
    EXPECT_NEAR(c.point(i)[axis], sign * half[axis], 1e-12);
  }
}

TEST(Shapes, SamplingIsDeterministicAndNormalized) {
  Rng r1(4), r2(4);
  const auto spec = make_instance(4, r1);
  const auto again = make_instance(4, r2);
  ASSERT_EQ(spec.parts.size(), again.parts.size());
  auto a = sample_shape(spec, 256, r1), b = sample_shape(again, 256, r2);
  EXPECT_EQ(a.xyz, b.xyz);
  EXPECT_NEAR(geometry::max_norm(a), 1.0, 1e-9);
  EXPECT_LT(geometry::centroid_norm(a), 1e-9);
  EXPECT_EQ(a.label, 4);
}

TEST(Shapes, LibraryHasTenClasses) {
  EXPECT_EQ(library_size(), 10u);
  EXPECT_EQ(class_names().front(), "bathtub");
  Rng rng(5);
  for (int c = 0; c < 10; ++c) EXPECT_NO_THROW(make_instance(c, rng).validate());
  EXPECT_THROW(make_instance(10, rng), Error);
}

TEST(Domain, NullProfileOnlyRenormalizes) {
  Rng rng(6);
  auto c = test::random_cloud(100, rng);
  DomainProfile none;
  auto out = apply_domain(c, none, rng);
  ASSERT_EQ(out.size(), c.size());
  for (std::size_t i = 0; i < c.xyz.size(); ++i) EXPECT_NEAR(out.xyz[i], c.xyz[i], 1e-12);
}

TEST(Domain, OcclusionRespectsTheCapAndThePlane) {
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    auto c = test::random_cloud(200, rng);
    Occlusion info;
    auto out = occlude(c, 0.3, rng, &info);
    EXPECT_LE(info.removed, static_cast<std::size_t>(std::floor(0.3 * 200)));
    EXPECT_EQ(out.size() + info.removed, c.size());
    std::size_t beyond = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double* p = c.point(i);
      const double proj = p[0] * info.direction[0] + p[1] * info.direction[1] + p[2] * info.direction[2];
      beyond += proj > info.offset ? 1 : 0;
    }
    EXPECT_EQ(beyond, info.removed);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double* p = out.point(i);
      EXPECT_LE(p[0] * info.direction[0] + p[1] * info.direction[1] + p[2] * info.direction[2], info.offset);
    }
  }
}

TEST(Domain, ScannedProfileKeepsPointCountAndNormalization) {
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    auto c = test::random_cloud(256, rng);
    auto out = apply_domain(c, DomainProfile::scanned(), rng);
    EXPECT_EQ(out.size(), 256u);
    EXPECT_NEAR(geometry::max_norm(out), 1.0, 1e-9);
    EXPECT_LT(geometry::centroid_norm(out), 1e-9);
  }
  auto tiny = test::random_cloud(4, rng);
  EXPECT_THROW(apply_domain(tiny, DomainProfile::scanned(), rng), Error);
}

TEST(Domain, InvalidProfilesAreRejected) {
  DomainProfile p;
  p.occlusion_cap = 0.6;
  EXPECT_THROW(p.validate(), Error);
  p = {};
  p.jitter_sigma = -0.1;
  EXPECT_THROW(p.validate(), Error);
}

BenchmarkConfig small_config() {
  BenchmarkConfig cfg;
  cfg.class_count = 4;
  cfg.per_class_train = 6;
  cfg.per_class_test = 3;
  cfg.points = 64;
  cfg.seed = 7;
  return cfg;
}

TEST(Benchmark, CountsAndLabelsAreExact) {
  test::TempDir dir("bench");
  auto m = generate_benchmark(small_config(), dir.str());
  for (const auto* man : {&m.a, &m.b}) {
    EXPECT_EQ(man->count("train"), 24u);
    EXPECT_EQ(man->count("test"), 12u);
    std::map<std::pair<std::string, int>, int> hist;
    for (const auto& r : man->records) ++hist[{r.split, r.label}];
    for (int c = 0; c < 4; ++c) {
      EXPECT_EQ((hist[{"train", c}]), 6);
      EXPECT_EQ((hist[{"test", c}]), 3);
    }
  }
}

TEST(Benchmark, InstanceSeedsAreDisjoint) {
  std::set<std::uint64_t> seen;
  for (int dom = 0; dom < 2; ++dom)
    for (int split = 0; split < 2; ++split)
      for (std::size_t c = 0; c < 10; ++c)
        for (std::size_t i = 0; i < 128; ++i) EXPECT_TRUE(seen.insert(instance_seed(0, dom, split, c, i)).second);
}

std::map<std::string, std::string> hash_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file())
      out[fs::relative(e.path(), root).string()] = hex64(fnv1a64(test::read_file(e.path().string())));
  return out;
}

TEST(Benchmark, GenerationIsByteIdenticalAcrossRunsAndThreads) {
  test::TempDir d1("gen1"), d2("gen2");
  auto cfg = small_config();
  generate_benchmark(cfg, d1.str());
  cfg.threads = 3;
  generate_benchmark(cfg, d2.str());
  const auto h1 = hash_tree(d1.path()), h2 = hash_tree(d2.path());
  EXPECT_EQ(h1.size(), 6u);
  EXPECT_EQ(h1, h2);
}

TEST(Dataset, GenerateThenLoadIsBitwise) {
  test::TempDir dir("load");
  const auto cfg = small_config();
  auto m = generate_benchmark(cfg, dir.str());
  auto set = load_labeled(m.b_path, "test", geometry::DomainTag::kTarget);
  ASSERT_EQ(set.size(), 12u);
  EXPECT_EQ(set.num_classes, 4u);
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto& r = m.b.records[m.b.count("train") + i];
    ASSERT_EQ(r.split, "test");
    const auto ref = generate_instance(r.label, cfg.profile_b, cfg.points,
                                       instance_seed(cfg.seed, 1, 1, static_cast<std::size_t>(r.label), r.index % 3));
    ASSERT_EQ(set.clouds[i].label, r.label);
    for (std::size_t k = 0; k < ref.xyz.size(); ++k)
      EXPECT_EQ(set.clouds[i].xyz[k], static_cast<double>(static_cast<float>(ref.xyz[k])));
  }
}

TEST(Dataset, UnlabeledSetCarriesNoLabels) {
  test::TempDir dir("unlabeled");
  auto m = generate_benchmark(small_config(), dir.str());
  auto set = load_unlabeled(m.b_path, "train");
  EXPECT_EQ(set.size(), 24u);
  for (const auto& c : set.clouds()) {
    EXPECT_FALSE(c.label.has_value());
    EXPECT_EQ(c.domain, geometry::DomainTag::kTarget);
  }
}

ErrorKind read_kind(const std::string& manifest, const std::string& split, std::string* what = nullptr) {
  try {
    DatasetReader reader(manifest, split);
    for (std::size_t i = 0; i < reader.size(); ++i) reader.read(i, true);
  } catch (const Error& e) {
    if (what) *what = e.what();
    return e.kind();
  }
  return ErrorKind::kState;
}

TEST(Dataset, CorruptionIsReportedPrecisely) {
  test::TempDir dir("corrupt");
  auto m = generate_benchmark(small_config(), dir.str());
  const fs::path bin = fs::path(m.a_path).parent_path() / "train.bin";
  const std::string good = test::read_file(bin.string());
  auto put = [&](const std::string& bytes) { std::ofstream(bin, std::ios::binary | std::ios::trunc) << bytes; };

  std::string flipped = good;
  const std::size_t rec5 = kPayloadHeaderBytes + 5 * 64 * 12 + 7;
  flipped[rec5] ^= 0x10;
  put(flipped);
  std::string what;
  EXPECT_EQ(read_kind(m.a_path, "train", &what), ErrorKind::kChecksum);
  EXPECT_NE(what.find("train[5]"), std::string::npos) << what;

  put(good.substr(0, good.size() - 100));
  EXPECT_EQ(read_kind(m.a_path, "train", &what), ErrorKind::kTruncated);
  EXPECT_NE(what.find("train[23]"), std::string::npos) << what;

  std::string version = good;
  version[4] = 2;
  put(version);
  EXPECT_EQ(read_kind(m.a_path, "train"), ErrorKind::kVersion);

  put(good);
  EXPECT_EQ(read_kind(m.a_path, "train"), ErrorKind::kState);  // clean read
}

TEST(Dataset, ManifestErrorsAreDistinct) {
  test::TempDir dir("manifest");
  auto m = generate_benchmark(small_config(), dir.str());
  std::string text = test::read_file(m.a_path);
  auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream(dir.str(name)) << body;
    return dir.str(name);
  };
  auto kind = [](const std::string& p) {
    try {
      DatasetManifest::read(p);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kState;
  };
  std::string v2 = text;
  v2.replace(v2.find("format_version=1"), 16, "format_version=2");
  EXPECT_EQ(kind(write("v2.txt", v2)), ErrorKind::kVersion);
  EXPECT_EQ(kind(write("extra.txt", text + "colour=blue\n")), ErrorKind::kFormat);
  EXPECT_EQ(kind(dir.str("nope.txt")), ErrorKind::kIo);

  DatasetManifest back = DatasetManifest::read(m.a_path);
  back.write(dir.str("copy.txt"));
  EXPECT_EQ(test::read_file(dir.str("copy.txt")), text);
}

TEST(Dataset, ExternalPayloadInTheDocumentedFormatLoads) {
  // Build a 1024-point file by hand: header, float32 LE xyz, CRC32 per record.
  test::TempDir dir("external");
  Rng rng(9);
  std::vector<geometry::PointCloud> clouds;
  for (int i = 0; i < 3; ++i) {
    auto c = test::random_cloud(1024, rng);
    c.label = i;
    clouds.push_back(c);
  }
  DatasetManifest m;
  m.domain = "ext";
  m.points = 1024;
  m.class_names = {"a", "b", "c"};
  m.profile = "external";
  m.splits = {{"test", "test.bin", 3}};
  m.records = write_payload(dir.str("test.bin"), "test", "ext", clouds);
  m.write(dir.str("manifest.txt"));
  auto set = load_labeled(dir.str("manifest.txt"), "test", geometry::DomainTag::kTarget);
  ASSERT_EQ(set.size(), 3u);
  EXPECT_EQ(set.clouds[2].size(), 1024u);
  EXPECT_EQ(set.clouds[2].label, 2);
}

}  // namespace
}  // namespace pdan::data
