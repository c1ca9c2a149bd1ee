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

#include "data/benchmark.hpp"

#include <atomic>
#include <filesystem>
#include <thread>
#include <unordered_set>

#include "common/error.hpp"

namespace pdan::data {
namespace {

namespace fs = std::filesystem;

constexpr const char* kSplitNames[] = {"train", "test"};
constexpr const char* kDomainNames[] = {"A", "B"};

std::vector<geometry::PointCloud> generate_split(const BenchmarkConfig& cfg, int domain, int split,
                                                 std::size_t per_class) {
  const DomainProfile& profile = domain == 0 ? cfg.profile_a : cfg.profile_b;
  const std::size_t total = cfg.class_count * per_class;
  std::vector<geometry::PointCloud> clouds(total);
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto work = [&] {
    try {
      for (std::size_t i = next++; i < total && !failed; i = next++) {
        const std::size_t c = i / per_class, k = i % per_class;
        clouds[i] = generate_instance(static_cast<int>(c), profile, cfg.points,
                                      instance_seed(cfg.seed, domain, split, c, k));
      }
    } catch (...) {
      if (!failed.exchange(true)) error = std::current_exception();
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.threads, total));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return clouds;
}

}  // namespace

void BenchmarkConfig::validate() const {
  require(class_count >= 1 && class_count <= library_size(), ErrorKind::kInvalidArgument,
          "benchmark: class count must lie in [1, " + std::to_string(library_size()) + "]");
  require(per_class_train >= 1 && per_class_test >= 1, ErrorKind::kInvalidArgument,
          "benchmark: need at least one sample per class and split");
  require(points >= kMinDomainPoints, ErrorKind::kInvalidArgument,
          "benchmark: need at least " + std::to_string(kMinDomainPoints) + " points per cloud");
  require(threads >= 1, ErrorKind::kInvalidArgument, "benchmark: threads must be >= 1");
  profile_a.validate();
  profile_b.validate();
}

std::uint64_t instance_seed(std::uint64_t seed, int domain, int split, std::size_t class_id, std::size_t index) {
  const auto stream = static_cast<std::uint64_t>(domain * 2 + split);
  return derive_seed(seed, stream, (static_cast<std::uint64_t>(class_id) << 32) | index);
}

geometry::PointCloud generate_instance(int class_id, const DomainProfile& profile, std::size_t points,
                                       std::uint64_t seed) {
  Rng rng(seed);
  const ShapeSpec spec = make_instance(class_id, rng);
  auto cloud = apply_domain(sample_shape(spec, points, rng, profile.sampling), profile, rng);
  cloud.label = class_id;
  return cloud;
}

BenchmarkManifests generate_benchmark(const BenchmarkConfig& config, const std::string& out_dir) {
  config.validate();
  std::unordered_set<std::uint64_t> seeds;
  for (int d = 0; d < 2; ++d)
    for (int s = 0; s < 2; ++s) {
      const std::size_t per = s == 0 ? config.per_class_train : config.per_class_test;
      for (std::size_t c = 0; c < config.class_count; ++c)
        for (std::size_t k = 0; k < per; ++k) {
          require(seeds.insert(instance_seed(config.seed, d, s, c, k)).second, ErrorKind::kState,
                  "benchmark: instance seed collision; choose another seed");
        }
    }

  BenchmarkManifests result;
  for (int d = 0; d < 2; ++d) {
    const fs::path dir = fs::path(out_dir) / kDomainNames[d];
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, ErrorKind::kIo, "cannot create directory " + dir.string() + ": " + ec.message());

    DatasetManifest m;
    m.domain = kDomainNames[d];
    m.seed = config.seed;
    m.points = config.points;
    const auto& names = class_names();
    m.class_names.assign(names.begin(), names.begin() + static_cast<std::ptrdiff_t>(config.class_count));
    m.profile = (d == 0 ? config.profile_a : config.profile_b).describe();
    for (int s = 0; s < 2; ++s) {
      const std::size_t per = s == 0 ? config.per_class_train : config.per_class_test;
      const auto clouds = generate_split(config, d, s, per);
      const std::string file = std::string(kSplitNames[s]) + ".bin";
      auto recs = write_payload((dir / file).string(), kSplitNames[s], m.domain, clouds);
      m.splits.push_back({kSplitNames[s], file, clouds.size()});
      m.records.insert(m.records.end(), recs.begin(), recs.end());
    }
    const std::string path = (dir / "manifest.txt").string();
    m.write(path);
    (d == 0 ? result.a : result.b) = m;
    (d == 0 ? result.a_path : result.b_path) = path;
  }
  return result;
}

}  // namespace pdan::data
