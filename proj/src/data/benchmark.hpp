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
#include <string>

#include "data/dataset.hpp"
#include "data/domain.hpp"

namespace pdan::data {

struct BenchmarkConfig {
  std::size_t class_count = 10;
  std::size_t per_class_train = 128;
  std::size_t per_class_test = 32;
  std::size_t points = 1024;
  std::uint64_t seed = 0;
  DomainProfile profile_a = DomainProfile::clean();
  DomainProfile profile_b = DomainProfile::scanned();
  /// Worker threads for sample generation; output does not depend on it.
  std::size_t threads = 1;

  void validate() const;
};

struct BenchmarkManifests {
  DatasetManifest a, b;
  std::string a_path, b_path;
};

/// Seed of one shape instance. Distinct (domain, split, class, index)
/// tuples map to distinct streams.
std::uint64_t instance_seed(std::uint64_t seed, int domain, int split, std::size_t class_id, std::size_t index);

/// One instance: randomized shape, surface sampling, domain corruption.
geometry::PointCloud generate_instance(int class_id, const DomainProfile& profile, std::size_t points,
                                       std::uint64_t instance_seed);

/// Writes <out>/A and <out>/B, each holding manifest.txt, train.bin and
/// test.bin. Records are class-major within each split.
BenchmarkManifests generate_benchmark(const BenchmarkConfig& config, const std::string& out_dir);

}  // namespace pdan::data
