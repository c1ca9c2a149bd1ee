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
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "training/config.hpp"
#include "training/trainer.hpp"

namespace pdan::training {

inline constexpr std::uint32_t kRunFormatVersion = 1;
inline constexpr const char* kMetricsHeader = "epoch,l_cls,l_dis,l_mmd,src_acc,tgt_acc,seconds";

/// Everything a `train` invocation needs. Data paths name a domain
/// manifest or a directory holding manifest.txt.
struct ExperimentConfig {
  TrainConfig train;
  std::string source;
  std::string target;
  std::string out_dir = "runs";
  std::size_t seeds = 1;

  void validate() const;
  std::map<std::string, std::string> to_map() const;
  void apply(const std::string& key, const std::string& value);
  static bool has_key(const std::string& key);
  /// Keys written into run manifests that carry results, not settings.
  static bool is_manifest_metadata(const std::string& key);
  /// Sorted key=value lines (out_dir excluded) and their FNV-1a hash.
  std::string canonical_text() const;
  std::string hash() const;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::string run_dir;
  double final_target_acc = 0.0;
  double final_source_acc = 0.0;
  std::size_t pseudo_selected = 0;
  std::vector<TrainRecord> records;
};

struct ExperimentResult {
  std::string run_dir;
  std::vector<SeedResult> runs;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation, 0 for one run
};

using ProgressFn = std::function<void(const SeedResult& run, const TrainRecord& record)>;

/// Resolves a manifest path from a file or directory argument.
std::string manifest_path(const std::string& path);

/// Trains one model per seed (seed, seed+1, ...) under
/// <out_dir>/run-<hash>/seed-<s>/ with metrics.csv, checkpoint.bin,
/// target_eval.csv and manifest.txt, then writes summary.txt and
/// config.txt next to them. Target test labels are read only by the
/// per-epoch evaluation.
ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress = {});

/// mean and sample standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& values);

/// Shortest round-trip decimal form, independent of the C locale.
std::string format_number(double v);

}  // namespace pdan::training
