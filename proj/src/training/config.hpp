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
#include <map>
#include <string>
#include <string_view>

#include "losses/losses.hpp"
#include "network/params.hpp"

namespace pdan::training {

/// Method components, named after the ablation flags: G (global alignment
/// with two adversarial classifiers), L (node-feature MMD), A (adaptive
/// nodes and node attention), P (pseudo-label finetuning).
struct Ablation {
  bool global_align = true;
  bool local_align = true;
  bool adaptive_nodes = true;
  bool pseudo_label = true;

  /// "none", "g", "gl", "gla" or "glap".
  static Ablation parse(std::string_view name);
  std::string name() const;
};

enum class MmdPooling {
  kNode,    // every node of every object is one sample
  kObject,  // nodes averaged per object first
};

enum class Precision { kDouble, kFloat };

struct TrainConfig {
  double learning_rate = 1e-4;
  double weight_decay = 5e-4;
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  std::size_t n_nodes = 64;
  std::size_t k_neighbors = 20;
  losses::LossWeights weights;
  losses::KernelConfig kernel;
  MmdPooling mmd_pooling = MmdPooling::kNode;
  /// With node pooling, the MMD uses a random subset of at most this many
  /// node rows per domain and step (0 keeps every row).
  std::size_t mmd_rows = 0;
  std::uint64_t seed = 0;
  Ablation ablation;
  double pseudo_fraction = 0.10;
  std::size_t finetune_epochs = 20;
  /// Step-2 updates per Step-1 update.
  std::size_t generator_repeats = 1;
  Precision precision = Precision::kDouble;
  /// Single-threaded, timing-free outputs for bitwise comparisons.
  bool strict = false;
  std::size_t threads = 1;
  /// Train-time augmentation: random rotation about the up axis + jitter.
  bool augment = false;

  void validate() const;
  network::ModelConfig model_config(std::size_t num_classes) const;
  std::size_t effective_threads() const { return strict ? 1 : threads; }

  /// Canonical key=value form; apply() accepts the same keys.
  std::map<std::string, std::string> to_map() const;
  /// Sets one key; throws a usage error for unknown keys or bad values.
  void apply(const std::string& key, const std::string& value);
  static bool has_key(const std::string& key);
};

}  // namespace pdan::training
