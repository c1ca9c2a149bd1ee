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
#include <string_view>
#include <vector>

#include "tensor/tape.hpp"

namespace pdan::network {

using tensor::Tensor;
using tensor::Var;

/// Layer widths and node settings. Defaults follow the PointNet-style
/// backbone: encoder 3->64->64->64, generator 128->128->1024, classifiers
/// 1024->512->K, 64 nodes with 20 neighbors and a 4x attention bottleneck.
struct ModelConfig {
  std::size_t num_classes = 10;
  std::size_t n_nodes = 64;
  std::size_t k_neighbors = 20;
  std::size_t reduction = 4;
  std::vector<std::size_t> encoder_widths = {64, 64, 64};
  std::vector<std::size_t> generator_widths = {128, 1024};
  std::size_t classifier_hidden = 512;

  std::size_t point_width() const { return encoder_widths.back(); }
  std::size_t fused_width() const { return 2 * point_width(); }
  std::size_t global_width() const { return generator_widths.back(); }

  /// Throws on inconsistent settings (e.g. n_nodes not divisible by reduction).
  void validate() const;

  /// Small widths for gradient checks and fast tests.
  static ModelConfig toy(std::size_t num_classes);
};

enum class ParamGroup : std::uint8_t {
  kEncoder,
  kTransform,    // R_T: edge feature -> scalar edge weight
  kGather,       // R_G: point feature transform before region max
  kAttention,    // W_D, W_U
  kGenerator,
  kClassifier1,
  kClassifier2,
};

inline constexpr ParamGroup kAllGroups[] = {ParamGroup::kEncoder,   ParamGroup::kTransform,
                                            ParamGroup::kGather,    ParamGroup::kAttention,
                                            ParamGroup::kGenerator, ParamGroup::kClassifier1,
                                            ParamGroup::kClassifier2};

std::string_view group_name(ParamGroup g);
bool is_classifier(ParamGroup g);

template <class Real>
struct Param {
  std::string name;
  ParamGroup group;
  Tensor<Real> value;
};

/// All learnable tensors in a fixed order.
template <class Real>
class ModelParams {
 public:
  ModelParams() = default;

  /// Uniform fan-in init in [-sqrt(1/Cin), sqrt(1/Cin)]; every tensor draws
  /// from a stream derived from (seed, tensor name), so the two classifiers
  /// never start identical.
  static ModelParams init(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  ModelConfig& config() noexcept { return config_; }
  std::vector<Param<Real>>& all() noexcept { return params_; }
  const std::vector<Param<Real>>& all() const noexcept { return params_; }

  Tensor<Real>& at(std::string_view name);
  const Tensor<Real>& at(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  /// Marks exactly the given groups as requiring gradients.
  void set_trainable(std::initializer_list<ParamGroup> groups);
  void set_trainable(const std::vector<ParamGroup>& groups);
  void zero_grad();

  std::size_t parameter_count() const;

  template <class To>
  ModelParams<To> cast() const {
    ModelParams<To> out;
    out.config() = config_;
    for (const auto& p : params_) out.all().push_back({p.name, p.group, tensor::cast<To>(p.value)});
    return out;
  }

 private:
  void add(std::string name, ParamGroup group, tensor::Shape shape);

  ModelConfig config_;
  std::vector<Param<Real>> params_;
};

/// Parameters recorded on one tape, in the same order as ModelParams::all().
template <class Real>
class BoundParams {
 public:
  BoundParams(tensor::Tape<Real>& tape, ModelParams<Real>& params);

  const Var<Real>& operator[](std::string_view name) const;
  const ModelConfig& config() const { return params_->config(); }
  tensor::Tape<Real>& tape() const { return *tape_; }

 private:
  tensor::Tape<Real>* tape_;
  ModelParams<Real>* params_;
  std::vector<Var<Real>> vars_;
};

}  // namespace pdan::network
