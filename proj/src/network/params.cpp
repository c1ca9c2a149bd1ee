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

#include "network/params.hpp"

#include <algorithm>
#include <cmath>

#include "common/hash.hpp"
#include "common/rng.hpp"

namespace pdan::network {

void ModelConfig::validate() const {
  require(num_classes >= 2, ErrorKind::kInvalidArgument, "model: need at least 2 classes");
  require(n_nodes >= 3, ErrorKind::kInvalidArgument, "model: need at least 3 nodes for interpolation");
  require(k_neighbors >= 1, ErrorKind::kInvalidArgument, "model: k_neighbors must be positive");
  require(reduction >= 1 && n_nodes % reduction == 0, ErrorKind::kInvalidArgument,
          "model: node count " + std::to_string(n_nodes) + " not divisible by reduction ratio " +
              std::to_string(reduction));
  require(!encoder_widths.empty() && !generator_widths.empty(), ErrorKind::kInvalidArgument,
          "model: encoder and generator need at least one layer");
  require(classifier_hidden >= 1, ErrorKind::kInvalidArgument, "model: classifier_hidden must be positive");
}

ModelConfig ModelConfig::toy(std::size_t num_classes) {
  ModelConfig c;
  c.num_classes = num_classes;
  c.n_nodes = 8;
  c.k_neighbors = 4;
  c.reduction = 4;
  c.encoder_widths = {8, 8, 8};
  c.generator_widths = {16, 32};
  c.classifier_hidden = 16;
  return c;
}

std::string_view group_name(ParamGroup g) {
  switch (g) {
    case ParamGroup::kEncoder: return "encoder";
    case ParamGroup::kTransform: return "transform";
    case ParamGroup::kGather: return "gather";
    case ParamGroup::kAttention: return "attention";
    case ParamGroup::kGenerator: return "generator";
    case ParamGroup::kClassifier1: return "classifier1";
    case ParamGroup::kClassifier2: return "classifier2";
  }
  return "unknown";
}

bool is_classifier(ParamGroup g) {
  return g == ParamGroup::kClassifier1 || g == ParamGroup::kClassifier2;
}

template <class Real>
void ModelParams<Real>::add(std::string name, ParamGroup group, tensor::Shape shape) {
  params_.push_back({std::move(name), group, Tensor<Real>(std::move(shape))});
}

template <class Real>
ModelParams<Real> ModelParams<Real>::init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config_ = config;
  auto layer = [&p](const std::string& prefix, ParamGroup g, std::size_t cin, std::size_t cout) {
    p.add(prefix + ".weight", g, {cin, cout});
    p.add(prefix + ".bias", g, {cout});
  };
  std::size_t w = 3;
  for (std::size_t i = 0; i < config.encoder_widths.size(); ++i) {
    layer("encoder." + std::to_string(i), ParamGroup::kEncoder, w, config.encoder_widths[i]);
    w = config.encoder_widths[i];
  }
  const std::size_t c = config.point_width();
  layer("transform", ParamGroup::kTransform, c, 1);
  layer("gather", ParamGroup::kGather, c, c);
  const std::size_t n = config.n_nodes, nr = config.n_nodes / config.reduction;
  layer("attention.down", ParamGroup::kAttention, n, nr);
  layer("attention.up", ParamGroup::kAttention, nr, n);
  w = config.fused_width();
  for (std::size_t i = 0; i < config.generator_widths.size(); ++i) {
    layer("generator." + std::to_string(i), ParamGroup::kGenerator, w, config.generator_widths[i]);
    w = config.generator_widths[i];
  }
  for (int head = 1; head <= 2; ++head) {
    const auto g = head == 1 ? ParamGroup::kClassifier1 : ParamGroup::kClassifier2;
    const std::string prefix = "classifier" + std::to_string(head);
    layer(prefix + ".0", g, config.global_width(), config.classifier_hidden);
    layer(prefix + ".1", g, config.classifier_hidden, config.num_classes);
  }

  // Fan-in is the weight's leading dimension; a bias shares its layer's bound.
  std::size_t fan_in = 1;
  for (auto& prm : p.params_) {
    if (prm.value.rank() == 2) fan_in = prm.value.dim(0);
    const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
    Rng rng(derive_seed(seed, fnv1a64(prm.name)));
    for (auto& v : prm.value.data()) v = static_cast<Real>(rng.uniform(-bound, bound));
  }
  return p;
}

template <class Real>
std::size_t ModelParams<Real>::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  fail(ErrorKind::kInvalidArgument, "unknown parameter '" + std::string(name) + "'");
}

template <class Real>
Tensor<Real>& ModelParams<Real>::at(std::string_view name) {
  return params_[index_of(name)].value;
}

template <class Real>
const Tensor<Real>& ModelParams<Real>::at(std::string_view name) const {
  return params_[index_of(name)].value;
}

template <class Real>
void ModelParams<Real>::set_trainable(std::initializer_list<ParamGroup> groups) {
  set_trainable(std::vector<ParamGroup>(groups));
}

template <class Real>
void ModelParams<Real>::set_trainable(const std::vector<ParamGroup>& groups) {
  for (auto& p : params_)
    p.value.set_requires_grad(std::find(groups.begin(), groups.end(), p.group) != groups.end());
}

template <class Real>
void ModelParams<Real>::zero_grad() {
  for (auto& p : params_) p.value.zero_grad();
}

template <class Real>
std::size_t ModelParams<Real>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.numel();
  return n;
}

template <class Real>
BoundParams<Real>::BoundParams(tensor::Tape<Real>& tape, ModelParams<Real>& params)
    : tape_(&tape), params_(&params) {
  vars_.reserve(params.all().size());
  for (auto& p : params.all()) vars_.push_back(tape.watch(p.value));
}

template <class Real>
const Var<Real>& BoundParams<Real>::operator[](std::string_view name) const {
  return vars_[params_->index_of(name)];
}

template class ModelParams<float>;
template class ModelParams<double>;
template class BoundParams<float>;
template class BoundParams<double>;

}  // namespace pdan::network
