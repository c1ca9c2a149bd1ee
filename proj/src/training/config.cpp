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

#include "training/config.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "common/error.hpp"

namespace pdan::training {
namespace {

std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  require(r.ec == std::errc() && r.ptr == v.data() + v.size() && std::isfinite(out), ErrorKind::kUsage,
          "config: '" + key + "' expects a number, got '" + v + "'");
  return out;
}

std::uint64_t to_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  require(r.ec == std::errc() && r.ptr == v.data() + v.size(), ErrorKind::kUsage,
          "config: '" + key + "' expects a non-negative integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  fail(ErrorKind::kUsage, "config: '" + key + "' expects a boolean, got '" + v + "'");
}

const std::set<std::string>& keys() {
  static const std::set<std::string> k = {
      "lr",        "wd",     "epochs",          "batch",           "nodes",             "k",
      "lambda",    "beta",   "kernel",          "mmd_pooling",     "mmd_rows",        "seed",              "ablation",
      "pseudo_fraction",     "finetune_epochs", "generator_repeats", "precision",       "strict",
      "threads",   "augment"};
  return k;
}

}  // namespace

Ablation Ablation::parse(std::string_view name) {
  if (name == "none") return {false, false, false, false};
  if (name == "g") return {true, false, false, false};
  if (name == "gl") return {true, true, false, false};
  if (name == "gla") return {true, true, true, false};
  if (name == "glap") return {true, true, true, true};
  fail(ErrorKind::kUsage, "unknown ablation '" + std::string(name) + "' (expected none, g, gl, gla or glap)");
}

std::string Ablation::name() const {
  std::string s;
  if (global_align) s += "g";
  if (local_align) s += "l";
  if (adaptive_nodes) s += "a";
  if (pseudo_label) s += "p";
  return s.empty() ? "none" : s;
}

void TrainConfig::validate() const {
  require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorKind::kInvalidArgument,
          "config: learning rate must be positive");
  require(weight_decay >= 0.0, ErrorKind::kInvalidArgument, "config: weight decay must be >= 0");
  require(epochs >= 1, ErrorKind::kInvalidArgument, "config: epochs must be >= 1");
  require(batch_size >= 2, ErrorKind::kInvalidArgument, "config: batch size must be >= 2");
  require(pseudo_fraction > 0.0 && pseudo_fraction <= 1.0, ErrorKind::kInvalidArgument,
          "config: pseudo fraction must lie in (0, 1]");
  require(generator_repeats >= 1, ErrorKind::kInvalidArgument, "config: generator repeats must be >= 1");
  require(threads >= 1, ErrorKind::kInvalidArgument, "config: threads must be >= 1");
  weights.validate();
  kernel.validate();
  model_config(2).validate();
}

network::ModelConfig TrainConfig::model_config(std::size_t num_classes) const {
  network::ModelConfig m;
  m.num_classes = num_classes;
  m.n_nodes = n_nodes;
  m.k_neighbors = k_neighbors;
  return m;
}

std::map<std::string, std::string> TrainConfig::to_map() const {
  return {
      {"lr", fmt(learning_rate)},
      {"wd", fmt(weight_decay)},
      {"epochs", std::to_string(epochs)},
      {"batch", std::to_string(batch_size)},
      {"nodes", std::to_string(n_nodes)},
      {"k", std::to_string(k_neighbors)},
      {"lambda", fmt(weights.lambda)},
      {"beta", fmt(weights.beta)},
      {"kernel", kernel.to_string()},
      {"mmd_pooling", mmd_pooling == MmdPooling::kNode ? "node" : "object"},
      {"mmd_rows", std::to_string(mmd_rows)},
      {"seed", std::to_string(seed)},
      {"ablation", ablation.name()},
      {"pseudo_fraction", fmt(pseudo_fraction)},
      {"finetune_epochs", std::to_string(finetune_epochs)},
      {"generator_repeats", std::to_string(generator_repeats)},
      {"precision", precision == Precision::kDouble ? "f64" : "f32"},
      {"strict", strict ? "1" : "0"},
      {"threads", std::to_string(threads)},
      {"augment", augment ? "1" : "0"},
  };
}

bool TrainConfig::has_key(const std::string& key) { return keys().count(key) != 0; }

void TrainConfig::apply(const std::string& key, const std::string& value) {
  if (key == "lr") {
    learning_rate = to_double(key, value);
  } else if (key == "wd") {
    weight_decay = to_double(key, value);
  } else if (key == "epochs") {
    epochs = to_uint(key, value);
  } else if (key == "batch") {
    batch_size = to_uint(key, value);
  } else if (key == "nodes") {
    n_nodes = to_uint(key, value);
  } else if (key == "k") {
    k_neighbors = to_uint(key, value);
  } else if (key == "lambda") {
    weights.lambda = to_double(key, value);
  } else if (key == "beta") {
    weights.beta = to_double(key, value);
  } else if (key == "kernel") {
    kernel = losses::KernelConfig::parse(value);
  } else if (key == "mmd_pooling") {
    require(value == "node" || value == "object", ErrorKind::kUsage,
            "config: mmd_pooling expects node or object, got '" + value + "'");
    mmd_pooling = value == "node" ? MmdPooling::kNode : MmdPooling::kObject;
  } else if (key == "mmd_rows") {
    mmd_rows = to_uint(key, value);
  } else if (key == "seed") {
    seed = to_uint(key, value);
  } else if (key == "ablation") {
    ablation = Ablation::parse(value);
  } else if (key == "pseudo_fraction") {
    pseudo_fraction = to_double(key, value);
  } else if (key == "finetune_epochs") {
    finetune_epochs = to_uint(key, value);
  } else if (key == "generator_repeats") {
    generator_repeats = to_uint(key, value);
  } else if (key == "precision") {
    require(value == "f64" || value == "f32", ErrorKind::kUsage,
            "config: precision expects f64 or f32, got '" + value + "'");
    precision = value == "f64" ? Precision::kDouble : Precision::kFloat;
  } else if (key == "strict") {
    strict = to_bool(key, value);
  } else if (key == "threads") {
    threads = to_uint(key, value);
  } else if (key == "augment") {
    augment = to_bool(key, value);
  } else {
    fail(ErrorKind::kUsage, "config: unknown key '" + key + "'");
  }
}

}  // namespace pdan::training
