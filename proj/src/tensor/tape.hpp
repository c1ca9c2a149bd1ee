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

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "common/rng.hpp"
#include "tensor/tensor.hpp"

namespace pdan::tensor {

template <class Real>
class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; invalid once the
/// tape has been consumed by backward() or cleared.
template <class Real>
class Var {
 public:
  Var() = default;

  const Tensor<Real>& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t numel() const { return value().numel(); }
  Tape<Real>& tape() const { return *tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }
  bool requires_grad() const;

 private:
  friend class Tape<Real>;
  Var(Tape<Real>* tape, std::size_t id, std::uint64_t gen) : tape_(tape), id_(id), generation_(gen) {}

  Tape<Real>* tape_ = nullptr;
  std::size_t id_ = 0;
  std::uint64_t generation_ = 0;
};

/// Records primitive operations in execution order and replays them in
/// reverse to accumulate gradients.
///
/// A tape supports exactly one backward() per recorded forward pass; the
/// tape is cleared afterwards and all outstanding Vars become stale.
template <class Real>
class Tape {
 public:
  using BackwardFn =
      std::function<void(Tape&, std::span<const Real> grad_out, const Tensor<Real>& out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Real> constant(Tensor<Real> value) {
    nodes_.push_back(Node{std::move(value), {}, nullptr, false, {}});
    return make_var(nodes_.size() - 1);
  }

  /// Records a leaf whose gradient is accumulated into `leaf.grad()` by
  /// backward() when `leaf.requires_grad()`. The leaf must outlive the pass.
  Var<Real> watch(Tensor<Real>& leaf) {
    nodes_.push_back(Node{Tensor<Real>(leaf.shape(), leaf.storage()), {}, &leaf, leaf.requires_grad(), {}});
    return make_var(nodes_.size() - 1);
  }

  Var<Real> record(Tensor<Real> value, std::initializer_list<Var<Real>> inputs, BackwardFn fn) {
    return record(std::move(value), std::span<const Var<Real>>(inputs.begin(), inputs.size()),
                  std::move(fn));
  }

  Var<Real> record(Tensor<Real> value, std::span<const Var<Real>> inputs, BackwardFn fn) {
    bool needs = false;
    for (const auto& in : inputs) {
      check(in);
      needs = needs || nodes_[in.id_].needs_grad;
    }
    nodes_.push_back(Node{std::move(value), {}, nullptr, needs, needs ? std::move(fn) : BackwardFn{}});
    return make_var(nodes_.size() - 1);
  }

  const Tensor<Real>& value(const Var<Real>& v) const {
    check(v);
    return nodes_[v.id_].value;
  }

  bool needs_grad(const Var<Real>& v) const {
    check(v);
    return nodes_[v.id_].needs_grad;
  }

  /// Gradient accumulator of `v`; only meaningful inside a backward function.
  std::span<Real> grad_of(const Var<Real>& v) {
    check(v);
    Node& n = nodes_[v.id_];
    if (n.grad.size() != n.value.numel()) n.grad.assign(n.value.numel(), Real(0));
    return n.grad;
  }

  void backward(const Var<Real>& loss) {
    require(loss.tape_ == this, ErrorKind::kState, "backward: loss belongs to another tape");
    require(loss.generation_ == generation_, ErrorKind::kState,
            "backward: tape already consumed; run a new forward pass first");
    require(!nodes_.empty(), ErrorKind::kState, "backward: tape is empty");
    require(nodes_[loss.id_].value.numel() == 1, ErrorKind::kDimension,
            "backward: loss must be scalar, got shape " + shape_str(nodes_[loss.id_].value.shape()));
    if (nodes_[loss.id_].needs_grad) {
      grad_of(loss)[0] = Real(1);
      for (std::size_t i = loss.id_ + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.needs_grad || n.grad.empty()) continue;
        if (n.backward) n.backward(*this, n.grad, n.value);
        if (n.leaf != nullptr) {
          auto g = n.leaf->grad();
          for (std::size_t j = 0; j < g.size(); ++j) g[j] += n.grad[j];
        }
      }
    }
    clear();
  }

  void clear() {
    nodes_.clear();
    ++generation_;
    branch_signature_ = 0;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

  /// Branch tracking folds every discrete decision (relu masks, argmax
  /// picks, neighbor indices) into one signature so that finite-difference
  /// checks can detect when a perturbation crossed a kink.
  void set_track_branches(bool on) noexcept { track_branches_ = on; }
  bool tracks_branches() const noexcept { return track_branches_; }
  void note_branch(std::uint64_t h) noexcept {
    if (track_branches_) branch_signature_ = mix64(branch_signature_ ^ h);
  }
  std::uint64_t branch_signature() const noexcept { return branch_signature_; }

 private:
  friend class Var<Real>;

  struct Node {
    Tensor<Real> value;
    std::vector<Real> grad;
    Tensor<Real>* leaf;
    bool needs_grad;
    BackwardFn backward;
  };

  Var<Real> make_var(std::size_t id) { return Var<Real>(this, id, generation_); }

  void check(const Var<Real>& v) const {
    require(v.tape_ == this, ErrorKind::kState, "variable used with a different tape");
    require(v.generation_ == generation_, ErrorKind::kState,
            "stale variable: tape was consumed or cleared");
  }

  std::deque<Node> nodes_;
  std::uint64_t generation_ = 1;
  bool track_branches_ = false;
  std::uint64_t branch_signature_ = 0;
};

template <class Real>
const Tensor<Real>& Var<Real>::value() const {
  return tape_->value(*this);
}

template <class Real>
bool Var<Real>::requires_grad() const {
  return tape_->needs_grad(*this);
}

}  // namespace pdan::tensor
