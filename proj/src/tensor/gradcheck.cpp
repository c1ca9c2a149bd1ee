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

#include "tensor/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/rng.hpp"

namespace pdan::tensor {
namespace {

template <class Real>
struct Eval {
  double value;
  std::uint64_t signature;
};

template <class Real>
Eval<Real> evaluate(const ScalarFn<Real>& f, std::vector<Tensor<Real>*>& inputs) {
  Tape<Real> tape;
  tape.set_track_branches(true);
  std::vector<Var<Real>> vars;
  vars.reserve(inputs.size());
  for (auto* t : inputs) vars.push_back(tape.watch(*t));
  Var<Real> out = f(tape, vars);
  require(out.numel() == 1, ErrorKind::kDimension,
          "gradcheck: function must be scalar-valued, got shape " + shape_str(out.shape()));
  return {static_cast<double>(out.value()[0]), tape.branch_signature()};
}

std::vector<std::size_t> pick_coords(std::size_t n, std::size_t cap, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  if (cap == 0 || cap >= n) return idx;
  for (std::size_t i = 0; i < cap; ++i) std::swap(idx[i], idx[i + rng.below(n - i)]);
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

template <class Real>
GradcheckReport gradcheck(const ScalarFn<Real>& f, std::vector<Tensor<Real>*> inputs,
                          const GradcheckOptions& opt, std::string name) {
  GradcheckReport rep;
  rep.name = std::move(name);

  std::vector<bool> had_flag;
  std::vector<std::vector<Real>> saved_grad;
  for (auto* t : inputs) {
    had_flag.push_back(t->requires_grad());
    saved_grad.emplace_back(t->grad().begin(), t->grad().end());
    t->set_requires_grad(true);
    t->zero_grad();
  }

  std::uint64_t base_sig = 0;
  {
    Tape<Real> tape;
    tape.set_track_branches(true);
    std::vector<Var<Real>> vars;
    for (auto* t : inputs) vars.push_back(tape.watch(*t));
    Var<Real> out = f(tape, vars);
    require(out.numel() == 1, ErrorKind::kDimension,
            "gradcheck: function must be scalar-valued, got shape " + shape_str(out.shape()));
    base_sig = tape.branch_signature();
    tape.backward(out);
  }
  std::vector<std::vector<Real>> analytic;
  for (auto* t : inputs) analytic.emplace_back(t->grad().begin(), t->grad().end());

  Rng rng(opt.seed);
  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    Tensor<Real>& x = *inputs[ti];
    for (std::size_t i : pick_coords(x.numel(), opt.max_coords_per_tensor, rng)) {
      const Real orig = x[i];
      x[i] = static_cast<Real>(orig + opt.eps);
      const auto plus = evaluate(f, inputs);
      x[i] = static_cast<Real>(orig - opt.eps);
      const auto minus = evaluate(f, inputs);
      x[i] = orig;
      if (plus.signature != base_sig || minus.signature != base_sig) {
        ++rep.skipped;
        rep.skipped_coords.push_back(i);
        continue;
      }
      ++rep.checked;
      const double numeric = (plus.value - minus.value) / (2.0 * opt.eps);
      const double a = static_cast<double>(analytic[ti][i]);
      const double abs_err = std::abs(a - numeric);
      rep.max_abs_err = std::max(rep.max_abs_err, abs_err);
      const double rel = abs_err / std::max({std::abs(a), std::abs(numeric), opt.denom_floor});
      if (rel > rep.max_rel_err) {
        rep.max_rel_err = rel;
        rep.worst_tensor = ti;
        rep.worst_coord = i;
      }
    }
  }
  rep.passed = rep.max_rel_err <= opt.tol;

  for (std::size_t ti = 0; ti < inputs.size(); ++ti) {
    inputs[ti]->set_requires_grad(had_flag[ti]);
    if (saved_grad[ti].empty()) {
      inputs[ti]->drop_grad();
    } else {
      std::copy(saved_grad[ti].begin(), saved_grad[ti].end(), inputs[ti]->grad().begin());
    }
  }
  return rep;
}

template <class Real>
GradcheckReport gradcheck(const std::function<Var<Real>(Tape<Real>&, const Var<Real>&)>& f,
                          Tensor<Real> x, double eps, double tol) {
  GradcheckOptions opt;
  opt.eps = eps;
  opt.tol = tol;
  ScalarFn<Real> wrapped = [&f](Tape<Real>& tape, const std::vector<Var<Real>>& vars) {
    return f(tape, vars[0]);
  };
  return gradcheck<Real>(wrapped, {&x}, opt);
}

template GradcheckReport gradcheck<float>(const ScalarFn<float>&, std::vector<Tensor<float>*>,
                                          const GradcheckOptions&, std::string);
template GradcheckReport gradcheck<double>(const ScalarFn<double>&, std::vector<Tensor<double>*>,
                                           const GradcheckOptions&, std::string);
template GradcheckReport gradcheck<float>(const std::function<Var<float>(Tape<float>&, const Var<float>&)>&,
                                          Tensor<float>, double, double);
template GradcheckReport gradcheck<double>(
    const std::function<Var<double>(Tape<double>&, const Var<double>&)>&, Tensor<double>, double, double);

}  // namespace pdan::tensor
