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

#include "training/adam.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace pdan::training {

template <class Real>
void adam_update(std::span<Real> param, std::span<const Real> grad, AdamMoments& state, double lr, double wd,
                 const AdamHyper& hyper) {
  require(param.size() == grad.size(), ErrorKind::kDimension, "adam: parameter and gradient sizes differ");
  if (state.m.size() != param.size()) {
    state.m.assign(param.size(), 0.0);
    state.v.assign(param.size(), 0.0);
  }
  ++state.steps;
  const double t = static_cast<double>(state.steps);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = static_cast<double>(grad[i]);
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    const double p = static_cast<double>(param[i]);
    param[i] = static_cast<Real>(p - lr * mhat / (std::sqrt(vhat) + hyper.eps) - lr * wd * p);
  }
}

template <class Real>
Adam<Real>::Adam(const network::ModelParams<Real>& params, AdamHyper hyper)
    : hyper_(hyper), state_(params.all().size()) {}

template <class Real>
void Adam<Real>::step(network::ModelParams<Real>& params, std::span<const network::ParamGroup> groups, double lr,
                      double wd) {
  auto& all = params.all();
  require(all.size() == state_.size(), ErrorKind::kState, "adam: optimizer was built for another model");
  auto selected = [&](const network::Param<Real>& p) {
    return std::find(groups.begin(), groups.end(), p.group) != groups.end();
  };
  for (auto& p : all) {
    if (!selected(p)) continue;
    const auto g = p.value.grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(static_cast<double>(g[i]))) {
        fail(ErrorKind::kNumerical, "non-finite gradient in parameter group '" +
                                        std::string(network::group_name(p.group)) + "' (tensor " + p.name + ")");
      }
    }
  }
  for (std::size_t i = 0; i < all.size(); ++i) {
    auto& p = all[i];
    if (!selected(p)) continue;
    adam_update<Real>(p.value.data(), p.value.grad(), state_[i], lr, wd, hyper_);
  }
}

template void adam_update<float>(std::span<float>, std::span<const float>, AdamMoments&, double, double,
                                 const AdamHyper&);
template void adam_update<double>(std::span<double>, std::span<const double>, AdamMoments&, double, double,
                                  const AdamHyper&);
template class Adam<float>;
template class Adam<double>;

}  // namespace pdan::training
