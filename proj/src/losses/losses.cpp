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

#include "losses/losses.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pdan::losses {
namespace {

template <class Real>
using RowMat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Real>
using MapCM = Eigen::Map<const RowMat<Real>>;
template <class Real>
using MapM = Eigen::Map<RowMat<Real>>;

template <class Real>
RowMat<Real> sqdist_matrix(const Real* a, std::size_t n, const Real* b, std::size_t m, std::size_t c) {
  MapCM<Real> A(a, n, c);
  MapCM<Real> B(b, m, c);
  RowMat<Real> d(n, m);
  d.noalias() = Real(-2) * A * B.transpose();
  d.colwise() += A.rowwise().squaredNorm();
  d.rowwise() += B.rowwise().squaredNorm().transpose();
  return d;
}

}  // namespace

void LossWeights::validate() const {
  require(lambda >= 0.0 && beta >= 0.0, ErrorKind::kInvalidArgument, "loss weights must be non-negative");
}

KernelConfig KernelConfig::fixed(std::vector<double> sigma2) {
  KernelConfig k;
  k.median = false;
  k.bandwidths = std::move(sigma2);
  k.validate();
  return k;
}

void KernelConfig::validate() const {
  const auto& v = median ? multipliers : bandwidths;
  require(!v.empty(), ErrorKind::kInvalidArgument, "kernel: empty bandwidth set");
  for (double s : v) require(s > 0.0, ErrorKind::kInvalidArgument, "kernel: bandwidths must be positive");
}

KernelConfig KernelConfig::parse(const std::string& text) {
  if (text == "median") return KernelConfig{};
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(item, &used));
      require(used == item.size(), ErrorKind::kUsage, "kernel: bad bandwidth '" + item + "'");
    } catch (const std::logic_error&) {
      fail(ErrorKind::kUsage, "kernel: bad bandwidth '" + item + "'");
    }
  }
  return fixed(std::move(vals));
}

std::string KernelConfig::to_string() const {
  if (median) return "median";
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < bandwidths.size(); ++i) os << (i ? "," : "") << bandwidths[i];
  return os.str();
}

template <class Real>
Var<Real> cross_entropy(const Var<Real>& probs, std::span<const int> labels) {
  const auto& s = probs.shape();
  require(s.size() == 2 && s[0] == labels.size(), ErrorKind::kDimension,
          "cross_entropy: probs " + tensor::shape_str(s) + " vs " + std::to_string(labels.size()) + " labels");
  const std::size_t b = s[0], k = s[1];
  std::vector<std::uint32_t> pick(b);
  for (std::size_t i = 0; i < b; ++i) {
    require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < k, ErrorKind::kInvalidArgument,
            "cross_entropy: label " + std::to_string(labels[i]) + " out of range for " + std::to_string(k) +
                " classes");
    pick[i] = static_cast<std::uint32_t>(i * k + static_cast<std::size_t>(labels[i]));
  }
  auto flat = tensor::reshape(probs, tensor::Shape{b * k, 1});
  auto chosen = tensor::gather_rows(flat, std::span<const std::uint32_t>(pick));
  return tensor::scale(tensor::mean_all(tensor::log_clamped(chosen, kProbabilityFloor)), -1.0);
}

template <class Real>
Var<Real> discrepancy(const Var<Real>& p1, const Var<Real>& p2) {
  return tensor::mean_all(tensor::abs(tensor::sub(p1, p2)));
}

template <class Real>
Var<Real> rbf_kernel_mean(const Var<Real>& a, const Var<Real>& b, std::span<const double> sigma2) {
  const auto& as = a.shape();
  const auto& bs = b.shape();
  require(as.size() == 2 && bs.size() == 2 && as[1] == bs[1], ErrorKind::kDimension,
          "mmd: feature width mismatch " + tensor::shape_str(as) + " vs " + tensor::shape_str(bs));
  require(as[0] >= 1 && bs[0] >= 1, ErrorKind::kDimension, "mmd: empty sample set");
  require(!sigma2.empty(), ErrorKind::kInvalidArgument, "mmd: empty bandwidth set");
  const std::size_t n = as[0], m = bs[0], c = as[1];
  std::vector<double> s2(sigma2.begin(), sigma2.end());

  RowMat<Real> d = sqdist_matrix(a.value().data().data(), n, b.value().data().data(), m, c);
  double total = 0.0;
  for (double s : s2) {
    const Real f = static_cast<Real>(-1.0 / (2.0 * s));
    RowMat<Real> k = (d.array() * f).exp().matrix();
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < m; ++j) row += static_cast<double>(k(i, j));
      total += row;
    }
  }
  const double denom = static_cast<double>(n) * static_cast<double>(m) * static_cast<double>(s2.size());
  auto out = tensor::Tensor<Real>::scalar(static_cast<Real>(total / denom));

  return a.tape().record(std::move(out), {a, b},
                         [a, b, n, m, c, s2, denom](tensor::Tape<Real>& tp, std::span<const Real> g,
                                                    const tensor::Tensor<Real>&) {
    const Real* av = tp.value(a).data().data();
    const Real* bv = tp.value(b).data().data();
    RowMat<Real> d = sqdist_matrix(av, n, bv, m, c);
    RowMat<Real> w = RowMat<Real>::Zero(n, m);
    for (double s : s2) {
      const Real f = static_cast<Real>(-1.0 / (2.0 * s));
      w.array() += f * (d.array() * f).exp();
    }
    w *= static_cast<Real>(static_cast<double>(g[0]) / denom);
    MapCM<Real> A(av, n, c);
    MapCM<Real> B(bv, m, c);
    if (tp.needs_grad(a)) {
      MapM<Real> GA(tp.grad_of(a).data(), n, c);
      Eigen::Matrix<Real, Eigen::Dynamic, 1> rs = w.rowwise().sum();
      GA.noalias() += Real(2) * (rs.asDiagonal() * A);
      GA.noalias() -= Real(2) * (w * B);
    }
    if (tp.needs_grad(b)) {
      MapM<Real> GB(tp.grad_of(b).data(), m, c);
      Eigen::Matrix<Real, Eigen::Dynamic, 1> cs = w.colwise().sum().transpose();
      GB.noalias() += Real(2) * (cs.asDiagonal() * B);
      GB.noalias() -= Real(2) * (w.transpose() * A);
    }
  });
}

template <class Real>
double median_sqdist(const tensor::Tensor<Real>& a, const tensor::Tensor<Real>& b) {
  const std::size_t n = a.rows(), m = b.rows(), c = a.cols();
  RowMat<Real> joint(n + m, c);
  joint.topRows(n) = MapCM<Real>(a.data().data(), n, c);
  joint.bottomRows(m) = MapCM<Real>(b.data().data(), m, c);
  const std::size_t total = n + m;
  if (total < 2) return 1.0;
  RowMat<Real> d = sqdist_matrix(joint.data(), total, joint.data(), total, c);
  std::vector<Real> vals;
  vals.reserve(total * (total - 1) / 2);
  for (std::size_t i = 0; i < total; ++i)
    for (std::size_t j = i + 1; j < total; ++j) vals.push_back(std::max(d(i, j), Real(0)));
  const std::size_t mid = vals.size() / 2;
  std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(mid), vals.end());
  double med = static_cast<double>(vals[mid]);
  if (vals.size() % 2 == 0) {
    const Real lower = *std::max_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(mid));
    med = 0.5 * (med + static_cast<double>(lower));
  }
  return med > 0.0 ? med : 1.0;
}

template <class Real>
Var<Real> mmd_rbf(const Var<Real>& h_source, const Var<Real>& h_target, const KernelConfig& kernel) {
  kernel.validate();
  require(h_source.shape().size() == 2 && h_target.shape().size() == 2 &&
              h_source.shape()[1] == h_target.shape()[1],
          ErrorKind::kDimension,
          "mmd: feature width mismatch " + tensor::shape_str(h_source.shape()) + " vs " +
              tensor::shape_str(h_target.shape()));
  std::vector<double> s2 = kernel.bandwidths;
  if (kernel.median) {
    const double med = median_sqdist(h_source.value(), h_target.value());
    s2.clear();
    for (double mult : kernel.multipliers) s2.push_back(med * mult);
  }
  auto kss = rbf_kernel_mean(h_source, h_source, s2);
  auto kst = rbf_kernel_mean(h_source, h_target, s2);
  auto ktt = rbf_kernel_mean(h_target, h_target, s2);
  return tensor::add(tensor::sub(kss, tensor::scale(kst, 2.0)), ktt);
}

template <class Real>
Var<Real> step1_objective(const Var<Real>& l_cls, const Var<Real>& l_dis, const LossWeights& w) {
  w.validate();
  return tensor::sub(l_cls, tensor::scale(l_dis, w.lambda));
}

template <class Real>
Var<Real> step2_objective(const Var<Real>& l_cls, const Var<Real>& l_dis, const Var<Real>& l_mmd,
                          const LossWeights& w) {
  w.validate();
  return tensor::add(tensor::add(l_cls, tensor::scale(l_dis, w.lambda)), tensor::scale(l_mmd, w.beta));
}

#define PDAN_INSTANTIATE_LOSSES(R)                                                           \
  template Var<R> cross_entropy(const Var<R>&, std::span<const int>);                       \
  template Var<R> discrepancy(const Var<R>&, const Var<R>&);                                \
  template Var<R> rbf_kernel_mean(const Var<R>&, const Var<R>&, std::span<const double>);   \
  template double median_sqdist(const tensor::Tensor<R>&, const tensor::Tensor<R>&);        \
  template Var<R> mmd_rbf(const Var<R>&, const Var<R>&, const KernelConfig&);               \
  template Var<R> step1_objective(const Var<R>&, const Var<R>&, const LossWeights&);        \
  template Var<R> step2_objective(const Var<R>&, const Var<R>&, const Var<R>&, const LossWeights&);

PDAN_INSTANTIATE_LOSSES(float)
PDAN_INSTANTIATE_LOSSES(double)

}  // namespace pdan::losses
