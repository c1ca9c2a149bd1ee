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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "common/error.hpp"
#include "losses/losses.hpp"
#include "test_util.hpp"

namespace pdan::losses {
namespace {

using tensor::Tape;
using tensor::Tensor;

double brute_kernel_mean(const Tensor<double>& a, const Tensor<double>& b, const std::vector<double>& s2) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) d += (a.at(i, k) - b.at(j, k)) * (a.at(i, k) - b.at(j, k));
      for (double s : s2) total += std::exp(-d / (2.0 * s)) / static_cast<double>(s2.size());
    }
  return total / static_cast<double>(a.rows() * b.rows());
}

double brute_median(const Tensor<double>& a, const Tensor<double>& b) {
  std::vector<const double*> rows;
  for (std::size_t i = 0; i < a.rows(); ++i) rows.push_back(&a[i * a.cols()]);
  for (std::size_t i = 0; i < b.rows(); ++i) rows.push_back(&b[i * b.cols()]);
  std::vector<double> d;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += (rows[i][k] - rows[j][k]) * (rows[i][k] - rows[j][k]);
      d.push_back(s);
    }
  std::sort(d.begin(), d.end());
  const std::size_t n = d.size();
  const double med = n % 2 ? d[n / 2] : 0.5 * (d[n / 2 - 1] + d[n / 2]);
  return med == 0.0 ? 1.0 : med;
}

TEST(Kernel, KernelMeanMatchesDoubleLoop) {
  Rng rng(1);
  auto a = test::random_tensor<double>({5, 4}, rng), b = test::random_tensor<double>({7, 4}, rng);
  const std::vector<double> s2 = {0.3, 1.0, 4.0};
  Tape<double> tape;
  auto k = rbf_kernel_mean(tape.constant(a), tape.constant(b), std::span<const double>(s2));
  EXPECT_NEAR(k.value().item(), brute_kernel_mean(a, b, s2), 1e-13);
}

TEST(Kernel, MedianMatchesSortOracle) {
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    auto a = test::random_tensor<double>({2 + rng.below(6), 3}, rng);
    auto b = test::random_tensor<double>({2 + rng.below(6), 3}, rng);
    EXPECT_DOUBLE_EQ(median_sqdist(a, b), brute_median(a, b));
  }
  Tensor<double> z({3, 2});
  EXPECT_EQ(median_sqdist(z, z), 1.0);
}

TEST(Mmd, ZeroOnIdenticalSetsSymmetricAndNonNegative) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    auto x = test::random_tensor<double>({2 + rng.below(10), 6}, rng, -2.0, 2.0);
    auto y = test::random_tensor<double>({2 + rng.below(10), 6}, rng, -2.0, 2.0);
    const KernelConfig kc = t % 2 ? KernelConfig{} : KernelConfig::fixed({0.5, 1.0, 2.0});
    Tape<double> tape;
    auto xx = mmd_rbf(tape.constant(x), tape.constant(x), kc).value().item();
    auto xy = mmd_rbf(tape.constant(x), tape.constant(y), kc).value().item();
    auto yx = mmd_rbf(tape.constant(y), tape.constant(x), kc).value().item();
    EXPECT_LE(std::abs(xx), 1e-12);
    EXPECT_NEAR(xy, yx, 1e-12);
    EXPECT_GE(xy, -1e-9);
  }
}

TEST(Mmd, MedianModeEqualsFixedBandwidthsAtTheMedian) {
  Rng rng(4);
  auto x = test::random_tensor<double>({6, 3}, rng), y = test::random_tensor<double>({5, 3}, rng, 0.0, 2.0);
  const double med = brute_median(x, y);
  Tape<double> tape;
  const double a = mmd_rbf(tape.constant(x), tape.constant(y), KernelConfig{}).value().item();
  const double b =
      mmd_rbf(tape.constant(x), tape.constant(y), KernelConfig::fixed({0.5 * med, med, 2.0 * med})).value().item();
  EXPECT_NEAR(a, b, 1e-13);
  const std::vector<double> s2 = {0.5 * med, med, 2.0 * med};
  const double brute = brute_kernel_mean(x, x, s2) - 2.0 * brute_kernel_mean(x, y, s2) + brute_kernel_mean(y, y, s2);
  EXPECT_NEAR(a, brute, 1e-12);
}

TEST(Mmd, SingletonsHaveAClosedForm) {
  Tensor<double> a({1, 3}), b({1, 3});
  a[0] = 0.2, a[1] = -0.4, a[2] = 1.0;
  b[0] = 1.0, b[1] = 0.1, b[2] = 0.5;
  const double d = 0.64 + 0.25 + 0.25, s2 = 0.7;
  Tape<double> tape;
  const double v = mmd_rbf(tape.constant(a), tape.constant(b), KernelConfig::fixed({s2})).value().item();
  EXPECT_NEAR(v, 2.0 - 2.0 * std::exp(-d / (2.0 * s2)), 1e-14);
}

TEST(Mmd, SeparatedSetsScoreHigher) {
  Rng rng(5);
  auto x = test::random_tensor<double>({8, 3}, rng);
  auto near = x, far = x;
  for (auto& v : near.data()) v += 0.05;
  for (auto& v : far.data()) v += 3.0;
  const auto kc = KernelConfig::fixed({1.0});
  Tape<double> tape;
  EXPECT_LT(mmd_rbf(tape.constant(x), tape.constant(near), kc).value().item(),
            mmd_rbf(tape.constant(x), tape.constant(far), kc).value().item());
}

TEST(Discrepancy, ZeroOnEqualInputsAndMeanAbsOtherwise) {
  Rng rng(6);
  auto p = test::random_tensor<double>({4, 3}, rng, 0.0, 1.0), q = test::random_tensor<double>({4, 3}, rng, 0.0, 1.0);
  Tape<double> tape;
  EXPECT_EQ(discrepancy(tape.constant(p), tape.constant(p)).value().item(), 0.0);
  double ref = 0.0;
  for (std::size_t i = 0; i < p.numel(); ++i) ref += std::abs(p[i] - q[i]);
  EXPECT_NEAR(discrepancy(tape.constant(p), tape.constant(q)).value().item(), ref / 12.0, 1e-15);
}

TEST(CrossEntropy, UniformGivesLogK) {
  for (std::size_t k : {2u, 3u, 10u}) {
    Tape<double> tape;
    auto p = tape.constant(Tensor<double>::full({5, k}, 1.0 / static_cast<double>(k)));
    std::vector<int> labels = {0, 1, 1, 0, static_cast<int>(k) - 1};
    EXPECT_NEAR(cross_entropy(p, std::span<const int>(labels)).value().item(), std::log(static_cast<double>(k)),
                1e-12);
  }
}

TEST(CrossEntropy, ClampsZeroProbabilityAndChecksLabels) {
  Tape<double> tape;
  auto p = tape.constant(Tensor<double>({1, 2}, {1.0, 0.0}));
  std::vector<int> bad = {2}, zero = {1};
  EXPECT_NEAR(cross_entropy(p, std::span<const int>(zero)).value().item(), -std::log(kProbabilityFloor), 1e-9);
  try {
    cross_entropy(p, std::span<const int>(bad));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidArgument);
  }
}

TEST(Objectives, CombineWithTheirSigns) {
  Tape<double> tape;
  auto c = tape.constant(Tensor<double>::scalar(2.0)), d = tape.constant(Tensor<double>::scalar(0.5)),
       m = tape.constant(Tensor<double>::scalar(0.25));
  const LossWeights w{0.8, 2.0};
  EXPECT_DOUBLE_EQ(step1_objective(c, d, w).value().item(), 2.0 - 0.8 * 0.5);
  EXPECT_DOUBLE_EQ(step2_objective(c, d, m, w).value().item(), 2.0 + 0.8 * 0.5 + 2.0 * 0.25);
  EXPECT_THROW((LossWeights{-1.0, 0.0}.validate()), Error);
}

TEST(KernelConfig, ParsesAndPrints) {
  EXPECT_TRUE(KernelConfig::parse("median").median);
  auto k = KernelConfig::parse("0.5,1,2.25");
  EXPECT_FALSE(k.median);
  EXPECT_EQ(k.bandwidths, (std::vector<double>{0.5, 1.0, 2.25}));
  EXPECT_EQ(KernelConfig::parse(k.to_string()).bandwidths, k.bandwidths);
  auto kind = [](const char* text) {
    try {
      KernelConfig::parse(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kState;
  };
  for (const char* bad : {"x", "1,,2", "0.5x"}) EXPECT_EQ(kind(bad), ErrorKind::kUsage) << bad;
  for (const char* bad : {"", "-1", "0"}) EXPECT_EQ(kind(bad), ErrorKind::kInvalidArgument) << bad;
}

}  // namespace
}  // namespace pdan::losses
