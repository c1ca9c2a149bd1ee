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

#include <cmath>

#include "common/error.hpp"
#include "tensor/gradcheck.hpp"
#include "tensor/ops.hpp"
#include "test_util.hpp"

namespace pdan::tensor {
namespace {

using test::random_tensor;

Tensor<double> naive_linear(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b) {
  Tensor<double> out({x.rows(), w.cols()});
  for (std::size_t t = 0; t < x.rows(); ++t)
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double s = b[j];
      for (std::size_t i = 0; i < x.cols(); ++i) s += x.at(t, i) * w.at(i, j);
      out.at(t, j) = s;
    }
  return out;
}

TEST(Tensor, ShapeMismatchIsDimensionError) {
  try {
    Tensor<double> t({2, 3}, std::vector<double>(5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDimension);
  }
}

TEST(Ops, LinearMatchesTripleLoop) {
  Rng rng(1);
  auto x = random_tensor<double>({7, 5}, rng), w = random_tensor<double>({5, 4}, rng),
       b = random_tensor<double>({4}, rng);
  Tape<double> tape;
  auto y = linear(tape.constant(x), tape.constant(w), tape.constant(b));
  const auto ref = naive_linear(x, w, b);
  for (std::size_t i = 0; i < ref.numel(); ++i) EXPECT_NEAR(y.value()[i], ref[i], 1e-12);
}

TEST(Ops, FloatAndDoubleLinearAgree) {
  Rng rng(2);
  auto x = random_tensor<double>({6, 3}, rng), w = random_tensor<double>({3, 8}, rng),
       b = random_tensor<double>({8}, rng);
  Tape<double> td;
  Tape<float> tf;
  auto yd = linear(td.constant(x), td.constant(w), td.constant(b));
  auto yf = linear(tf.constant(cast<float>(x)), tf.constant(cast<float>(w)), tf.constant(cast<float>(b)));
  for (std::size_t i = 0; i < yd.numel(); ++i) EXPECT_NEAR(yd.value()[i], yf.value()[i], 1e-5);
}

TEST(Ops, FusedLinearReluMaxEqualsComposition) {
  Rng rng(3);
  const std::size_t groups = 4, rows = 9;
  auto x = random_tensor<double>({groups * rows, 6}, rng), w = random_tensor<double>({6, 5}, rng),
       b = random_tensor<double>({5}, rng);
  for (auto* t : {&x, &w, &b}) t->set_requires_grad(true);

  Tape<double> t1;
  auto fused = linear_relu_max(t1.watch(x), t1.watch(w), t1.watch(b), groups);
  const std::vector<double> fused_value(fused.value().data().begin(), fused.value().data().end());
  Rng pr(9);
  auto probe = random_tensor<double>(fused.shape(), pr);
  t1.backward(sum_all(mul(fused, t1.constant(probe))));
  const std::vector<double> gx1(x.grad().begin(), x.grad().end()), gw1(w.grad().begin(), w.grad().end()),
      gb1(b.grad().begin(), b.grad().end());
  for (auto* t : {&x, &w, &b}) t->zero_grad();

  Tape<double> t2;
  auto h = relu(linear(t2.watch(x), t2.watch(w), t2.watch(b)));
  auto ref = reduce(reshape(h, {groups, rows, 5}), 1, ReduceKind::kMax);
  ASSERT_EQ(ref.numel(), fused_value.size());
  for (std::size_t i = 0; i < fused_value.size(); ++i) EXPECT_DOUBLE_EQ(fused_value[i], ref.value()[i]);
  t2.backward(sum_all(mul(ref, t2.constant(probe))));
  for (std::size_t i = 0; i < gx1.size(); ++i) EXPECT_NEAR(gx1[i], x.grad()[i], 1e-12);
  for (std::size_t i = 0; i < gw1.size(); ++i) EXPECT_NEAR(gw1[i], w.grad()[i], 1e-12);
  for (std::size_t i = 0; i < gb1.size(); ++i) EXPECT_NEAR(gb1[i], b.grad()[i], 1e-12);
}

TEST(Ops, ReduceMaxTiesGoToLowestIndex) {
  Tape<double> tape;
  auto x = tape.constant(Tensor<double>({2, 3}, {1.0, 5.0, 5.0, 2.0, 2.0, 2.0}));
  std::vector<std::size_t> arg;
  auto y = reduce(x, 1, ReduceKind::kMax, &arg);
  EXPECT_EQ(y.value()[0], 5.0);
  EXPECT_EQ(arg, (std::vector<std::size_t>{1, 0}));
}

TEST(Ops, SoftmaxMatchesDirectFormula) {
  Rng rng(4);
  auto x = random_tensor<double>({5, 7}, rng, -30.0, 30.0);
  Tape<double> tape;
  auto p = softmax(tape.constant(x));
  for (std::size_t r = 0; r < 5; ++r) {
    double mx = -INFINITY, z = 0.0, total = 0.0;
    for (std::size_t c = 0; c < 7; ++c) mx = std::max(mx, x.at(r, c));
    for (std::size_t c = 0; c < 7; ++c) z += std::exp(x.at(r, c) - mx);
    for (std::size_t c = 0; c < 7; ++c) {
      EXPECT_NEAR(p.value().at(r, c), std::exp(x.at(r, c) - mx) / z, 1e-14);
      total += p.value().at(r, c);
    }
    EXPECT_NEAR(total, 1.0, 1e-14);
  }
}

TEST(Ops, PairwiseSqdistAndMatmulMatchLoops) {
  Rng rng(5);
  auto a = random_tensor<double>({4, 3}, rng), b = random_tensor<double>({6, 3}, rng);
  auto m = random_tensor<double>({3, 6}, rng);
  Tape<double> tape;
  auto d = pairwise_sqdist(tape.constant(a), tape.constant(b));
  auto p = matmul(tape.constant(a), tape.constant(m));
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      double s = 0.0, q = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        s += (a.at(i, k) - b.at(j, k)) * (a.at(i, k) - b.at(j, k));
        q += a.at(i, k) * m.at(k, j);
      }
      EXPECT_NEAR(d.value().at(i, j), s, 1e-12);
      EXPECT_NEAR(p.value().at(i, j), q, 1e-12);
    }
}

TEST(Tape, GradientAccumulatesOverReuse) {
  Tensor<double> x({3}, {1.0, -2.0, 0.5});
  x.set_requires_grad(true);
  Tape<double> tape;
  auto v = tape.watch(x);
  tape.backward(sum_all(mul(v, v)));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(x.grad()[i], 2.0 * x[i]);
}

TEST(Tape, VariablesGoStaleAfterBackward) {
  Tensor<double> x({2}, {1.0, 2.0});
  x.set_requires_grad(true);
  Tape<double> tape;
  auto v = tape.watch(x);
  auto loss = sum_all(v);
  tape.backward(loss);
  try {
    (void)sum_all(v);
    FAIL() << "stale variable accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kState);
  }
}

TEST(Tape, BackwardNeedsScalar) {
  Tape<double> tape;
  Tensor<double> x({2}, {1.0, 2.0});
  x.set_requires_grad(true);
  auto v = tape.watch(x);
  EXPECT_THROW(tape.backward(v), Error);
}

TEST(Tape, FrozenLeavesGetNoGradient) {
  Tensor<double> x({2}, {1.0, 2.0}), y({2}, {3.0, 4.0});
  x.set_requires_grad(true);
  Tape<double> tape;
  tape.backward(sum_all(mul(tape.watch(x), tape.watch(y))));
  EXPECT_FALSE(y.has_grad());
  EXPECT_DOUBLE_EQ(x.grad()[1], 4.0);
}

TEST(Gradcheck, FlagsAWrongGradient) {
  // A custom op whose backward pass is off by a factor of two.
  auto f = [](Tape<double>& tape, const Var<double>& x) {
    Tensor<double> v(x.shape());
    for (std::size_t i = 0; i < v.numel(); ++i) v[i] = x.value()[i] * x.value()[i];
    Var<double> in = x;
    auto y = tape.record(v, {x}, [in](Tape<double>& t, std::span<const double> g, const Tensor<double>&) {
      auto gi = t.grad_of(in);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += 4.0 * in.value()[i] * g[i];
    });
    return sum_all(y);
  };
  auto rep = gradcheck<double>(f, Tensor<double>({3}, {0.3, -0.7, 1.1}), 1e-6, 1e-5);
  EXPECT_FALSE(rep.passed);
  EXPECT_NEAR(rep.max_rel_err, 0.5, 1e-4);
}

TEST(Gradcheck, SkipsKinkCrossings) {
  // relu at exactly 0 changes branch under +-eps.
  auto f = [](Tape<double>&, const Var<double>& x) { return sum_all(relu(x)); };
  auto rep = gradcheck<double>(f, Tensor<double>({3}, {0.0, 1.0, -1.0}), 1e-6, 1e-5);
  EXPECT_TRUE(rep.passed);
  EXPECT_EQ(rep.skipped, 1u);
  EXPECT_EQ(rep.checked, 2u);
}

}  // namespace
}  // namespace pdan::tensor
