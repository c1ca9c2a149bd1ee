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

#include "training/gradcheck_suite.hpp"

#include <algorithm>
#include <functional>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/rng.hpp"
#include "data/benchmark.hpp"
#include "geometry/sa_nodes.hpp"
#include "losses/losses.hpp"
#include "network/model.hpp"

namespace pdan::training {
namespace {

using tensor::Tape;
using tensor::Tensor;
using tensor::Var;
using R = double;
using Vars = std::vector<Var<R>>;

Tensor<R> random_tensor(tensor::Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<R> t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(lo, hi);
  return t;
}

/// Identity forward, negated gradient backward.
Var<R> flip_gradient(const Var<R>& x) {
  Var<R> in = x;
  return x.tape().record(x.value(), {x}, [in](Tape<R>& tape, std::span<const R> g, const Tensor<R>&) {
    auto gi = tape.grad_of(in);
    for (std::size_t i = 0; i < g.size(); ++i) gi[i] -= g[i];
  });
}

struct Check {
  std::string name;
  bool end_to_end = false;
  /// Builds inputs and the function; the `wrap` hook is applied to the
  /// op's output before it is reduced to a scalar.
  std::function<tensor::GradcheckReport(const SuiteOptions&, const std::function<Var<R>(const Var<R>&)>&)> run;
};

/// sum(out * probe) with a fixed random probe, so every output element
/// carries a distinct weight.
Var<R> probe(const Var<R>& out, std::uint64_t seed) {
  Rng rng(seed);
  auto w = out.tape().constant(random_tensor(out.shape(), rng));
  return tensor::sum_all(tensor::mul(out, w));
}

using Wrap = std::function<Var<R>(const Var<R>&)>;
using Body = std::function<Var<R>(Tape<R>&, const Vars&)>;

tensor::GradcheckReport check_fn(const std::string& name, const SuiteOptions& o, const Wrap& wrap,
                                 std::vector<Tensor<R>> inputs, const Body& body) {
  tensor::GradcheckOptions opt;
  opt.eps = o.eps;
  opt.tol = o.primitive_tol;
  opt.seed = o.seed;
  const std::uint64_t probe_seed = derive_seed(o.seed, fnv1a64(name), 1);
  tensor::ScalarFn<R> f = [&](Tape<R>& tape, const Vars& v) { return probe(wrap(body(tape, v)), probe_seed); };
  std::vector<Tensor<R>*> ptrs;
  for (auto& t : inputs) ptrs.push_back(&t);
  return tensor::gradcheck<R>(f, ptrs, opt, name);
}

/// A small normalized cloud and features for the node-level checks.
struct CloudFixture {
  Tensor<R> points;
  Tensor<R> features;
  static constexpr std::size_t kPoints = 48, kChannels = 5, kNodes = 6, kNeighbors = 5;
  explicit CloudFixture(Rng& rng) {
    auto cloud = data::generate_instance(3, data::DomainProfile::clean(), kPoints, rng.bits());
    points = Tensor<R>({kPoints, 3}, std::vector<R>(cloud.xyz.begin(), cloud.xyz.end()));
    features = random_tensor({kPoints, kChannels}, rng);
  }
};

std::vector<Check> make_checks() {
  std::vector<Check> c;
  auto add = [&c](std::string name, std::function<std::vector<Tensor<R>>(Rng&)> make, Body body) {
    c.push_back({name, false, [name, make, body](const SuiteOptions& o, const Wrap& wrap) {
                   Rng rng(derive_seed(o.seed, fnv1a64(name)));
                   return check_fn(name, o, wrap, make(rng), body);
                 }});
  };
  auto mats = [](std::vector<tensor::Shape> shapes, double lo = -1.0, double hi = 1.0) {
    return [shapes, lo, hi](Rng& rng) {
      std::vector<Tensor<R>> out;
      for (const auto& s : shapes) out.push_back(random_tensor(s, rng, lo, hi));
      return out;
    };
  };

  add("linear", mats({{5, 4}, {4, 3}, {3}}), [](Tape<R>&, const Vars& v) { return tensor::linear(v[0], v[1], v[2]); });
  add("linear_relu_max", mats({{12, 4}, {4, 5}, {5}}),
      [](Tape<R>&, const Vars& v) { return tensor::linear_relu_max(v[0], v[1], v[2], 3); });
  add("relu", mats({{4, 5}}), [](Tape<R>&, const Vars& v) { return tensor::relu(v[0]); });
  add("sigmoid", mats({{4, 5}}, -3, 3), [](Tape<R>&, const Vars& v) { return tensor::sigmoid(v[0]); });
  add("reduce_max", mats({{3, 4, 5}}),
      [](Tape<R>&, const Vars& v) { return tensor::reduce(v[0], 1, tensor::ReduceKind::kMax); });
  add("reduce_mean", mats({{3, 4, 5}}),
      [](Tape<R>&, const Vars& v) { return tensor::reduce(v[0], 2, tensor::ReduceKind::kMean); });
  add("reduce_sum", mats({{3, 4, 5}}),
      [](Tape<R>&, const Vars& v) { return tensor::reduce(v[0], 0, tensor::ReduceKind::kSum); });
  add("sum_all", mats({{3, 4}}), [](Tape<R>&, const Vars& v) { return tensor::sum_all(v[0]); });
  add("mean_all", mats({{3, 4}}), [](Tape<R>&, const Vars& v) { return tensor::mean_all(v[0]); });
  add("softmax", mats({{4, 6}}, -2, 2), [](Tape<R>&, const Vars& v) { return tensor::softmax(v[0]); });
  add("add", mats({{3, 4}, {3, 4}}), [](Tape<R>&, const Vars& v) { return tensor::add(v[0], v[1]); });
  add("sub", mats({{3, 4}, {3, 4}}), [](Tape<R>&, const Vars& v) { return tensor::sub(v[0], v[1]); });
  add("mul", mats({{3, 4}, {3, 4}}), [](Tape<R>&, const Vars& v) { return tensor::mul(v[0], v[1]); });
  add("scale", mats({{3, 4}}), [](Tape<R>&, const Vars& v) { return tensor::scale(v[0], -2.5); });
  add("add_scalar", mats({{3, 4}}), [](Tape<R>&, const Vars& v) { return tensor::add_scalar(v[0], 0.75); });
  add("exp", mats({{3, 4}}), [](Tape<R>&, const Vars& v) { return tensor::exp(v[0]); });
  add("abs", mats({{3, 4}}), [](Tape<R>&, const Vars& v) { return tensor::abs(v[0]); });
  add("log_clamped", mats({{3, 4}}, 0.05, 2.0),
      [](Tape<R>&, const Vars& v) { return tensor::log_clamped(v[0], 1e-12); });
  add("mul_rows", mats({{4, 3}, {4}}), [](Tape<R>&, const Vars& v) { return tensor::mul_rows(v[0], v[1]); });
  add("reshape", mats({{3, 4}}), [](Tape<R>&, const Vars& v) { return tensor::reshape(v[0], {2, 6}); });
  add("concat_cols", mats({{3, 2}, {3, 4}}),
      [](Tape<R>&, const Vars& v) { return tensor::concat_cols(v[0], v[1]); });
  add("concat_rows", mats({{2, 3}, {4, 3}}), [](Tape<R>&, const Vars& v) {
    return tensor::concat_rows(std::span<const Var<R>>(v.data(), v.size()));
  });
  add("gather_rows", mats({{5, 3}}), [](Tape<R>&, const Vars& v) {
    static const std::uint32_t idx[] = {4, 0, 0, 2, 4, 1};
    return tensor::gather_rows(v[0], std::span<const std::uint32_t>(idx));
  });
  add("pairwise_sqdist", mats({{4, 3}, {5, 3}}),
      [](Tape<R>&, const Vars& v) { return tensor::pairwise_sqdist(v[0], v[1]); });
  add("matmul", mats({{3, 4}, {4, 5}}), [](Tape<R>&, const Vars& v) { return tensor::matmul(v[0], v[1]); });

  // Node-level layers on a fixed cloud; the points are constants.
  using F = CloudFixture;
  using CloudBody = std::function<Var<R>(Tape<R>&, const Tensor<R>&, const Vars&)>;
  auto add_cloud = [&c](std::string name, std::vector<tensor::Shape> extra, CloudBody body) {
    c.push_back({name, false, [name, extra, body](const SuiteOptions& o, const Wrap& wrap) {
                   Rng rng(derive_seed(o.seed, fnv1a64(name)));
                   F fx(rng);
                   std::vector<Tensor<R>> inputs = {fx.features};
                   for (const auto& s : extra) inputs.push_back(random_tensor(s, rng));
                   const Tensor<R> points = fx.points;
                   return check_fn(name, o, wrap, std::move(inputs),
                                   [points, body](Tape<R>& tape, const Vars& v) { return body(tape, points, v); });
                 }});
  };
  add_cloud("predict_offsets", {{F::kChannels, 1}, {1}}, [](Tape<R>& tape, const Tensor<R>& p, const Vars& v) {
    auto pts = tape.constant(p);
    auto nodes = geometry::init_nodes(pts, F::kNodes, F::kNeighbors);
    return geometry::predict_offsets(nodes, pts, v[0], v[1], v[2]);
  });
  add_cloud("update_nodes", {{F::kNodes, 3}}, [](Tape<R>& tape, const Tensor<R>& p, const Vars& v) {
    auto pts = tape.constant(p);
    auto nodes = geometry::init_nodes(pts, F::kNodes, F::kNeighbors);
    return geometry::update_nodes(nodes, tensor::scale(v[1], 0.05), pts, F::kNeighbors).positions;
  });
  add_cloud("pool_regions", {}, [](Tape<R>& tape, const Tensor<R>& p, const Vars& v) {
    auto nodes = geometry::init_nodes(tape.constant(p), F::kNodes, F::kNeighbors);
    return geometry::pool_regions(nodes, v[0]);
  });
  add_cloud("gather_node_features", {{F::kChannels, 4}, {4}}, [](Tape<R>& tape, const Tensor<R>& p, const Vars& v) {
    auto nodes = geometry::init_nodes(tape.constant(p), F::kNodes, F::kNeighbors);
    return geometry::gather_node_features(nodes, v[0], v[1], v[2]);
  });
  add_cloud("interpolate_to_points", {{F::kNodes, 3}, {F::kNodes, 4}},
            [](Tape<R>&, const Tensor<R>& p, const Vars& v) { return geometry::interpolate_to_points(v[1], v[2], p); });

  // Losses.
  auto prob_rows = [](std::size_t rows, std::size_t k, std::size_t count) {
    return [rows, k, count](Rng& rng) {
      std::vector<Tensor<R>> out;
      for (std::size_t i = 0; i < count; ++i) {
        Tensor<R> p({rows, k});
        for (std::size_t r = 0; r < rows; ++r) {
          double s = 0.0;
          for (std::size_t j = 0; j < k; ++j) s += p[r * k + j] = rng.uniform(0.1, 1.0);
          for (std::size_t j = 0; j < k; ++j) p[r * k + j] /= s;
        }
        out.push_back(p);
      }
      return out;
    };
  };
  add("cross_entropy", prob_rows(4, 3, 1), [](Tape<R>&, const Vars& v) {
    static const int labels[] = {0, 2, 1, 2};
    return losses::cross_entropy(v[0], std::span<const int>(labels));
  });
  add("discrepancy", prob_rows(4, 3, 2), [](Tape<R>&, const Vars& v) { return losses::discrepancy(v[0], v[1]); });
  add("rbf_kernel_mean", mats({{4, 3}, {5, 3}}), [](Tape<R>&, const Vars& v) {
    static const double s2[] = {0.5, 2.0};
    return losses::rbf_kernel_mean(v[0], v[1], std::span<const double>(s2));
  });
  add("mmd_rbf", mats({{4, 3}, {5, 3}}), [](Tape<R>&, const Vars& v) {
    return losses::mmd_rbf(v[0], v[1], losses::KernelConfig::fixed({0.5, 1.0, 2.0}));
  });
  add("step1_objective", mats({{1}, {1}}), [](Tape<R>&, const Vars& v) {
    auto a = tensor::reshape(v[0], {}), b = tensor::reshape(v[1], {});
    return losses::step1_objective(tensor::mul(a, a), tensor::exp(b), {0.7, 0.3});
  });
  add("step2_objective", mats({{1}, {1}, {1}}), [](Tape<R>&, const Vars& v) {
    auto a = tensor::reshape(v[0], {}), b = tensor::reshape(v[1], {}), m = tensor::reshape(v[2], {});
    return losses::step2_objective(tensor::mul(a, a), tensor::exp(b), tensor::exp(m), {0.7, 0.3});
  });

  // Network layers through BoundParams on a toy model; the watched inputs
  // are the layer's own tensors.
  c.push_back({"attend_nodes", false, [](const SuiteOptions& o, const Wrap& wrap) {
                 auto params = network::ModelParams<R>::init(network::ModelConfig::toy(3), o.seed);
                 const std::size_t n = params.config().n_nodes, batch = 2;
                 Rng rng(derive_seed(o.seed, fnv1a64("attend_nodes")));
                 Tensor<R> v = random_tensor({batch * n, 4}, rng);
                 tensor::GradcheckOptions opt;
                 opt.eps = o.eps;
                 opt.tol = o.primitive_tol;
                 opt.seed = o.seed;
                 params.set_trainable({network::ParamGroup::kAttention});
                 const std::uint64_t ps = derive_seed(o.seed, fnv1a64("attend_nodes"), 1);
                 tensor::ScalarFn<R> f = [&](Tape<R>& tape, const Vars& vars) {
                   network::BoundParams<R> bp(tape, params);
                   return probe(wrap(network::attend_nodes(bp, vars[0], batch)), ps);
                 };
                 std::vector<Tensor<R>*> ptrs = {&v};
                 for (auto& p : params.all())
                   if (p.group == network::ParamGroup::kAttention) ptrs.push_back(&p.value);
                 return tensor::gradcheck<R>(f, ptrs, opt, "attend_nodes");
               }});

  c.push_back({"end_to_end", true, [](const SuiteOptions& o, const Wrap& wrap) {
                 const std::size_t classes = 3, points = 32;
                 auto params = network::ModelParams<R>::init(network::ModelConfig::toy(classes), o.seed);
                 params.set_trainable({});
                 std::vector<geometry::PointCloud> src, tgt;
                 for (std::size_t i = 0; i < 2; ++i) {
                   src.push_back(data::generate_instance(static_cast<int>(i), data::DomainProfile::clean(), points,
                                                         derive_seed(o.seed, 11, i)));
                   tgt.push_back(data::generate_instance(static_cast<int>(i + 1), data::DomainProfile::scanned(),
                                                         points, derive_seed(o.seed, 12, i)));
                 }
                 std::vector<const geometry::PointCloud*> ps, pt;
                 for (auto& x : src) ps.push_back(&x);
                 for (auto& x : tgt) pt.push_back(&x);
                 const std::vector<int> labels = {0, 1};
                 const auto kernel = losses::KernelConfig::fixed({0.5, 1.0, 2.0});
                 tensor::ScalarFn<R> f = [&](Tape<R>& tape, const Vars&) {
                   network::BoundParams<R> bp(tape, params);
                   auto fs = network::extract(bp, std::span<const geometry::PointCloud* const>(ps));
                   auto ft = network::extract(bp, std::span<const geometry::PointCloud* const>(pt));
                   auto gs = wrap(fs.global_feature);
                   auto l_cls = tensor::add(
                       losses::cross_entropy(tensor::softmax(network::classify(bp, gs, 1)), std::span<const int>(labels)),
                       losses::cross_entropy(tensor::softmax(network::classify(bp, gs, 2)), std::span<const int>(labels)));
                   auto l_dis = losses::discrepancy(tensor::softmax(network::classify(bp, ft.global_feature, 1)),
                                                    tensor::softmax(network::classify(bp, ft.global_feature, 2)));
                   auto l_mmd = losses::mmd_rbf(fs.node_features_attended, ft.node_features_attended, kernel);
                   return losses::step2_objective(l_cls, l_dis, l_mmd, {1.0, 1.0});
                 };
                 tensor::GradcheckOptions opt;
                 // Loss sums over many terms, so the finite-difference noise
                 // floor sits near 1e-10; smaller gradients are rated absolutely.
                 opt.eps = 1e-5;
                 opt.denom_floor = 1e-5;
                 opt.tol = o.end_to_end_tol;
                 opt.seed = o.seed;
                 opt.max_coords_per_tensor = 24;
                 std::vector<Tensor<R>*> ptrs;
                 for (auto& p : params.all()) ptrs.push_back(&p.value);
                 return tensor::gradcheck<R>(f, ptrs, opt, "end_to_end");
               }});
  return c;
}

}  // namespace

std::vector<std::string> registered_checks() {
  std::vector<std::string> names;
  for (const auto& c : make_checks()) names.push_back(c.name);
  return names;
}

std::vector<SuiteEntry> run_gradcheck_suite(const SuiteOptions& options) {
  const auto checks = make_checks();
  auto known = [&](const std::string& n) {
    return std::any_of(checks.begin(), checks.end(), [&](const Check& c) { return c.name == n; });
  };
  for (const auto& n : options.only) require(known(n), ErrorKind::kUsage, "unknown gradcheck '" + n + "'");
  require(options.inject_fault.empty() || known(options.inject_fault), ErrorKind::kUsage,
          "unknown gradcheck '" + options.inject_fault + "' for fault injection");

  std::vector<SuiteEntry> out;
  for (const auto& c : checks) {
    if (!options.only.empty() && std::find(options.only.begin(), options.only.end(), c.name) == options.only.end())
      continue;
    const bool flip = c.name == options.inject_fault;
    Wrap wrap = [flip](const Var<R>& x) { return flip ? flip_gradient(x) : x; };
    SuiteEntry e;
    e.report = c.run(options, wrap);
    e.end_to_end = c.end_to_end;
    e.tol = c.end_to_end ? options.end_to_end_tol : options.primitive_tol;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace pdan::training
