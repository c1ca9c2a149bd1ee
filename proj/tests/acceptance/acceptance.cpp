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

// Acceptance report: one PASS/FAIL line per criterion, exit status 0 iff
// every criterion not named in --allow-fail passes.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "common/error.hpp"
#include "common/rng.hpp"
#include "data/benchmark.hpp"
#include "data/dataset.hpp"
#include "geometry/sampling.hpp"
#include "losses/losses.hpp"
#include "network/checkpoint.hpp"
#include "network/match.hpp"
#include "network/model.hpp"
#include "tensor/ops.hpp"
#include "training/experiment.hpp"
#include "training/gradcheck_suite.hpp"
#include "training/trainer.hpp"

namespace fs = std::filesystem;
using namespace pdan;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

struct Outcome {
  Outcome(std::string id_, std::string title_, bool passed_ = false, std::string detail_ = {})
      : id(std::move(id_)), title(std::move(title_)), passed(passed_), detail(std::move(detail_)) {}
  std::string id;
  std::string title;
  bool passed;
  std::string detail;
};

// Scratch directory removed on scope exit.
struct Scratch {
  fs::path path;
  explicit Scratch(const fs::path& root, const std::string& tag) : path(root / tag) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::vector<double> uniform_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

tensor::Tensor<double> uniform_tensor(Rng& rng, std::size_t rows, std::size_t cols, double lo = -1.0,
                                      double hi = 1.0) {
  tensor::Tensor<double> t({rows, cols});
  for (auto& x : t.data()) x = rng.uniform(lo, hi);
  return t;
}

geometry::PointCloud random_cloud(Rng& rng, std::size_t points) {
  geometry::PointCloud c;
  c.xyz = uniform_vec(rng, 3 * points);
  return geometry::normalize(c);
}

double sqd(const double* a, const double* b) {
  double s = 0.0;
  for (int d = 0; d < 3; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return s;
}

// ---------------------------------------------------------------- 1

Outcome gradient_correctness() {
  const auto t0 = Clock::now();
  training::SuiteOptions opts;
  opts.seed = 0;
  const auto entries = training::run_gradcheck_suite(opts);
  const double secs = seconds_since(t0);
  std::size_t failed = 0;
  double worst_prim = 0.0, e2e = 0.0;
  std::string failures;
  for (const auto& e : entries) {
    if (!e.report.passed) {
      ++failed;
      failures += " " + e.report.name;
    }
    if (e.end_to_end)
      e2e = std::max(e2e, e.report.max_rel_err);
    else
      worst_prim = std::max(worst_prim, e.report.max_rel_err);
  }
  Outcome o{"1", "gradient correctness"};
  o.passed = failed == 0 && worst_prim <= 1e-5 && e2e <= 1e-4 && secs < 60.0;
  o.detail = fmt("%zu/%zu checks pass; worst primitive rel err %.2e (<= 1e-5), end-to-end %.2e (<= 1e-4); "
                 "%.1f s (< 60 s)",
                 entries.size() - failed, entries.size(), worst_prim, e2e, secs);
  if (failed) o.detail += ";failed:" + failures;
  return o;
}

// ---------------------------------------------------------------- 2

std::vector<std::uint32_t> fps_oracle(const std::vector<double>& xyz, std::size_t n) {
  std::vector<std::uint32_t> sel = {0};
  const std::size_t t = xyz.size() / 3;
  while (sel.size() < n) {
    double best = -1.0;
    std::uint32_t arg = 0;
    for (std::uint32_t i = 0; i < t; ++i) {
      double dmin = INFINITY;
      for (auto s : sel) dmin = std::min(dmin, sqd(&xyz[3 * i], &xyz[3 * s]));
      if (dmin > best) {
        best = dmin;
        arg = i;
      }
    }
    sel.push_back(arg);
  }
  return sel;
}

Outcome oracle_equivalence() {
  const auto t0 = Clock::now();
  Rng rng(2);
  std::size_t fps_bad = 0, knn_bad = 0, match_bad = 0, select_bad = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t t = 8 + rng.below(57), n = 1 + rng.below(t);
    const auto xyz = uniform_vec(rng, 3 * t);
    fps_bad += geometry::fps<double>(xyz, n) != fps_oracle(xyz, n);
  }
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t t = 4 + rng.below(61), k = 1 + rng.below(t), q = 1 + rng.below(8);
    const auto xyz = uniform_vec(rng, 3 * t), queries = uniform_vec(rng, 3 * q);
    const auto got = geometry::knn<double>(queries, xyz, k);
    for (std::size_t i = 0; i < q; ++i) {
      std::vector<std::uint32_t> idx(t);
      std::iota(idx.begin(), idx.end(), 0u);
      std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) {
        return sqd(&queries[3 * i], &xyz[3 * a]) < sqd(&queries[3 * i], &xyz[3 * b]);
      });
      knn_bad += !std::equal(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k),
                             got.begin() + static_cast<std::ptrdiff_t>(i * k));
    }
  }
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(12), c = 1 + rng.below(6);
    auto hs = uniform_tensor(rng, n, c, -2, 2), ht = uniform_tensor(rng, n, c, -2, 2);
    for (auto* t : {&hs, &ht})
      for (auto& v : t->data()) v = std::round(v * 4.0) / 4.0;  // exact dot products
    struct Entry {
      std::size_t s, t;
      double score;
    };
    std::vector<Entry> all;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < c; ++k) s += hs.at(i, k) * ht.at(j, k);
        all.push_back({i, j, s});
      }
    std::stable_sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) { return a.score > b.score; });
    const std::size_t m = 1 + rng.below(n * n);
    const auto got = network::match_nodes(hs, ht, m);
    bool ok = got.size() == m;
    for (std::size_t r = 0; ok && r < m; ++r)
      ok = got[r].source == all[r].s && got[r].target == all[r].t && got[r].score == all[r].score;
    match_bad += !ok;
  }
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> conf(10 + rng.below(200));
    for (auto& v : conf) v = std::round(rng.uniform(0, 16)) / 16;
    const std::size_t k = training::pseudo_label_count(conf.size(), 0.1);
    std::vector<std::size_t> idx(conf.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return conf[a] > conf[b]; });
    idx.resize(k);
    select_bad += training::select_most_confident(conf, k) != idx;
  }
  const double secs = seconds_since(t0);
  Outcome o{"2", "oracle equivalence"};
  o.passed = fps_bad + knn_bad + match_bad + select_bad == 0 && secs < 30.0;
  o.detail = fmt("mismatches: fps %zu/200, knn %zu/200, node matching %zu/200, pseudo-label selection %zu/200; "
                 "%.2f s (< 30 s)",
                 fps_bad, knn_bad, match_bad, select_bad, secs);
  return o;
}

// ---------------------------------------------------------------- 3

Outcome loss_properties() {
  Rng rng(3);
  double worst_self = 0.0, worst_asym = 0.0, most_negative = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto x = uniform_tensor(rng, 2 + rng.below(15), 8, -2, 2);
    const auto y = uniform_tensor(rng, 2 + rng.below(15), 8, -2, 2);
    const auto kc = trial % 2 ? losses::KernelConfig{} : losses::KernelConfig::fixed({0.5, 1.0, 2.0});
    tensor::Tape<double> tape;
    const double xx = losses::mmd_rbf(tape.constant(x), tape.constant(x), kc).value().item();
    const double xy = losses::mmd_rbf(tape.constant(x), tape.constant(y), kc).value().item();
    const double yx = losses::mmd_rbf(tape.constant(y), tape.constant(x), kc).value().item();
    worst_self = std::max(worst_self, std::abs(xx));
    worst_asym = std::max(worst_asym, std::abs(xy - yx));
    most_negative = std::min(most_negative, std::min(xy, yx));
  }
  double dis_pp = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    tensor::Tape<double> tape;
    auto p = tensor::softmax(tape.constant(uniform_tensor(rng, 1 + rng.below(8), 5, -3, 3)));
    dis_pp = std::max(dis_pp, std::abs(losses::discrepancy(p, p).value().item()));
  }
  double ce_err = 0.0;
  for (std::size_t k : {2u, 3u, 10u}) {
    const std::size_t rows = 7;
    tensor::Tensor<double> probs({rows, k});
    std::fill(probs.data().begin(), probs.data().end(), 1.0 / static_cast<double>(k));
    std::vector<int> labels(rows);
    for (auto& l : labels) l = static_cast<int>(rng.below(k));
    tensor::Tape<double> tape;
    const double ce = losses::cross_entropy(tape.constant(probs), std::span<const int>(labels)).value().item();
    ce_err = std::max(ce_err, std::abs(ce - std::log(static_cast<double>(k))));
  }
  Outcome o{"3", "loss properties"};
  o.passed = worst_self <= 1e-12 && worst_asym <= 1e-12 && most_negative >= -1e-9 && dis_pp == 0.0 && ce_err <= 1e-12;
  o.detail = fmt("500 batches: max |mmd(X,X)| %.1e (<= 1e-12), max asymmetry %.1e, min mmd %.1e (>= -1e-9); "
                 "max |dis(p,p)| %.1e (= 0); max |CE(uniform) - ln K| %.1e (<= 1e-12, K in {2,3,10})",
                 worst_self, worst_asym, most_negative, dis_pp, ce_err);
  return o;
}

// ---------------------------------------------------------------- 4

bool partition_holds(const network::ModelParams<double>& before, const network::ModelParams<double>& after,
                     const std::vector<network::ParamGroup>& updated) {
  for (std::size_t i = 0; i < before.all().size(); ++i) {
    const auto& a = before.all()[i];
    if (std::find(updated.begin(), updated.end(), a.group) != updated.end()) continue;
    const auto x = a.value.data(), y = after.all()[i].value.data();
    if (!std::equal(x.begin(), x.end(), y.begin(), y.end())) return false;
  }
  return true;
}

Outcome architecture_invariants() {
  Rng rng(4);
  auto params = network::ModelParams<double>::init(network::ModelConfig{}, 4);
  params.config().num_classes = 10;
  params = network::ModelParams<double>::init(params.config(), 4);
  double perm_err = 0.0;
  double ratio_lo = INFINITY, ratio_hi = -INFINITY;
  std::size_t zero_rows_ok = 0, zero_rows = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto cloud = random_cloud(rng, 128);
    geometry::PointCloud perm = cloud;
    std::vector<std::size_t> order(cloud.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
    for (std::size_t i = 0; i < order.size(); ++i)
      for (int d = 0; d < 3; ++d) perm.xyz[3 * i + d] = cloud.xyz[3 * order[i] + d];
    tensor::Tape<double> tape;
    network::BoundParams<double> bp(tape, params);
    const geometry::PointCloud* a[] = {&cloud};
    const geometry::PointCloud* b[] = {&perm};
    const auto fa = network::forward(bp, std::span<const geometry::PointCloud* const>(a));
    const auto fb = network::forward(bp, std::span<const geometry::PointCloud* const>(b));
    auto cmp = [&](const tensor::Tensor<double>& x, const tensor::Tensor<double>& y) {
      for (std::size_t i = 0; i < x.numel(); ++i) perm_err = std::max(perm_err, std::abs(x[i] - y[i]));
    };
    cmp(fa.features.global_feature.value(), fb.features.global_feature.value());
    cmp(fa.probs1.value(), fb.probs1.value());
    cmp(fa.probs2.value(), fb.probs2.value());

    const auto& v = fa.features.node_features.value();
    const auto& w = fa.features.node_features_attended.value();
    for (std::size_t i = 0; i < v.numel(); ++i) {
      if (v[i] > 0.0) {
        const double r = w[i] / v[i];
        ratio_lo = std::min(ratio_lo, r);
        ratio_hi = std::max(ratio_hi, r);
      } else {
        ++zero_rows;
        zero_rows_ok += w[i] == 0.0;
      }
    }
  }

  // Parameter partition after every Step 1 and Step 2 of a short run, for
  // each ablation that changes the trained groups.
  std::size_t steps = 0, violations = 0;
  std::vector<geometry::PointCloud> src, tgt;
  for (int i = 0; i < 8; ++i) {
    src.push_back(random_cloud(rng, 64));
    src.back().label = i % 3;
    tgt.push_back(random_cloud(rng, 64));
  }
  std::vector<const geometry::PointCloud*> sp, tp;
  for (const auto& c : src) sp.push_back(&c);
  for (const auto& c : tgt) tp.push_back(&c);
  for (const char* abl : {"none", "g", "gl", "gla"}) {
    training::TrainConfig cfg;
    cfg.ablation = training::Ablation::parse(abl);
    cfg.n_nodes = 8;
    cfg.k_neighbors = 8;
    cfg.batch_size = 4;
    cfg.learning_rate = 1e-3;
    training::Trainer<double> trainer(cfg, 3);
    for (int s = 0; s < 3; ++s) {
      auto pass = trainer.forward_batch(std::span(sp).subspan(4 * (s % 2), 4), std::span(tp).subspan(4 * (s % 2), 4));
      auto before = trainer.params();
      trainer.step1(pass);
      violations += !partition_holds(before, trainer.params(), trainer.classifier_groups());
      before = trainer.params();
      trainer.step2(pass);
      violations += !partition_holds(before, trainer.params(), trainer.feature_groups());
      steps += 2;
    }
  }

  Outcome o{"4", "architecture invariants"};
  const bool bounded = ratio_lo > 1.0 && ratio_hi < 2.0 && zero_rows_ok == zero_rows;
  o.passed = perm_err <= 1e-12 && bounded && violations == 0;
  o.detail = fmt("100 clouds: max permutation deviation %.1e (<= 1e-12); attention ratio in [%.4f, %.4f] "
                 "(inside (1, 2)); partition violations %zu over %zu steps",
                 perm_err, ratio_lo, ratio_hi, violations, steps);
  return o;
}

// ---------------------------------------------------------------- 5, 6

struct SweepSettings {
  fs::path dir;
  std::size_t seeds = 5;
  std::size_t epochs = 60;
  std::size_t per_class = 128;
  std::size_t points = 256;
  std::size_t threads = 1;
};

struct UnitResult {
  std::vector<double> target_acc;  // per epoch, finetune epochs included
  std::size_t pseudo_selected = 0;
  double wall_seconds = 0.0;
  bool cached = false;
};

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> read_kv(const fs::path& p) {
  std::map<std::string, std::string> kv;
  std::istringstream in(read_text(p));
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find('=');
    if (line.empty() || line[0] == '#' || eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

std::vector<double> read_target_column(const fs::path& metrics) {
  std::istringstream in(read_text(metrics));
  std::vector<double> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    if (cols.size() == 7) out.push_back(std::stod(cols[5]));
  }
  return out;
}

training::ExperimentConfig sweep_config(const SweepSettings& s, const std::string& ablation, std::uint64_t seed) {
  training::ExperimentConfig c;
  c.source = (s.dir / "data" / "A").string();
  c.target = (s.dir / "data" / "B").string();
  c.out_dir = (s.dir / "runs").string();
  c.seeds = 1;
  c.train.ablation = training::Ablation::parse(ablation);
  c.train.seed = seed;
  c.train.epochs = s.epochs;
  c.train.precision = training::Precision::kFloat;
  c.train.mmd_pooling = training::MmdPooling::kNode;
  c.train.mmd_rows = 1024;
  c.train.threads = s.threads;
  return c;
}

UnitResult run_unit(const SweepSettings& s, const std::string& ablation, std::uint64_t seed) {
  const auto cfg = sweep_config(s, ablation, seed);
  const fs::path run = fs::path(cfg.out_dir) / ("run-" + cfg.hash());
  const fs::path seed_dir = run / ("seed-" + std::to_string(seed));
  const fs::path wall = run / "wall_seconds.txt";
  UnitResult r;
  if (!fs::exists(wall) || !fs::exists(run / "summary.txt")) {
    const auto t0 = Clock::now();
    training::run_experiment(cfg);
    std::ofstream(wall) << training::format_number(seconds_since(t0)) << "\n";
  } else {
    r.cached = true;
  }
  r.wall_seconds = std::stod(read_text(wall));
  r.target_acc = read_target_column(seed_dir / "metrics.csv");
  const auto kv = read_kv(seed_dir / "manifest.txt");
  if (auto it = kv.find("pseudo_selected"); it != kv.end()) r.pseudo_selected = std::stoul(it->second);
  require(r.target_acc.size() >= s.epochs, ErrorKind::kFormat, "incomplete sweep metrics in " + seed_dir.string());
  std::fprintf(stderr, "  sweep %-4s seed %llu: target acc %.4f at epoch %zu, final %.4f (%.0f s%s)\n",
               ablation.c_str(), static_cast<unsigned long long>(seed), r.target_acc[s.epochs - 1], s.epochs,
               r.target_acc.back(), r.wall_seconds, r.cached ? ", cached" : "");
  return r;
}

struct Sweep {
  std::map<std::string, std::vector<double>> acc;  // ablation -> per-seed accuracy
  std::vector<std::size_t> pseudo_selected;
  std::size_t target_train = 0;
  double wall_seconds = 0.0;
};

Sweep run_sweep(const SweepSettings& s) {
  const fs::path data = s.dir / "data";
  if (!fs::exists(data / "B" / "manifest.txt")) {
    data::BenchmarkConfig b;
    b.per_class_train = s.per_class;
    b.points = s.points;
    b.threads = s.threads;
    data::generate_benchmark(b, data.string());
  }
  Sweep sw;
  sw.target_train = data::DatasetManifest::read((data / "B" / "manifest.txt").string()).count("train");
  for (std::size_t i = 0; i < s.seeds; ++i) {
    for (const char* abl : {"none", "g", "gl", "glap"}) {
      const auto r = run_unit(s, abl, i);
      sw.wall_seconds += r.wall_seconds;
      if (std::string(abl) == "glap") {
        // The pseudo-label stage starts after the last regular epoch, so
        // that row is the G+L+A result of the same run.
        sw.acc["gla"].push_back(r.target_acc[s.epochs - 1]);
        sw.acc["glap"].push_back(r.target_acc.back());
        sw.pseudo_selected.push_back(r.pseudo_selected);
      } else {
        sw.acc[abl].push_back(r.target_acc.back());
      }
    }
  }
  return sw;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

std::vector<Outcome> adaptation(const Sweep& sw, std::size_t seeds) {
  const auto& none = sw.acc.at("none");
  const auto& g = sw.acc.at("g");
  const auto& gl = sw.acc.at("gl");
  const auto& gla = sw.acc.at("gla");
  auto holds = [&](const std::vector<double>& hi, const std::vector<double>& lo) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < seeds; ++i) n += hi[i] >= lo[i];
    return n;
  };
  const std::size_t need = seeds - 1;
  const std::size_t a = holds(gla, gl), b = holds(gl, g), c = holds(g, none);
  const double gap = 100.0 * (mean(gla) - mean(none));
  Outcome order{"5a", "desk-scale adaptation: ordering"};
  order.passed = a >= need && b >= need && c >= need && gap >= 5.0;
  order.detail = fmt("mean target acc none %.2f, G %.2f, GL %.2f, GLA %.2f; seeds with GLA>=GL %zu, GL>=G %zu, "
                     "G>=none %zu (need %zu of %zu each); GLA - none %+.2f points (>= 5)",
                     100 * mean(none), 100 * mean(g), 100 * mean(gl), 100 * mean(gla), a, b, c, need, seeds, gap);
  Outcome time{"5b", "desk-scale adaptation: runtime"};
  time.passed = sw.wall_seconds < 1800.0;
  time.detail = fmt("sweep wall time %.1f min (< 30 min)", sw.wall_seconds / 60.0);

  const std::size_t want = training::pseudo_label_count(sw.target_train, 0.1);
  const bool exact = std::all_of(sw.pseudo_selected.begin(), sw.pseudo_selected.end(),
                                 [&](std::size_t n) { return n == want; });
  const double delta = 100.0 * (mean(sw.acc.at("glap")) - mean(gla));
  Outcome pl{"6", "pseudo-label stage"};
  pl.passed = exact && delta >= -1.0;
  pl.detail = fmt("selected %zu of %zu target samples in every run (ceil(0.1 n_t) = %zu): %s; "
                  "mean GLAP %.2f vs GLA %.2f (%+.2f points, >= -1.0)",
                  sw.pseudo_selected.empty() ? 0 : sw.pseudo_selected.front(), sw.target_train, want,
                  exact ? "yes" : "no", 100 * mean(sw.acc.at("glap")), 100 * mean(gla), delta);
  return {order, time, pl};
}

// ---------------------------------------------------------------- 7, 8

data::BenchmarkConfig tiny_benchmark() {
  data::BenchmarkConfig b;
  b.class_count = 4;
  b.per_class_train = 6;
  b.per_class_test = 3;
  b.points = 64;
  b.seed = 8;
  return b;
}

training::ExperimentConfig tiny_experiment(const fs::path& root, const std::string& out) {
  training::ExperimentConfig c;
  c.source = (root / "data" / "A").string();
  c.target = (root / "data" / "B").string();
  c.out_dir = (root / out).string();
  c.train.ablation = training::Ablation::parse("glap");
  c.train.epochs = 3;
  c.train.finetune_epochs = 1;
  c.train.batch_size = 6;
  c.train.n_nodes = 8;
  c.train.k_neighbors = 8;
  c.train.learning_rate = 1e-3;
  c.train.strict = true;
  return c;
}

Outcome determinism(const fs::path& scratch_root) {
  Scratch s(scratch_root, "determinism");
  data::generate_benchmark(tiny_benchmark(), (s.path / "data").string());
  std::size_t same = 0, total = 0;
  for (auto precision : {training::Precision::kDouble, training::Precision::kFloat}) {
    auto c1 = tiny_experiment(s.path, "one"), c2 = tiny_experiment(s.path, "two");
    c1.train.precision = c2.train.precision = precision;
    const auto r1 = training::run_experiment(c1), r2 = training::run_experiment(c2);
    for (const char* f : {"metrics.csv", "checkpoint.bin"}) {
      ++total;
      same += read_text(fs::path(r1.runs[0].run_dir) / f) == read_text(fs::path(r2.runs[0].run_dir) / f);
    }
  }
  Outcome o{"7", "determinism"};
  o.passed = same == total;
  o.detail = fmt("%zu/%zu metrics/checkpoint files byte-identical across two strict runs (f64 and f32)", same, total);
  return o;
}

Outcome format_round_trips(const fs::path& scratch_root) {
  Scratch s(scratch_root, "roundtrip");
  const auto cfg = tiny_benchmark();
  const auto m = data::generate_benchmark(cfg, (s.path / "data").string());
  std::size_t clouds = 0, mismatched = 0;
  for (int dom = 0; dom < 2; ++dom) {
    const auto& path = dom == 0 ? m.a_path : m.b_path;
    const auto& profile = dom == 0 ? cfg.profile_a : cfg.profile_b;
    for (int split = 0; split < 2; ++split) {
      const std::size_t per = split == 0 ? cfg.per_class_train : cfg.per_class_test;
      const auto set = data::load_labeled(path, split == 0 ? "train" : "test");
      for (std::size_t i = 0; i < set.size(); ++i) {
        const std::size_t c = i / per, k = i % per;
        const auto ref = data::generate_instance(static_cast<int>(c), profile, cfg.points,
                                                 data::instance_seed(cfg.seed, dom, split, c, k));
        bool same = set.clouds[i].label == static_cast<int>(c) && ref.xyz.size() == set.clouds[i].xyz.size();
        for (std::size_t j = 0; same && j < ref.xyz.size(); ++j)
          same = set.clouds[i].xyz[j] == static_cast<double>(static_cast<float>(ref.xyz[j]));
        mismatched += !same;
        ++clouds;
      }
    }
  }

  // Train briefly, evaluate, save, load, evaluate again.
  std::size_t eval_mismatch = 0;
  const auto target = data::load_labeled(m.b_path, "test", geometry::DomainTag::kTarget);
  const auto source = data::load_labeled(m.a_path, "train");
  const auto unlabeled = data::load_unlabeled(m.b_path, "train");
  auto check = [&]<class Real>(Real) {
    auto tc = tiny_experiment(s.path, "unused").train;
    training::Trainer<Real> trainer(tc, source.num_classes);
    trainer.train_epoch(source, unlabeled);
    const auto before = training::evaluate(trainer.params(), target, trainer.switches(), trainer.dual_head(), 5);
    const auto file = (s.path / "model.bin").string();
    network::save_checkpoint(file, trainer.params(), {true, trainer.dual_head()});
    network::CheckpointMeta meta;
    const auto loaded = network::load_checkpoint<Real>(file, &meta);
    const auto after = training::evaluate(loaded, target, {meta.adaptive_nodes}, meta.dual_head, 5);
    eval_mismatch += before.accuracy != after.accuracy || before.predictions != after.predictions;
    return before.accuracy;
  };
  const double acc64 = check(double{});
  const double acc32 = check(float{});

  Outcome o{"8", "format round-trips"};
  o.passed = mismatched == 0 && eval_mismatch == 0;
  o.detail = fmt("generate->load: %zu/%zu clouds bitwise equal; checkpoint save->load->evaluate: %s "
                 "(f64 acc %.4f, f32 acc %.4f)",
                 clouds - mismatched, clouds, eval_mismatch ? "accuracy changed" : "identical accuracy and predictions",
                 acc64, acc32);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance report for the pdan library"};
  SweepSettings sweep;
  std::string sweep_dir = "acceptance-sweep";
  std::vector<std::string> only, allow_fail;
  app.add_option("--sweep-dir", sweep_dir, "Cache directory for the adaptation sweep (resumable)");
  app.add_option("--seeds", sweep.seeds, "Sweep seeds")->check(CLI::Range(2, 100));
  app.add_option("--epochs", sweep.epochs, "Sweep epochs")->check(CLI::Range(1, 10000));
  app.add_option("--per-class", sweep.per_class, "Sweep training samples per class")->check(CLI::Range(1, 100000));
  app.add_option("--points", sweep.points, "Sweep points per cloud")->check(CLI::Range(8, 100000));
  app.add_option("--threads", sweep.threads, "Worker threads per sweep run")->check(CLI::Range(1, 256));
  app.add_option("--only", only, "Criteria to run (1-8)")->delimiter(',');
  app.add_option("--allow-fail", allow_fail, "Criterion ids whose failure does not fail the exit status")
      ->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  sweep.dir = fs::absolute(sweep_dir);

  const bool pinned = sweep.seeds == 5 && sweep.epochs == 60 && sweep.per_class == 128 && sweep.points == 256;
  auto wanted = [&](const std::string& id) { return only.empty() || std::count(only.begin(), only.end(), id); };
  const fs::path scratch = fs::temp_directory_path() / ("pdan-acceptance-" + std::to_string(::getpid()));

  std::vector<Outcome> outcomes;
  auto run = [&](const std::string& id, const std::string& title, const std::function<std::vector<Outcome>()>& f) {
    if (!wanted(id)) return;
    std::fprintf(stderr, "running %s %s ...\n", id.c_str(), title.c_str());
    try {
      for (auto& o : f()) outcomes.push_back(std::move(o));
    } catch (const std::exception& e) {
      outcomes.push_back({id, title, false, std::string("error: ") + e.what()});
    }
  };
  run("1", "gradient correctness", [] { return std::vector{gradient_correctness()}; });
  run("2", "oracle equivalence", [] { return std::vector{oracle_equivalence()}; });
  run("3", "loss properties", [] { return std::vector{loss_properties()}; });
  run("4", "architecture invariants", [] { return std::vector{architecture_invariants()}; });
  run("7", "determinism", [&] { return std::vector{determinism(scratch)}; });
  run("8", "format round-trips", [&] { return std::vector{format_round_trips(scratch)}; });
  if (wanted("5") || wanted("6")) {
    std::fprintf(stderr, "running adaptation sweep in %s%s ...\n", sweep.dir.string().c_str(),
                 pinned ? "" : " (reduced scale)");
    try {
      auto res = adaptation(run_sweep(sweep), sweep.seeds);
      for (auto& o : res)
        if (wanted(o.id.substr(0, 1))) {
          if (!pinned) o.detail += " [reduced scale, not the pinned protocol]";
          outcomes.push_back(std::move(o));
        }
    } catch (const std::exception& e) {
      if (wanted("5")) outcomes.push_back({"5", "desk-scale adaptation", false, std::string("error: ") + e.what()});
      if (wanted("6")) outcomes.push_back({"6", "pseudo-label stage", false, std::string("error: ") + e.what()});
    }
  }
  std::error_code ec;
  fs::remove_all(scratch, ec);

  std::sort(outcomes.begin(), outcomes.end(), [](const Outcome& a, const Outcome& b) { return a.id < b.id; });
  int blocking = 0;
  for (const auto& o : outcomes) {
    const bool allowed = std::count(allow_fail.begin(), allow_fail.end(), o.id) ||
                         std::count(allow_fail.begin(), allow_fail.end(), o.id.substr(0, 1));
    std::printf("%s %-3s %-34s %s%s\n", o.passed ? "PASS" : "FAIL", o.id.c_str(), o.title.c_str(), o.detail.c_str(),
                !o.passed && allowed ? " (allowed to fail)" : "");
    blocking += !o.passed && !allowed;
  }
  std::fflush(stdout);
  return blocking ? 1 : 0;
}
