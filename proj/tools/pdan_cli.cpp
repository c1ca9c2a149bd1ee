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

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "CLI11.hpp"
#include "pdan/pdan.h"

namespace {

// Raised when a library call fails; carries the status for the exit code.
struct Failure {
  pdan_status status;
};

void check(pdan_status s) {
  if (s != PDAN_OK) {
    std::fprintf(stderr, "pdan: %s: %s\n", pdan_status_name(s), pdan_last_error());
    throw Failure{s};
  }
}

template <class T, void (*Destroy)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Destroy(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Config = Handle<pdan_config, pdan_config_destroy>;
using Dataset = Handle<pdan_dataset, pdan_dataset_destroy>;
using Run = Handle<pdan_run, pdan_run_destroy>;
using Model = Handle<pdan_model, pdan_model_destroy>;
using Eval = Handle<pdan_eval, pdan_eval_destroy>;
using Gradcheck = Handle<pdan_gradcheck, pdan_gradcheck_destroy>;
using Matches = Handle<pdan_matches, pdan_matches_destroy>;

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// Writes to `path`, or stdout for an empty path or "-".
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) {
        std::fprintf(stderr, "pdan: cannot write %s\n", path.c_str());
        throw Failure{PDAN_ERR_IO};
      }
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

// ---- gen-data ----

struct GenArgs {
  pdan_benchmark_options opt{};
  std::string out;
};

void print_dataset(const std::string& path) {
  Dataset ds;
  check(pdan_dataset_open(path.c_str(), ds.out()));
  std::printf("%s: domain=%s points=%zu classes=%zu train=%zu test=%zu profile=%s\n", path.c_str(),
              pdan_dataset_domain(ds.get()), pdan_dataset_points(ds.get()), pdan_dataset_class_count(ds.get()),
              pdan_dataset_count(ds.get(), "train"), pdan_dataset_count(ds.get(), "test"),
              pdan_dataset_profile(ds.get()));
}

int run_gen(const GenArgs& a) {
  check(pdan_generate_benchmark(&a.opt, a.out.c_str()));
  print_dataset(a.out + "/A/manifest.txt");
  print_dataset(a.out + "/B/manifest.txt");
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string config_file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> options;  // config key -> value from flags
  bool strict = false;
  bool augment = false;
  bool quiet = false;
};

// Flags that map one-to-one onto config keys.
const std::vector<std::pair<std::string, std::string>>& train_flags() {
  static const std::vector<std::pair<std::string, std::string>> flags = {
      {"source", "Source domain (manifest or directory)"},
      {"target", "Target domain (manifest or directory)"},
      {"out", "Output directory for run artifacts"},
      {"seeds", "Number of seeds, run sequentially from --seed"},
      {"ablation", "Components: none, g, gl, gla or glap"},
      {"lr", "Learning rate"},
      {"wd", "Weight decay"},
      {"epochs", "Training epochs"},
      {"batch", "Batch size"},
      {"nodes", "Number of SA nodes"},
      {"k", "Neighbors per node"},
      {"lambda", "Weight of the classifier discrepancy"},
      {"beta", "Weight of the node-feature MMD"},
      {"kernel", "RBF bandwidths: median or a comma list of sigma^2"},
      {"mmd_pooling", "MMD samples: node or object"},
      {"mmd_rows", "Node rows per domain sampled for the MMD (0 = all)"},
      {"seed", "Base seed"},
      {"pseudo_fraction", "Fraction of target samples pseudo-labeled"},
      {"finetune_epochs", "Epochs of pseudo-label finetuning"},
      {"generator_repeats", "Step-2 updates per Step-1 update"},
      {"precision", "f64 or f32"},
      {"threads", "Evaluation threads"},
  };
  return flags;
}

std::string flag_name(std::string key) {
  for (auto& c : key)
    if (c == '_') c = '-';
  return "--" + key;
}

void build_config(const TrainArgs& a, pdan_config* cfg) {
  if (!a.config_file.empty()) check(pdan_config_load(cfg, a.config_file.c_str()));
  for (const auto& [k, v] : a.options) check(pdan_config_set(cfg, k.c_str(), v.c_str()));
  if (a.strict) check(pdan_config_set(cfg, "strict", "1"));
  if (a.augment) check(pdan_config_set(cfg, "augment", "1"));
  for (const auto& kv : a.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "pdan: --set expects key=value, got '%s'\n", kv.c_str());
      throw Failure{PDAN_ERR_USAGE};
    }
    check(pdan_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
  }
}

void on_epoch(void* user, const pdan_epoch_record* r) {
  if (*static_cast<bool*>(user)) return;
  std::printf("seed %" PRIu64 " epoch %" PRIu64 ": l_cls=%.4f l_dis=%.4f l_mmd=%.4f src_acc=%.4f tgt_acc=%.4f (%.1fs)\n",
              r->seed, r->epoch, r->l_cls, r->l_dis, r->l_mmd, r->source_accuracy, r->target_accuracy, r->seconds);
  std::fflush(stdout);
}

int run_train(TrainArgs& a) {
  Config cfg;
  check(pdan_config_create(cfg.out()));
  build_config(a, cfg.get());
  if (!a.quiet) std::printf("config %s\n%s", pdan_config_hash(cfg.get()), pdan_config_text(cfg.get()));
  Run run;
  check(pdan_train(cfg.get(), on_epoch, &a.quiet, run.out()));
  const std::size_t n = pdan_run_seed_count(run.get());
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t seed = 0;
    double acc = 0.0;
    const char* dir = nullptr;
    check(pdan_run_seed_result(run.get(), i, &seed, &acc, &dir));
    std::printf("seed %" PRIu64 ": target accuracy %s (%s)\n", seed, fixed4(acc).c_str(), dir);
  }
  std::printf("target accuracy mean %s std %s over %zu seed(s); artifacts in %s\n",
              fixed4(pdan_run_mean_accuracy(run.get())).c_str(), fixed4(pdan_run_std_accuracy(run.get())).c_str(), n,
              pdan_run_dir(run.get()));
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string checkpoint, data, split = "test", csv;
  unsigned batch = 64, threads = 1;
};

int run_eval(const EvalArgs& a) {
  Model model;
  check(pdan_model_load(a.checkpoint.c_str(), model.out()));
  Eval ev;
  check(pdan_evaluate(model.get(), a.data.c_str(), a.split.c_str(), a.batch, a.threads, ev.out()));
  Dataset ds;
  check(pdan_dataset_open(a.data.c_str(), ds.out()));

  Output out(a.csv);
  auto& os = out.stream();
  os << "class,name,support,accuracy\n";
  for (std::size_t c = 0; c < pdan_eval_class_count(ev.get()); ++c) {
    double acc = 0.0;
    std::size_t support = 0;
    check(pdan_eval_class(ev.get(), c, &acc, &support));
    const char* name = pdan_dataset_class_name(ds.get(), c);
    os << c << "," << (name ? name : "") << "," << support << "," << num(acc) << "\n";
  }
  os.flush();
  std::fprintf(a.csv.empty() || a.csv == "-" ? stderr : stdout, "accuracy=%s samples=%zu\n",
               num(pdan_eval_accuracy(ev.get())).c_str(), pdan_eval_sample_count(ev.get()));
  return 0;
}

// ---- gradcheck ----

struct GradArgs {
  std::uint64_t seed = 0;
  std::string only, inject_fault;
};

int run_gradcheck(const GradArgs& a) {
  Gradcheck rep;
  check(pdan_gradcheck_run(a.seed, a.only.empty() ? nullptr : a.only.c_str(),
                           a.inject_fault.empty() ? nullptr : a.inject_fault.c_str(), rep.out()));
  std::size_t failed = 0;
  const std::size_t n = pdan_gradcheck_count(rep.get());
  for (std::size_t i = 0; i < n; ++i) {
    pdan_gradcheck_result r{};
    check(pdan_gradcheck_entry(rep.get(), i, &r));
    failed += r.passed ? 0 : 1;
    std::printf("%-4s %-24s max_rel_err=%.3e max_abs_err=%.3e tol=%.0e checked=%zu skipped=%zu\n",
                r.passed ? "PASS" : "FAIL", r.name, r.max_rel_err, r.max_abs_err, r.tolerance, r.checked, r.skipped);
  }
  std::printf("%zu of %zu gradient checks passed\n", n - failed, n);
  return failed == 0 ? 0 : pdan_exit_code(PDAN_ERR_NUMERICAL);
}

// ---- match-nodes ----

struct MatchArgs {
  std::string checkpoint, source, target, source_split = "test", target_split = "test", csv;
  std::size_t source_index = 0, target_index = 0, top = 10;
};

int run_match(const MatchArgs& a) {
  Model model;
  check(pdan_model_load(a.checkpoint.c_str(), model.out()));
  Matches m;
  check(pdan_match_nodes(model.get(), a.source.c_str(), a.source_split.c_str(), a.source_index, a.target.c_str(),
                         a.target_split.c_str(), a.target_index, a.top, m.out()));
  Output out(a.csv);
  auto& os = out.stream();
  os << "rank,source_node,target_node,score,source_x,source_y,source_z,target_x,target_y,target_z\n";
  for (std::size_t i = 0; i < pdan_matches_count(m.get()); ++i) {
    pdan_node_match r{};
    check(pdan_matches_entry(m.get(), i, &r));
    os << i << "," << r.source_node << "," << r.target_node << "," << num(r.score);
    for (double v : r.source_position) os << "," << num(v);
    for (double v : r.target_position) os << "," << num(v);
    os << "\n";
  }
  return 0;
}

void tune_allocator() {
#if defined(__GLIBC__)
  // Training churns through many large temporaries; keep them in the heap
  // instead of mapping and unmapping them on every op.
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 64 << 20);
#endif
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"pdan: point-cloud domain adaptation with adaptive SA nodes"};
  app.set_version_flag("--version", pdan_version());
  app.require_subcommand(1);

  GenArgs gen;
  pdan_benchmark_options_default(&gen.opt);
  auto* g = app.add_subcommand("gen-data", "Generate the synthetic two-domain benchmark");
  g->add_option("--classes", gen.opt.classes, "Number of classes (1-10)")->capture_default_str();
  g->add_option("--train", gen.opt.train_per_class, "Training samples per class")->capture_default_str();
  g->add_option("--test", gen.opt.test_per_class, "Test samples per class")->capture_default_str();
  g->add_option("--points", gen.opt.points, "Points per cloud")->capture_default_str();
  g->add_option("--seed", gen.opt.seed, "Generation seed")->capture_default_str();
  g->add_option("--threads", gen.opt.threads, "Worker threads")->capture_default_str();
  g->add_option("--out", gen.out, "Output directory")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train one model per seed and write run artifacts");
  t->add_option("--config", tr.config_file, "key=value config file; flags override it");
  for (const auto& [key, help] : train_flags()) {
    const std::string k = key;
    t->add_option_function<std::string>(
        flag_name(key), [&tr, k](const std::string& v) { tr.options[k] = v; }, help);
  }
  t->add_flag("--strict", tr.strict, "Single-threaded, timing-free outputs");
  t->add_flag("--augment", tr.augment, "Random rotation and jitter at train time");
  t->add_option("--set", tr.sets, "Extra key=value setting (repeatable)");
  t->add_flag("-q,--quiet", tr.quiet, "Only print the final summary");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint; writes a per-class CSV");
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file")->required();
  e->add_option("--data", ev.data, "Dataset manifest or directory")->required();
  e->add_option("--split", ev.split, "Split to evaluate")->capture_default_str();
  e->add_option("--batch", ev.batch, "Batch size")->capture_default_str();
  e->add_option("--threads", ev.threads, "Worker threads")->capture_default_str();
  e->add_option("--csv", ev.csv, "Per-class CSV path (default stdout)");

  GradArgs gc;
  auto* c = app.add_subcommand("gradcheck", "Finite-difference checks of every gradient");
  c->add_option("--seed", gc.seed, "Seed for inputs")->capture_default_str();
  c->add_option("--only", gc.only, "Comma-separated subset of checks");
  c->add_option("--inject-fault", gc.inject_fault, "Negate the gradient of one check (self-test)");

  MatchArgs mt;
  auto* m = app.add_subcommand("match-nodes", "Export the top node matches between two samples");
  m->add_option("--checkpoint", mt.checkpoint, "Checkpoint file")->required();
  m->add_option("--source", mt.source, "Source dataset")->required();
  m->add_option("--target", mt.target, "Target dataset")->required();
  m->add_option("--source-split", mt.source_split, "Source split")->capture_default_str();
  m->add_option("--target-split", mt.target_split, "Target split")->capture_default_str();
  m->add_option("--source-index", mt.source_index, "Source sample index")->capture_default_str();
  m->add_option("--target-index", mt.target_index, "Target sample index")->capture_default_str();
  m->add_option("--top", mt.top, "Number of matches to keep")->capture_default_str();
  m->add_option("--csv", mt.csv, "Output CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::CallForAllHelp& err) {
    return app.exit(err);
  } catch (const CLI::Success& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return pdan_exit_code(PDAN_ERR_USAGE);
  }

  try {
    if (*g) return run_gen(gen);
    if (*t) return run_train(tr);
    if (*e) return run_eval(ev);
    if (*c) return run_gradcheck(gc);
    if (*m) return run_match(mt);
  } catch (const Failure& f) {
    return pdan_exit_code(f.status);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "pdan: %s\n", ex.what());
    return 1;
  }
  return pdan_exit_code(PDAN_ERR_USAGE);
}
