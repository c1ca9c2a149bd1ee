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

#include "training/experiment.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/version.hpp"
#include "network/checkpoint.hpp"

namespace pdan::training {
namespace {

namespace fs = std::filesystem;

bool is_experiment_key(const std::string& key) {
  return key == "source" || key == "target" || key == "out" || key == "seeds";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::kIo, "cannot write " + path.string());
  out << text;
  out.flush();
  require(static_cast<bool>(out), ErrorKind::kIo, "failed writing " + path.string());
}

std::string metrics_row(const TrainRecord& r, bool strict) {
  std::string row = std::to_string(r.epoch);
  for (double v : {r.l_cls, r.l_dis, r.l_mmd, r.source_train_acc, r.target_test_acc}) {
    row += ',';
    row += format_number(v);
  }
  row += ',';
  row += strict ? std::string("0") : format_number(r.wall_seconds);
  return row;
}

std::string per_class_csv(const EvalResult& ev, const std::vector<std::string>& names) {
  std::string s = "class,name,support,accuracy\n";
  for (std::size_t c = 0; c < ev.per_class.size(); ++c) {
    s += std::to_string(c) + "," + (c < names.size() ? names[c] : std::string()) + "," +
         std::to_string(ev.support[c]) + "," + (std::isnan(ev.per_class[c]) ? "nan" : format_number(ev.per_class[c])) +
         "\n";
  }
  return s;
}

struct Data {
  data::LabeledSet source_train;
  data::UnlabeledSet target_train;
  data::LabeledSet target_test;
  std::vector<std::string> class_names;
};

template <class Real>
SeedResult run_seed(const ExperimentConfig& cfg, const Data& d, std::uint64_t seed, const fs::path& dir,
                    const ProgressFn& progress) {
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  SeedResult res;
  res.seed = seed;
  res.run_dir = dir.string();
  fs::create_directories(dir);

  Trainer<Real> trainer(tc, d.source_train.num_classes);
  std::ofstream metrics(dir / "metrics.csv", std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(metrics), ErrorKind::kIo, "cannot write " + (dir / "metrics.csv").string());
  metrics << kMetricsHeader << "\n";
  std::string timing = "epoch,seconds\n";

  const std::size_t threads = tc.effective_threads();
  auto record = [&](TrainRecord& rec) {
    rec.target_test_acc =
        evaluate(trainer.params(), d.target_test, trainer.switches(), trainer.dual_head(), tc.batch_size, threads)
            .accuracy;
    metrics << metrics_row(rec, tc.strict) << "\n";
    metrics.flush();
    timing += std::to_string(rec.epoch) + "," + format_number(rec.wall_seconds) + "\n";
    res.records.push_back(rec);
    if (progress) progress(res, rec);
  };

  for (std::size_t e = 0; e < tc.epochs; ++e) {
    TrainRecord rec = trainer.train_epoch(d.source_train, d.target_train);
    record(rec);
  }
  if (tc.ablation.pseudo_label && tc.finetune_epochs > 0) {
    const PseudoLabels pl = pseudo_label_finetune(trainer, d.source_train, d.target_train, record);
    res.pseudo_selected = pl.indices.size();
  }
  require(static_cast<bool>(metrics), ErrorKind::kIo, "failed writing " + (dir / "metrics.csv").string());
  metrics.close();
  if (tc.strict) write_text(dir / "timing.csv", timing);

  network::save_checkpoint((dir / "checkpoint.bin").string(), trainer.params(),
                           {tc.ablation.adaptive_nodes, trainer.dual_head()});

  const EvalResult ev =
      evaluate(trainer.params(), d.target_test, trainer.switches(), trainer.dual_head(), tc.batch_size, threads);
  write_text(dir / "target_eval.csv", per_class_csv(ev, d.class_names));
  res.final_target_acc = ev.accuracy;
  res.final_source_acc = res.records.empty() ? 0.0 : res.records.back().source_train_acc;

  // The echoed config reproduces this seed alone.
  ExperimentConfig echo = cfg;
  echo.train.seed = seed;
  echo.seeds = 1;
  std::ostringstream m;
  m << "# pdan training run\n";
  m << "format_version=" << kRunFormatVersion << "\n";
  m << "pdan_version=" << kVersion << "\n";
  m << "config_hash=" << echo.hash() << "\n";
  m << "run_seed=" << seed << "\n";
  for (const auto& [k, v] : echo.to_map()) m << k << "=" << v << "\n";
  m << "pseudo_selected=" << res.pseudo_selected << "\n";
  m << "final_target_acc=" << format_number(res.final_target_acc) << "\n";
  write_text(dir / "manifest.txt", m.str());
  return res;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

std::string manifest_path(const std::string& path) {
  if (fs::is_directory(path)) return (fs::path(path) / "manifest.txt").string();
  return path;
}

void ExperimentConfig::validate() const {
  train.validate();
  require(!source.empty(), ErrorKind::kUsage, "no source dataset given");
  require(!target.empty(), ErrorKind::kUsage, "no target dataset given");
  require(seeds >= 1, ErrorKind::kInvalidArgument, "seeds must be >= 1");
}

std::map<std::string, std::string> ExperimentConfig::to_map() const {
  auto m = train.to_map();
  m["source"] = source;
  m["target"] = target;
  m["out"] = out_dir;
  m["seeds"] = std::to_string(seeds);
  return m;
}

bool ExperimentConfig::has_key(const std::string& key) {
  return is_experiment_key(key) || TrainConfig::has_key(key);
}

bool ExperimentConfig::is_manifest_metadata(const std::string& key) {
  return key == "format_version" || key == "pdan_version" || key == "config_hash" || key == "run_seed" ||
         key == "pseudo_selected" || key == "final_target_acc";
}

void ExperimentConfig::apply(const std::string& key, const std::string& value) {
  if (key == "source") {
    source = value;
  } else if (key == "target") {
    target = value;
  } else if (key == "out") {
    out_dir = value;
  } else if (key == "seeds") {
    std::uint64_t n = 0;
    auto r = std::from_chars(value.data(), value.data() + value.size(), n);
    require(r.ec == std::errc() && r.ptr == value.data() + value.size(), ErrorKind::kUsage,
            "config: 'seeds' expects a non-negative integer, got '" + value + "'");
    seeds = n;
  } else {
    train.apply(key, value);
  }
}

std::string ExperimentConfig::canonical_text() const {
  std::string s;
  for (const auto& [k, v] : to_map()) {
    if (k == "out") continue;
    s += k + "=" + v + "\n";
  }
  return s;
}

std::string ExperimentConfig::hash() const { return hex64(fnv1a64(canonical_text())); }

ExperimentResult run_experiment(const ExperimentConfig& config, const ProgressFn& progress) {
  config.validate();
  const std::string src = manifest_path(config.source);
  const std::string tgt = manifest_path(config.target);

  Data d;
  d.source_train = data::load_labeled(src, "train", geometry::DomainTag::kSource);
  d.target_train = data::load_unlabeled(tgt, "train");
  d.target_test = data::load_labeled(tgt, "test", geometry::DomainTag::kTarget);
  d.class_names = data::DatasetManifest::read(src).class_names;
  require(d.source_train.num_classes == d.target_test.num_classes, ErrorKind::kInvalidArgument,
          "source and target datasets disagree on the class count");
  require(d.source_train.size() > 0 && d.target_train.size() > 0 && d.target_test.size() > 0,
          ErrorKind::kInvalidArgument, "empty dataset split");

  ExperimentResult out;
  const fs::path run_dir = fs::path(config.out_dir) / ("run-" + config.hash());
  fs::create_directories(run_dir);
  out.run_dir = run_dir.string();
  write_text(run_dir / "config.txt", config.canonical_text());

  std::vector<double> accs;
  for (std::size_t i = 0; i < config.seeds; ++i) {
    const std::uint64_t seed = config.train.seed + i;
    const fs::path dir = run_dir / ("seed-" + std::to_string(seed));
    SeedResult r = config.train.precision == Precision::kDouble
                       ? run_seed<double>(config, d, seed, dir, progress)
                       : run_seed<float>(config, d, seed, dir, progress);
    accs.push_back(r.final_target_acc);
    out.runs.push_back(std::move(r));
  }
  std::tie(out.mean, out.stddev) = mean_std(accs);

  std::string summary = "runs=" + std::to_string(out.runs.size()) + "\n";
  for (const auto& r : out.runs)
    summary += "seed." + std::to_string(r.seed) + ".target_acc=" + format_number(r.final_target_acc) + "\n";
  summary += "target_acc_mean=" + format_number(out.mean) + "\n";
  summary += "target_acc_std=" + format_number(out.stddev) + "\n";
  write_text(run_dir / "summary.txt", summary);
  return out;
}

}  // namespace pdan::training
