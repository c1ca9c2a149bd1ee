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

#include "pdan/pdan.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "common/error.hpp"
#include "common/version.hpp"
#include "data/benchmark.hpp"
#include "data/dataset.hpp"
#include "network/checkpoint.hpp"
#include "network/match.hpp"
#include "network/model.hpp"
#include "training/experiment.hpp"
#include "training/gradcheck_suite.hpp"
#include "training/trainer.hpp"

using namespace pdan;

struct pdan_config {
  training::ExperimentConfig cfg;
  std::string scratch;
  std::string text;
  std::string hash;
};

struct pdan_dataset {
  data::DatasetManifest manifest;
};

struct pdan_run {
  training::ExperimentResult result;
};

struct pdan_model {
  network::ModelParams<double> params;
  network::CheckpointMeta meta;
};

struct pdan_eval {
  training::EvalResult result;
};

struct pdan_gradcheck {
  std::vector<training::SuiteEntry> entries;
};

struct pdan_matches {
  std::vector<pdan_node_match> rows;
};

namespace {

thread_local std::string g_last_error;

pdan_status set_error(pdan_status s, const std::string& what) {
  g_last_error = what;
  return s;
}

template <class F>
pdan_status guarded(F&& f) {
  try {
    f();
    return PDAN_OK;
  } catch (const Error& e) {
    return set_error(static_cast<pdan_status>(e.kind()), e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return set_error(PDAN_ERR_IO, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(PDAN_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(PDAN_ERR_INTERNAL, e.what());
  }
}

void need(const void* p, const char* what) {
  require(p != nullptr, ErrorKind::kInvalidArgument, std::string("null ") + what);
}

std::vector<std::string> split_list(const char* text) {
  std::vector<std::string> out;
  if (text == nullptr) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

extern "C" {

const char* pdan_version(void) { return kVersion; }

const char* pdan_last_error(void) { return g_last_error.c_str(); }

const char* pdan_status_name(pdan_status status) {
  switch (status) {
    case PDAN_OK: return "ok";
    case PDAN_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PDAN_ERR_USAGE: return "usage error";
    case PDAN_ERR_NUMERICAL: return "numerical error";
    case PDAN_ERR_IO: return "I/O error";
    case PDAN_ERR_FORMAT: return "format error";
    case PDAN_ERR_CHECKSUM: return "checksum mismatch";
    case PDAN_ERR_VERSION: return "unsupported version";
    case PDAN_ERR_TRUNCATED: return "truncated file";
    case PDAN_ERR_DIMENSION: return "dimension mismatch";
    case PDAN_ERR_STATE: return "invalid state";
    case PDAN_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

int pdan_exit_code(pdan_status status) {
  switch (status) {
    case PDAN_OK: return 0;
    case PDAN_ERR_USAGE:
    case PDAN_ERR_INVALID_ARGUMENT:
    case PDAN_ERR_DIMENSION: return 2;
    case PDAN_ERR_NUMERICAL: return 3;
    case PDAN_ERR_IO:
    case PDAN_ERR_FORMAT:
    case PDAN_ERR_CHECKSUM:
    case PDAN_ERR_VERSION:
    case PDAN_ERR_TRUNCATED: return 4;
    default: return 1;
  }
}

pdan_status pdan_config_create(pdan_config** out) {
  return guarded([&] {
    need(out, "output pointer");
    *out = new pdan_config();
  });
}

void pdan_config_destroy(pdan_config* config) { delete config; }

pdan_status pdan_config_set(pdan_config* config, const char* key, const char* value) {
  return guarded([&] {
    need(config, "config");
    need(key, "key");
    need(value, "value");
    require(training::ExperimentConfig::has_key(key), ErrorKind::kUsage,
            std::string("config: unknown key '") + key + "'");
    config->cfg.apply(key, value);
  });
}

pdan_status pdan_config_load(pdan_config* config, const char* path) {
  return guarded([&] {
    need(config, "config");
    need(path, "path");
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorKind::kIo, std::string("cannot open config file: ") + path);
    std::string line;
    std::size_t lineno = 0;
    training::ExperimentConfig next = config->cfg;
    while (std::getline(in, line)) {
      ++lineno;
      if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      const std::string where = std::string(path) + ":" + std::to_string(lineno);
      require(eq != std::string::npos, ErrorKind::kUsage, where + ": expected key=value");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (training::ExperimentConfig::is_manifest_metadata(key)) continue;
      require(training::ExperimentConfig::has_key(key), ErrorKind::kUsage, where + ": unknown key '" + key + "'");
      try {
        next.apply(key, value);
      } catch (const Error& e) {
        fail(e.kind(), where + ": " + e.what());
      }
    }
    config->cfg = std::move(next);
  });
}

const char* pdan_config_get(const pdan_config* config, const char* key) {
  if (config == nullptr || key == nullptr) return nullptr;
  const auto m = config->cfg.to_map();
  const auto it = m.find(key);
  if (it == m.end()) return nullptr;
  auto* self = const_cast<pdan_config*>(config);
  self->scratch = it->second;
  return self->scratch.c_str();
}

const char* pdan_config_text(const pdan_config* config) {
  if (config == nullptr) return "";
  auto* self = const_cast<pdan_config*>(config);
  self->text.clear();
  for (const auto& [k, v] : config->cfg.to_map()) self->text += k + "=" + v + "\n";
  return self->text.c_str();
}

const char* pdan_config_hash(const pdan_config* config) {
  if (config == nullptr) return "";
  auto* self = const_cast<pdan_config*>(config);
  self->hash = config->cfg.hash();
  return self->hash.c_str();
}

void pdan_benchmark_options_default(pdan_benchmark_options* options) {
  if (options == nullptr) return;
  const data::BenchmarkConfig d;
  options->classes = static_cast<uint32_t>(d.class_count);
  options->train_per_class = static_cast<uint32_t>(d.per_class_train);
  options->test_per_class = static_cast<uint32_t>(d.per_class_test);
  options->points = static_cast<uint32_t>(d.points);
  options->seed = d.seed;
  options->threads = static_cast<uint32_t>(d.threads);
}

pdan_status pdan_generate_benchmark(const pdan_benchmark_options* options, const char* out_dir) {
  return guarded([&] {
    need(options, "options");
    need(out_dir, "output directory");
    data::BenchmarkConfig cfg;
    cfg.class_count = options->classes;
    cfg.per_class_train = options->train_per_class;
    cfg.per_class_test = options->test_per_class;
    cfg.points = options->points;
    cfg.seed = options->seed;
    cfg.threads = options->threads;
    data::generate_benchmark(cfg, out_dir);
  });
}

pdan_status pdan_dataset_open(const char* path, pdan_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "output pointer");
    auto m = data::DatasetManifest::read(training::manifest_path(path));
    *out = new pdan_dataset{std::move(m)};
  });
}

void pdan_dataset_destroy(pdan_dataset* dataset) { delete dataset; }

const char* pdan_dataset_domain(const pdan_dataset* d) { return d ? d->manifest.domain.c_str() : ""; }
const char* pdan_dataset_profile(const pdan_dataset* d) { return d ? d->manifest.profile.c_str() : ""; }
size_t pdan_dataset_points(const pdan_dataset* d) { return d ? d->manifest.points : 0; }
size_t pdan_dataset_class_count(const pdan_dataset* d) { return d ? d->manifest.class_names.size() : 0; }

const char* pdan_dataset_class_name(const pdan_dataset* d, size_t class_id) {
  if (d == nullptr || class_id >= d->manifest.class_names.size()) return nullptr;
  return d->manifest.class_names[class_id].c_str();
}

size_t pdan_dataset_count(const pdan_dataset* d, const char* split) {
  if (d == nullptr || split == nullptr) return 0;
  return d->manifest.count(split);
}

pdan_status pdan_train(const pdan_config* config, pdan_progress_fn progress, void* user, pdan_run** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "output pointer");
    training::ProgressFn fn;
    if (progress != nullptr) {
      fn = [progress, user](const training::SeedResult& run, const training::TrainRecord& r) {
        const pdan_epoch_record rec{run.seed, r.epoch, r.l_cls, r.l_dis, r.l_mmd,
                                    r.source_train_acc, r.target_test_acc, r.wall_seconds};
        progress(user, &rec);
      };
    }
    auto result = training::run_experiment(config->cfg, fn);
    *out = new pdan_run{std::move(result)};
  });
}

void pdan_run_destroy(pdan_run* run) { delete run; }
const char* pdan_run_dir(const pdan_run* run) { return run ? run->result.run_dir.c_str() : ""; }
size_t pdan_run_seed_count(const pdan_run* run) { return run ? run->result.runs.size() : 0; }
double pdan_run_mean_accuracy(const pdan_run* run) { return run ? run->result.mean : NAN; }
double pdan_run_std_accuracy(const pdan_run* run) { return run ? run->result.stddev : NAN; }

pdan_status pdan_run_seed_result(const pdan_run* run, size_t i, uint64_t* seed, double* target_accuracy,
                                 const char** dir) {
  return guarded([&] {
    need(run, "run");
    require(i < run->result.runs.size(), ErrorKind::kInvalidArgument, "seed result index out of range");
    const auto& r = run->result.runs[i];
    if (seed) *seed = r.seed;
    if (target_accuracy) *target_accuracy = r.final_target_acc;
    if (dir) *dir = r.run_dir.c_str();
  });
}

pdan_status pdan_model_load(const char* checkpoint, pdan_model** out) {
  return guarded([&] {
    need(checkpoint, "checkpoint path");
    need(out, "output pointer");
    auto m = std::make_unique<pdan_model>();
    m->params = network::load_checkpoint<double>(checkpoint, &m->meta);
    *out = m.release();
  });
}

void pdan_model_destroy(pdan_model* model) { delete model; }

size_t pdan_model_class_count(const pdan_model* model) { return model ? model->params.config().num_classes : 0; }

pdan_status pdan_evaluate(const pdan_model* model, const char* dataset, const char* split, uint32_t batch,
                          uint32_t threads, pdan_eval** out) {
  return guarded([&] {
    need(model, "model");
    need(dataset, "dataset");
    need(split, "split");
    need(out, "output pointer");
    require(batch >= 1 && threads >= 1, ErrorKind::kInvalidArgument, "batch and threads must be >= 1");
    auto set = data::load_labeled(training::manifest_path(dataset), split, geometry::DomainTag::kTarget);
    require(set.num_classes == model->params.config().num_classes, ErrorKind::kInvalidArgument,
            "dataset has " + std::to_string(set.num_classes) + " classes, model has " +
                std::to_string(model->params.config().num_classes));
    auto r = training::evaluate(model->params, set, {model->meta.adaptive_nodes}, model->meta.dual_head, batch,
                                threads);
    *out = new pdan_eval{std::move(r)};
  });
}

void pdan_eval_destroy(pdan_eval* eval) { delete eval; }
double pdan_eval_accuracy(const pdan_eval* e) { return e ? e->result.accuracy : NAN; }
size_t pdan_eval_class_count(const pdan_eval* e) { return e ? e->result.per_class.size() : 0; }
size_t pdan_eval_sample_count(const pdan_eval* e) { return e ? e->result.predictions.size() : 0; }

pdan_status pdan_eval_class(const pdan_eval* e, size_t class_id, double* accuracy, size_t* support) {
  return guarded([&] {
    need(e, "eval");
    require(class_id < e->result.per_class.size(), ErrorKind::kInvalidArgument, "class index out of range");
    if (accuracy) *accuracy = e->result.per_class[class_id];
    if (support) *support = e->result.support[class_id];
  });
}

int pdan_eval_prediction(const pdan_eval* e, size_t i) {
  if (e == nullptr || i >= e->result.predictions.size()) return -1;
  return e->result.predictions[i];
}

size_t pdan_eval_confusion(const pdan_eval* e, size_t t, size_t p) {
  if (e == nullptr || t >= e->result.confusion.size() || p >= e->result.confusion[t].size()) return 0;
  return e->result.confusion[t][p];
}

pdan_status pdan_gradcheck_run(uint64_t seed, const char* only, const char* inject_fault, pdan_gradcheck** out) {
  return guarded([&] {
    need(out, "output pointer");
    training::SuiteOptions opt;
    opt.seed = seed;
    opt.only = split_list(only);
    if (inject_fault != nullptr) opt.inject_fault = inject_fault;
    *out = new pdan_gradcheck{training::run_gradcheck_suite(opt)};
  });
}

void pdan_gradcheck_destroy(pdan_gradcheck* report) { delete report; }
size_t pdan_gradcheck_count(const pdan_gradcheck* r) { return r ? r->entries.size() : 0; }

pdan_status pdan_gradcheck_entry(const pdan_gradcheck* r, size_t i, pdan_gradcheck_result* out) {
  return guarded([&] {
    need(r, "report");
    need(out, "output pointer");
    require(i < r->entries.size(), ErrorKind::kInvalidArgument, "gradcheck index out of range");
    const auto& e = r->entries[i];
    *out = {e.report.name.c_str(), e.report.passed ? 1 : 0, e.end_to_end ? 1 : 0, e.tol,
            e.report.max_rel_err, e.report.max_abs_err, e.report.checked, e.report.skipped};
  });
}

pdan_status pdan_match_nodes(const pdan_model* model, const char* source_dataset, const char* source_split,
                             size_t source_index, const char* target_dataset, const char* target_split,
                             size_t target_index, size_t top_m, pdan_matches** out) {
  return guarded([&] {
    need(model, "model");
    need(source_dataset, "source dataset");
    need(target_dataset, "target dataset");
    need(source_split, "source split");
    need(target_split, "target split");
    need(out, "output pointer");
    data::DatasetReader rs(training::manifest_path(source_dataset), source_split);
    data::DatasetReader rt(training::manifest_path(target_dataset), target_split);
    require(source_index < rs.size(), ErrorKind::kInvalidArgument, "source index out of range");
    require(target_index < rt.size(), ErrorKind::kInvalidArgument, "target index out of range");
    const geometry::PointCloud cs = rs.read(source_index, false);
    const geometry::PointCloud ct = rt.read(target_index, false);

    network::ModelParams<double> params = model->params;
    params.set_trainable({});
    tensor::Tape<double> tape;
    network::BoundParams<double> bp(tape, params);
    const network::ForwardSwitches sw{model->meta.adaptive_nodes};
    const geometry::PointCloud* ps[] = {&cs};
    const geometry::PointCloud* pt[] = {&ct};
    auto fs = network::extract(bp, std::span<const geometry::PointCloud* const>(ps), sw);
    auto ft = network::extract(bp, std::span<const geometry::PointCloud* const>(pt), sw);
    const auto matches = network::match_nodes(fs.node_features_attended.value(),
                                              ft.node_features_attended.value(), top_m);
    const auto& pos_s = fs.nodes[0].positions.value();
    const auto& pos_t = ft.nodes[0].positions.value();
    auto res = std::make_unique<pdan_matches>();
    for (const auto& m : matches) {
      pdan_node_match row{m.source, m.target, m.score, {}, {}};
      for (int d = 0; d < 3; ++d) {
        row.source_position[d] = pos_s[m.source * 3 + d];
        row.target_position[d] = pos_t[m.target * 3 + d];
      }
      res->rows.push_back(row);
    }
    *out = res.release();
  });
}

void pdan_matches_destroy(pdan_matches* matches) { delete matches; }
size_t pdan_matches_count(const pdan_matches* m) { return m ? m->rows.size() : 0; }

pdan_status pdan_matches_entry(const pdan_matches* m, size_t i, pdan_node_match* out) {
  return guarded([&] {
    need(m, "matches");
    need(out, "output pointer");
    require(i < m->rows.size(), ErrorKind::kInvalidArgument, "match index out of range");
    *out = m->rows[i];
  });
}

}  // extern "C"
