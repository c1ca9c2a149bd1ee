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

#include "training/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <thread>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/rng.hpp"
#include "losses/losses.hpp"

namespace pdan::training {
namespace {

using network::ParamGroup;
using tensor::Tape;
using tensor::Tensor;
using tensor::Var;

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[static_cast<std::size_t>(rng.below(i))]);
  return order;
}

template <class Real>
double scalar_of(const Var<Real>& v) {
  return static_cast<double>(v.value().item());
}

void require_finite(double v, const char* what) {
  require(std::isfinite(v), ErrorKind::kNumerical, std::string("non-finite ") + what + " loss; aborting the run");
}

template <class Real>
Var<Real> pool_for_mmd(const Var<Real>& h, std::size_t batch, MmdPooling pooling) {
  if (pooling == MmdPooling::kNode) return h;
  const std::size_t rows = h.shape()[0], width = h.shape()[1];
  return tensor::reduce(tensor::reshape(h, tensor::Shape{batch, rows / batch, width}), 1, tensor::ReduceKind::kMean);
}

/// Counts rows of (p1 [+ p2]) whose argmax matches the label.
template <class Real>
std::size_t count_correct(const Tensor<Real>& p1, const Tensor<Real>* p2, std::span<const int> labels) {
  const std::size_t k = p1.cols();
  std::size_t correct = 0;
  std::vector<double> row(k);
  for (std::size_t b = 0; b < labels.size(); ++b) {
    for (std::size_t j = 0; j < k; ++j) {
      row[j] = static_cast<double>(p1.at(b, j));
      if (p2) row[j] = 0.5 * (row[j] + static_cast<double>(p2->at(b, j)));
    }
    correct += static_cast<int>(argmax(row)) == labels[b] ? 1 : 0;
  }
  return correct;
}

PointCloud augment_cloud(const PointCloud& in, Rng& rng) {
  PointCloud out = in;
  const double a = 2 * std::numbers::pi * rng.uniform();
  const double c = std::cos(a), s = std::sin(a);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double* p = out.xyz.data() + 3 * i;
    const double x = c * p[0] - s * p[1];
    const double y = s * p[0] + c * p[1];
    p[0] = x + 0.01 * rng.normal();
    p[1] = y + 0.01 * rng.normal();
    p[2] += 0.01 * rng.normal();
  }
  auto n = geometry::normalize(out);
  n.label = in.label;
  n.domain = in.domain;
  return n;
}

}  // namespace

template <class Real>
Trainer<Real>::Trainer(const TrainConfig& config, std::size_t num_classes)
    : Trainer(config, network::ModelParams<Real>::init(config.model_config(num_classes), config.seed)) {}

template <class Real>
Trainer<Real>::Trainer(const TrainConfig& config, network::ModelParams<Real> params)
    : config_(config), params_(std::move(params)), adam_(params_) {
  config_.validate();
}

template <class Real>
double Trainer<Real>::effective_lambda() const {
  return config_.ablation.global_align ? config_.weights.lambda : 0.0;
}

template <class Real>
double Trainer<Real>::effective_beta() const {
  return config_.ablation.local_align ? config_.weights.beta : 0.0;
}

template <class Real>
std::vector<ParamGroup> Trainer<Real>::classifier_groups() const {
  if (dual_head()) return {ParamGroup::kClassifier1, ParamGroup::kClassifier2};
  return {ParamGroup::kClassifier1};
}

template <class Real>
std::vector<ParamGroup> Trainer<Real>::feature_groups() const {
  if (config_.ablation.adaptive_nodes) {
    return {ParamGroup::kEncoder, ParamGroup::kTransform, ParamGroup::kGather, ParamGroup::kAttention,
            ParamGroup::kGenerator};
  }
  return {ParamGroup::kEncoder, ParamGroup::kGather, ParamGroup::kGenerator};
}

template <class Real>
BatchPass<Real> Trainer<Real>::forward_batch(std::span<const PointCloud* const> source,
                                             std::span<const PointCloud* const> target) {
  require(!source.empty(), ErrorKind::kInvalidArgument, "train: empty source batch");
  BatchPass<Real> pass;
  pass.tape = std::make_unique<Tape<Real>>();
  for (const auto* c : source) {
    require(c->label.has_value(), ErrorKind::kInvalidArgument, "train: source cloud without a label");
    require(static_cast<std::size_t>(*c->label) < params_.config().num_classes, ErrorKind::kInvalidArgument,
            "train: label " + std::to_string(*c->label) + " out of range");
    pass.labels.push_back(*c->label);
  }
  const std::vector<ParamGroup> groups = feature_groups();
  params_.set_trainable(groups);
  network::BoundParams<Real> bp(*pass.tape, params_);
  pass.source = network::extract(bp, source, switches());
  const bool needs_target = (dual_head() && effective_lambda() > 0.0) || effective_beta() > 0.0;
  if (needs_target) {
    require(!target.empty(), ErrorKind::kInvalidArgument, "train: empty target batch");
    pass.target = network::extract(bp, target, switches());
    pass.has_target = true;
  }
  return pass;
}

template <class Real>
StepStats Trainer<Real>::step1(BatchPass<Real>& pass) {
  Tape<Real> tape;
  const std::vector<ParamGroup> groups = classifier_groups();
  params_.set_trainable(groups);
  network::BoundParams<Real> bp(tape, params_);
  const losses::LossWeights w{effective_lambda(), effective_beta()};

  StepStats st;
  auto fs = tape.constant(pass.source.global_feature.value());
  auto p1 = tensor::softmax(network::classify(bp, fs, 1));
  Var<Real> l_cls = losses::cross_entropy(p1, std::span<const int>(pass.labels));
  if (dual_head()) {
    auto p2 = tensor::softmax(network::classify(bp, fs, 2));
    l_cls = tensor::add(l_cls, losses::cross_entropy(p2, std::span<const int>(pass.labels)));
    st.source_correct = count_correct(p1.value(), &p2.value(), pass.labels);
  } else {
    st.source_correct = count_correct<Real>(p1.value(), nullptr, pass.labels);
  }
  st.source_count = pass.labels.size();
  st.l_cls = scalar_of(l_cls);

  Var<Real> objective = l_cls;
  if (dual_head() && pass.has_target && w.lambda > 0.0) {
    auto ft = tape.constant(pass.target.global_feature.value());
    auto q1 = tensor::softmax(network::classify(bp, ft, 1));
    auto q2 = tensor::softmax(network::classify(bp, ft, 2));
    auto l_dis = losses::discrepancy(q1, q2);
    st.l_dis = scalar_of(l_dis);
    objective = losses::step1_objective(l_cls, l_dis, w);
  }
  require_finite(scalar_of(objective), "classifier-step");
  params_.zero_grad();
  tape.backward(objective);
  adam_.step(params_, groups, config_.learning_rate, config_.weight_decay);
  return st;
}

template <class Real>
StepStats Trainer<Real>::step2(BatchPass<Real>& pass) {
  Tape<Real>& tape = *pass.tape;
  const std::vector<ParamGroup> groups = feature_groups();
  params_.set_trainable(groups);
  // Classifiers are re-read here, so Step 2 sees the Step-1 update.
  network::BoundParams<Real> bp(tape, params_);
  const losses::LossWeights w{effective_lambda(), effective_beta()};

  StepStats st;
  const auto& fs = pass.source.global_feature;
  auto p1 = tensor::softmax(network::classify(bp, fs, 1));
  Var<Real> l_cls = losses::cross_entropy(p1, std::span<const int>(pass.labels));
  if (dual_head()) {
    auto p2 = tensor::softmax(network::classify(bp, fs, 2));
    l_cls = tensor::add(l_cls, losses::cross_entropy(p2, std::span<const int>(pass.labels)));
  }
  auto zero = tape.constant(Tensor<Real>::scalar(Real(0)));
  Var<Real> l_dis = zero, l_mmd = zero;
  if (dual_head() && pass.has_target && w.lambda > 0.0) {
    const auto& ft = pass.target.global_feature;
    l_dis = losses::discrepancy(tensor::softmax(network::classify(bp, ft, 1)),
                                tensor::softmax(network::classify(bp, ft, 2)));
  }
  if (pass.has_target && w.beta > 0.0) {
    auto hs = mmd_sample(pass.source.node_features_attended, pass.source.batch);
    auto ht = mmd_sample(pass.target.node_features_attended, pass.target.batch);
    l_mmd = losses::mmd_rbf(hs, ht, config_.kernel);
  }
  st.l_cls = scalar_of(l_cls);
  st.l_dis = scalar_of(l_dis);
  st.l_mmd = scalar_of(l_mmd);
  auto objective = losses::step2_objective(l_cls, l_dis, l_mmd, w);
  require_finite(scalar_of(objective), "feature-step");
  params_.zero_grad();
  tape.backward(objective);
  adam_.step(params_, groups, config_.learning_rate, config_.weight_decay);
  return st;
}

template <class Real>
Var<Real> Trainer<Real>::mmd_sample(const Var<Real>& h, std::size_t batch) {
  auto pooled = pool_for_mmd(h, batch, config_.mmd_pooling);
  const std::size_t rows = pooled.shape()[0], keep = config_.mmd_rows;
  if (config_.mmd_pooling != MmdPooling::kNode || keep == 0 || rows <= keep) return pooled;
  std::vector<std::uint32_t> idx(rows);
  std::iota(idx.begin(), idx.end(), 0u);
  Rng rng(derive_seed(config_.seed, fnv1a64("mmd.rows"), mmd_draws_++));
  for (std::size_t i = 0; i < keep; ++i) std::swap(idx[i], idx[i + rng.below(rows - i)]);
  idx.resize(keep);
  std::sort(idx.begin(), idx.end());
  return tensor::gather_rows(pooled, std::span<const std::uint32_t>(idx));
}

template <class Real>
StepStats Trainer<Real>::train_step(std::span<const PointCloud* const> source,
                                    std::span<const PointCloud* const> target) {
  auto pass = forward_batch(source, target);
  const StepStats s1 = step1(pass);
  StepStats s2 = step2(pass);
  for (std::size_t r = 1; r < config_.generator_repeats; ++r) {
    auto again = forward_batch(source, target);
    s2 = step2(again);
  }
  s2.source_correct = s1.source_correct;
  s2.source_count = s1.source_count;
  return s2;
}

template <class Real>
TrainRecord Trainer<Real>::train_epoch(const data::LabeledSet& source, const data::UnlabeledSet& target) {
  require(source.size() > 0, ErrorKind::kInvalidArgument, "train: empty source loader");
  const bool needs_target = (dual_head() && effective_lambda() > 0.0) || effective_beta() > 0.0;
  require(!needs_target || target.size() > 0, ErrorKind::kInvalidArgument, "train: empty target loader");
  const auto t0 = std::chrono::steady_clock::now();
  ++epoch_;
  const std::size_t bs = config_.batch_size;
  const auto order_s = shuffled(source.size(), derive_seed(config_.seed, fnv1a64("shuffle.source"), epoch_));
  const auto order_t = shuffled(target.size(), derive_seed(config_.seed, fnv1a64("shuffle.target"), epoch_));
  const std::size_t nb_s = (source.size() + bs - 1) / bs;
  const std::size_t nb_t = needs_target ? (target.size() + bs - 1) / bs : 0;
  const std::size_t batches = std::max(nb_s, nb_t);
  Rng aug(derive_seed(config_.seed, fnv1a64("augment"), epoch_));

  TrainRecord rec;
  rec.epoch = epoch_;
  std::size_t correct = 0, seen = 0;
  std::vector<PointCloud> aug_s, aug_t;
  for (std::size_t b = 0; b < batches; ++b) {
    std::vector<const PointCloud*> src, tgt;
    const std::size_t bi = b % nb_s;
    for (std::size_t i = bi * bs; i < std::min(source.size(), (bi + 1) * bs); ++i)
      src.push_back(&source.clouds[order_s[i]]);
    if (needs_target) {
      const std::size_t bt = b % nb_t;
      for (std::size_t i = bt * bs; i < std::min(target.size(), (bt + 1) * bs); ++i)
        tgt.push_back(&target[order_t[i]]);
    }
    if (config_.augment) {
      aug_s.clear();
      aug_t.clear();
      for (auto* c : src) aug_s.push_back(augment_cloud(*c, aug));
      for (auto* c : tgt) aug_t.push_back(augment_cloud(*c, aug));
      for (std::size_t i = 0; i < src.size(); ++i) src[i] = &aug_s[i];
      for (std::size_t i = 0; i < tgt.size(); ++i) tgt[i] = &aug_t[i];
    }
    const StepStats st = train_step(src, tgt);
    rec.l_cls += st.l_cls;
    rec.l_dis += st.l_dis;
    rec.l_mmd += st.l_mmd;
    correct += st.source_correct;
    seen += st.source_count;
  }
  const double nb = static_cast<double>(batches);
  rec.l_cls /= nb;
  rec.l_dis /= nb;
  rec.l_mmd /= nb;
  rec.source_train_acc = static_cast<double>(correct) / static_cast<double>(seen);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < row.size(); ++j)
    if (row[j] > row[best]) best = j;
  return best;
}

template <class Real>
std::vector<double> predict_probs(const network::ModelParams<Real>& params, std::span<const PointCloud> clouds,
                                  const network::ForwardSwitches& sw, bool dual_head, std::size_t batch_size,
                                  std::size_t threads) {
  require(batch_size >= 1, ErrorKind::kInvalidArgument, "predict: batch size must be >= 1");
  network::ModelParams<Real> local = params;
  local.set_trainable(std::vector<ParamGroup>{});
  const std::size_t k = local.config().num_classes;
  std::vector<double> probs(clouds.size() * k);
  const std::size_t batches = (clouds.size() + batch_size - 1) / batch_size;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  auto work = [&] {
    try {
      for (std::size_t b = next++; b < batches && !failed; b = next++) {
        const std::size_t lo = b * batch_size, hi = std::min(clouds.size(), lo + batch_size);
        std::vector<const PointCloud*> ptrs;
        for (std::size_t i = lo; i < hi; ++i) ptrs.push_back(&clouds[i]);
        Tape<Real> tape;
        network::BoundParams<Real> bp(tape, local);
        auto f = network::extract(bp, std::span<const PointCloud* const>(ptrs), sw);
        auto p1 = tensor::softmax(network::classify(bp, f.global_feature, 1));
        Var<Real> p2;
        if (dual_head) p2 = tensor::softmax(network::classify(bp, f.global_feature, 2));
        for (std::size_t i = lo; i < hi; ++i) {
          for (std::size_t j = 0; j < k; ++j) {
            double v = static_cast<double>(p1.value().at(i - lo, j));
            if (dual_head) v = 0.5 * (v + static_cast<double>(p2.value().at(i - lo, j)));
            probs[i * k + j] = v;
          }
        }
      }
    } catch (...) {
      if (!failed.exchange(true)) error = std::current_exception();
    }
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, batches));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return probs;
}

EvalResult summarize(std::span<const int> labels, std::span<const int> predictions, std::size_t num_classes) {
  require(labels.size() == predictions.size(), ErrorKind::kDimension, "evaluate: label/prediction count mismatch");
  require(!labels.empty(), ErrorKind::kInvalidArgument, "evaluate: empty set");
  EvalResult r;
  r.confusion.assign(num_classes, std::vector<std::size_t>(num_classes, 0));
  r.support.assign(num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    const auto p = static_cast<std::size_t>(predictions[i]);
    require(y < num_classes && p < num_classes, ErrorKind::kInvalidArgument, "evaluate: class index out of range");
    ++r.confusion[y][p];
    ++r.support[y];
  }
  std::size_t trace = 0;
  r.per_class.assign(num_classes, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < num_classes; ++c) {
    trace += r.confusion[c][c];
    if (r.support[c] > 0)
      r.per_class[c] = static_cast<double>(r.confusion[c][c]) / static_cast<double>(r.support[c]);
  }
  r.accuracy = static_cast<double>(trace) / static_cast<double>(labels.size());
  r.predictions.assign(predictions.begin(), predictions.end());
  return r;
}

template <class Real>
EvalResult evaluate(const network::ModelParams<Real>& params, const data::LabeledSet& set,
                    const network::ForwardSwitches& sw, bool dual_head, std::size_t batch_size,
                    std::size_t threads) {
  require(set.size() > 0, ErrorKind::kInvalidArgument, "evaluate: empty set");
  std::vector<int> labels;
  for (const auto& c : set.clouds) {
    require(c.label.has_value(), ErrorKind::kInvalidArgument, "evaluate: cloud without a label");
    labels.push_back(*c.label);
  }
  const std::size_t k = params.config().num_classes;
  const auto probs = predict_probs(params, std::span<const PointCloud>(set.clouds), sw, dual_head, batch_size,
                                   threads);
  std::vector<int> preds(set.size());
  for (std::size_t i = 0; i < set.size(); ++i)
    preds[i] = static_cast<int>(argmax(std::span<const double>(probs).subspan(i * k, k)));
  return summarize(labels, preds, k);
}

std::size_t pseudo_label_count(std::size_t n, double fraction) {
  const double c = fraction * static_cast<double>(n);
  const double k = std::ceil(c - 1e-9 * std::max(1.0, c));
  return std::min(n, static_cast<std::size_t>(std::max(0.0, k)));
}

std::vector<std::size_t> select_most_confident(std::span<const double> confidence, std::size_t count) {
  require(count <= confidence.size(), ErrorKind::kInvalidArgument, "pseudo-label count exceeds the target set");
  std::vector<std::size_t> idx(confidence.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (confidence[a] != confidence[b]) return confidence[a] > confidence[b];
                      return a < b;
                    });
  idx.resize(count);
  return idx;
}

template <class Real>
PseudoLabels make_pseudo_labels(const Trainer<Real>& trainer, const data::UnlabeledSet& target) {
  const auto& cfg = trainer.config();
  const std::size_t n = target.size();
  const std::size_t count = pseudo_label_count(n, cfg.pseudo_fraction);
  require(count > 0, ErrorKind::kInvalidArgument, "pseudo-label selection is empty (target set has " +
                                                      std::to_string(n) + " samples)");
  const std::size_t k = trainer.params().config().num_classes;
  const auto probs = predict_probs(trainer.params(), target.clouds(), trainer.switches(), trainer.dual_head(),
                                   cfg.batch_size, cfg.effective_threads());
  PseudoLabels pl;
  pl.confidence.resize(n);
  std::vector<int> best(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = std::span<const double>(probs).subspan(i * k, k);
    best[i] = static_cast<int>(argmax(row));
    pl.confidence[i] = row[static_cast<std::size_t>(best[i])];
  }
  pl.indices = select_most_confident(pl.confidence, count);
  for (auto i : pl.indices) pl.labels.push_back(best[i]);
  return pl;
}

template <class Real>
PseudoLabels pseudo_label_finetune(Trainer<Real>& trainer, const data::LabeledSet& source,
                                   const data::UnlabeledSet& target,
                                   const std::function<void(TrainRecord&)>& on_epoch) {
  PseudoLabels pl = make_pseudo_labels(trainer, target);
  data::LabeledSet combined = source;
  for (std::size_t j = 0; j < pl.indices.size(); ++j) {
    PointCloud c = target[pl.indices[j]];
    c.label = pl.labels[j];
    combined.clouds.push_back(std::move(c));
  }
  for (std::size_t e = 0; e < trainer.config().finetune_epochs; ++e) {
    TrainRecord rec = trainer.train_epoch(combined, target);
    if (on_epoch) on_epoch(rec);
  }
  return pl;
}

#define PDAN_INSTANTIATE_TRAINING(R)                                                                      \
  template class Trainer<R>;                                                                              \
  template std::vector<double> predict_probs(const network::ModelParams<R>&, std::span<const PointCloud>, \
                                             const network::ForwardSwitches&, bool, std::size_t,          \
                                             std::size_t);                                                \
  template EvalResult evaluate(const network::ModelParams<R>&, const data::LabeledSet&,                   \
                               const network::ForwardSwitches&, bool, std::size_t, std::size_t);          \
  template PseudoLabels make_pseudo_labels(const Trainer<R>&, const data::UnlabeledSet&);                 \
  template PseudoLabels pseudo_label_finetune(Trainer<R>&, const data::LabeledSet&,                       \
                                              const data::UnlabeledSet&,                                  \
                                              const std::function<void(TrainRecord&)>&);

PDAN_INSTANTIATE_TRAINING(float)
PDAN_INSTANTIATE_TRAINING(double)

}  // namespace pdan::training
