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

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "data/dataset.hpp"
#include "network/model.hpp"
#include "training/adam.hpp"
#include "training/config.hpp"

namespace pdan::training {

using geometry::PointCloud;

struct TrainRecord {
  std::size_t epoch = 0;
  double l_cls = 0.0;
  double l_dis = 0.0;
  double l_mmd = 0.0;
  double source_train_acc = 0.0;
  double target_test_acc = 0.0;
  double wall_seconds = 0.0;
};

/// Loss values of one paired batch.
struct StepStats {
  double l_cls = 0.0;
  double l_dis = 0.0;
  double l_mmd = 0.0;
  std::size_t source_correct = 0;
  std::size_t source_count = 0;
};

/// Features of one source batch and (optionally) one target batch, recorded
/// on a tape that the Step-2 update later differentiates.
template <class Real>
struct BatchPass {
  std::unique_ptr<tensor::Tape<Real>> tape;
  network::Features<Real> source;
  network::Features<Real> target;
  bool has_target = false;
  std::vector<int> labels;
};

/// Two-step adversarial trainer. Step 1 updates the classifiers on
/// L_cls - lambda * L_dis; Step 2 updates encoder, transform, gather,
/// attention and generator on L_cls + lambda * L_dis + beta * L_mmd.
template <class Real>
class Trainer {
 public:
  Trainer(const TrainConfig& config, std::size_t num_classes);
  Trainer(const TrainConfig& config, network::ModelParams<Real> params);

  const TrainConfig& config() const noexcept { return config_; }
  network::ModelParams<Real>& params() noexcept { return params_; }
  const network::ModelParams<Real>& params() const noexcept { return params_; }
  std::size_t epochs_done() const noexcept { return epoch_; }

  /// Two classifiers are trained only with global alignment on; otherwise
  /// classifier 2 stays frozen and predictions use classifier 1.
  bool dual_head() const noexcept { return config_.ablation.global_align; }
  network::ForwardSwitches switches() const { return {config_.ablation.adaptive_nodes}; }
  double effective_lambda() const;
  double effective_beta() const;
  std::vector<network::ParamGroup> classifier_groups() const;
  std::vector<network::ParamGroup> feature_groups() const;

  /// Forward pass of the feature extractor on both batches.
  BatchPass<Real> forward_batch(std::span<const PointCloud* const> source,
                                std::span<const PointCloud* const> target);
  /// Classifier update; leaves the pass usable for step2().
  StepStats step1(BatchPass<Real>& pass);
  /// Feature-extractor update; consumes the pass.
  StepStats step2(BatchPass<Real>& pass);
  /// step1 then step2 (plus generator_repeats - 1 further Step-2 updates
  /// on fresh forward passes).
  StepStats train_step(std::span<const PointCloud* const> source, std::span<const PointCloud* const> target);

  /// One pass over the source set, pairing batches with the target stream.
  /// The shorter stream wraps around. target_test_acc is left at 0.
  TrainRecord train_epoch(const data::LabeledSet& source, const data::UnlabeledSet& target);

 private:
  TrainConfig config_;
  network::ModelParams<Real> params_;
  Adam<Real> adam_;
  std::size_t epoch_ = 0;
  std::uint64_t mmd_draws_ = 0;

  tensor::Var<Real> mmd_sample(const tensor::Var<Real>& h, std::size_t batch);
};

/// Class probabilities for each cloud, N x K row-major; the two heads are
/// averaged when `dual_head`.
template <class Real>
std::vector<double> predict_probs(const network::ModelParams<Real>& params, std::span<const PointCloud> clouds,
                                  const network::ForwardSwitches& sw, bool dual_head, std::size_t batch_size,
                                  std::size_t threads = 1);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> row);

struct EvalResult {
  double accuracy = 0.0;
  std::vector<double> per_class;      // NaN for classes without samples
  std::vector<std::size_t> support;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<int> predictions;
};

EvalResult summarize(std::span<const int> labels, std::span<const int> predictions, std::size_t num_classes);

template <class Real>
EvalResult evaluate(const network::ModelParams<Real>& params, const data::LabeledSet& set,
                    const network::ForwardSwitches& sw, bool dual_head, std::size_t batch_size,
                    std::size_t threads = 1);

/// ceil(fraction * n), robust to the rounding of fraction * n.
std::size_t pseudo_label_count(std::size_t n, double fraction);

/// Indices of the `count` largest confidences, ties to the lowest index,
/// in descending confidence order.
std::vector<std::size_t> select_most_confident(std::span<const double> confidence, std::size_t count);

struct PseudoLabels {
  std::vector<std::size_t> indices;
  std::vector<int> labels;
  std::vector<double> confidence;  // per target sample
};

/// Scores every target sample by the max of the averaged class
/// probabilities and keeps the top pseudo_fraction of them.
template <class Real>
PseudoLabels make_pseudo_labels(const Trainer<Real>& trainer, const data::UnlabeledSet& target);

/// Finetunes on source plus pseudo-labeled target samples for
/// finetune_epochs with the unchanged two-step loop. `on_epoch` (may be
/// empty) sees each finetune record.
template <class Real>
PseudoLabels pseudo_label_finetune(Trainer<Real>& trainer, const data::LabeledSet& source,
                                   const data::UnlabeledSet& target,
                                   const std::function<void(TrainRecord&)>& on_epoch = {});

}  // namespace pdan::training
