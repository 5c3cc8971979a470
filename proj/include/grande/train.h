/* Copyright 2026 The GRANDE Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// Training objective, Adam loop with validation-AUC model selection, and
// scoring of target edges.

#ifndef GRANDE_TRAIN_H_
#define GRANDE_TRAIN_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "grande/autodiff.h"
#include "grande/metrics.h"
#include "grande/model.h"
#include "grande/parameters.h"
#include "grande/sampler.h"

namespace grande {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 128;
  double learning_rate = 1e-4;
  /// Coefficient of the squared norm of every weight matrix.
  double l2 = 1e-4;
  std::size_t eval_every = 100;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Mean BCE over labeled targets plus l2 * sum of squared weight entries.
/// Biases, LayerNorm parameters and frequencies are not decayed.
Var training_loss(Tape& tape, Var probabilities,
                  const std::vector<double>& labels,
                  const std::vector<double>& mask, ParameterStore& params,
                  double l2);

struct ScoredTargets {
  std::vector<double> scores;
  /// Labeled subset, aligned.
  std::vector<double> labeled_scores;
  std::vector<int> labels;
};

/// Scores targets batch by batch with the current parameters.
ScoredTargets score_targets(GrandeModel& model, const DirectedMultigraph& g,
                            const std::vector<EdgeId>& targets,
                            const SamplerConfig& sampler);

struct EvalPoint {
  std::size_t step = 0;
  double validation_auc = 0.0;
  /// Best validation AUC so far, including this point.
  double best_auc = 0.0;
};

struct TrainResult {
  std::size_t steps = 0;
  /// Loss of each optimizer step.
  std::vector<double> losses;
  std::vector<EvalPoint> evaluations;
  std::size_t best_step = 0;
  double best_validation_auc = 0.0;
  /// Test metrics of the selected parameters; absent without test targets.
  std::optional<MetricsReport> test;
};

struct Splits {
  std::vector<EdgeId> train;
  std::vector<EdgeId> validation;
  std::vector<EdgeId> test;
};

/// Optional progress hook, called after every optimizer step.
using StepCallback = std::function<void(std::size_t step, double loss)>;

/// Runs epochs x ceil(|train| / batch) Adam steps over shuffled training
/// targets. Validation AUC is computed before the first step, every
/// eval_every steps and after the last step; the parameters are snapshotted
/// whenever it improves and restored at the end. Without validation targets
/// the final parameters are kept. Throws on a non-finite loss.
TrainResult train(GrandeModel& model, const DirectedMultigraph& g,
                  const Splits& splits, SamplerConfig sampler,
                  const TrainConfig& config,
                  const StepCallback& on_step = nullptr);

}  // namespace grande

#endif  // GRANDE_TRAIN_H_
