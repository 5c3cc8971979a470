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

#include "grande/train.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace grande {

void TrainConfig::validate() const {
  if (batch_size < 1) throw Error("batch_size must be at least 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error("learning_rate must be positive");
  }
  if (!(l2 >= 0.0) || !std::isfinite(l2)) {
    throw Error("l2 must be non-negative");
  }
  if (eval_every < 1) throw Error("eval_every must be at least 1");
}

Var training_loss(Tape& tape, Var probabilities,
                  const std::vector<double>& labels,
                  const std::vector<double>& mask, ParameterStore& params,
                  double l2) {
  Var loss = binary_cross_entropy(probabilities, labels, mask);
  if (l2 == 0.0) return loss;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params.at(i);
    if (!p.decays()) continue;
    loss = add(loss, scale(sum_squares(tape.param(p)), l2));
  }
  return loss;
}

ScoredTargets score_targets(GrandeModel& model, const DirectedMultigraph& g,
                            const std::vector<EdgeId>& targets,
                            const SamplerConfig& sampler) {
  ScoredTargets out;
  BatchStream stream(g, targets, sampler, model.config());
  for (std::size_t b = 0; b < stream.num_batches(); ++b) {
    const SubgraphBatch batch = stream.batch(b);
    const std::vector<double> p = model.predict(batch.input);
    for (std::size_t i = 0; i < p.size(); ++i) {
      out.scores.push_back(p[i]);
      if (batch.mask[i] == 0.0) continue;
      out.labeled_scores.push_back(p[i]);
      out.labels.push_back(static_cast<int>(batch.labels[i]));
    }
  }
  return out;
}

TrainResult train(GrandeModel& model, const DirectedMultigraph& g,
                  const Splits& splits, SamplerConfig sampler,
                  const TrainConfig& config, const StepCallback& on_step) {
  config.validate();
  sampler.batch_size = config.batch_size;
  ParameterStore& params = model.parameters();
  AdamState adam(AdamOptions{.learning_rate = config.learning_rate});
  TrainResult result;
  std::vector<Tensor> best = params.snapshot();
  const bool select = !splits.validation.empty();

  auto evaluate = [&](std::size_t step) {
    if (!select) return;
    const ScoredTargets s =
        score_targets(model, g, splits.validation, sampler);
    const double v = auc(s.labeled_scores, s.labels);
    if (result.evaluations.empty() || v > result.best_validation_auc) {
      result.best_validation_auc = v;
      result.best_step = step;
      best = params.snapshot();
    }
    result.evaluations.push_back({step, v, result.best_validation_auc});
  };

  evaluate(0);
  std::mt19937_64 rng(config.seed);
  std::vector<EdgeId> order = splits.train;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs && !order.empty();
       ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    BatchStream stream(g, order, sampler, model.config());
    for (std::size_t b = 0; b < stream.num_batches(); ++b) {
      const SubgraphBatch batch = stream.batch(b);
      if (std::none_of(batch.mask.begin(), batch.mask.end(),
                       [](double m) { return m != 0.0; })) {
        continue;
      }
      Tape tape;
      ForwardState state = model.forward(tape, batch.input);
      Var loss = training_loss(tape, state.probabilities, batch.labels,
                               batch.mask, params, config.l2);
      const double value = loss.value().item();
      if (!std::isfinite(value)) {
        throw Error("non-finite training loss " + std::to_string(value) +
                    " at epoch " + std::to_string(epoch) + ", step " +
                    std::to_string(step + 1) + ", batch " + std::to_string(b));
      }
      params.zero_grad();
      tape.backward(loss);
      tape.flush_parameter_gradients();
      adam.step(params);
      ++step;
      result.losses.push_back(value);
      if (on_step) on_step(step, value);
      if (step % config.eval_every == 0) evaluate(step);
    }
  }
  result.steps = step;
  if (step > 0 && step % config.eval_every != 0) evaluate(step);
  if (select) params.restore(best);

  if (!splits.test.empty()) {
    const ScoredTargets s = score_targets(model, g, splits.test, sampler);
    result.test = evaluate_scores(s.labeled_scores, s.labels);
  }
  return result;
}

}  // namespace grande
