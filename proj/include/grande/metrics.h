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

// Binary classifier metrics. Every function takes parallel score and 0/1
// label vectors and needs at least one example of each class. A score at or
// above a threshold counts as a positive prediction.

#ifndef GRANDE_METRICS_H_
#define GRANDE_METRICS_H_

#include <filesystem>
#include <utility>
#include <vector>

namespace grande {

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Max over thresholds of |TPR - FPR|.
double ks(const std::vector<double>& scores, const std::vector<int>& labels);

/// F1 at a threshold; 0 when there are no true positives.
double f1(const std::vector<double>& scores, const std::vector<int>& labels,
          double threshold);

struct BestF1 {
  double f1 = 0.0;
  double threshold = 0.0;
};

/// Best F1 over thresholds drawn from the scores themselves. The lowest
/// maximizing threshold wins.
BestF1 best_f1(const std::vector<double>& scores,
               const std::vector<int>& labels);

/// Precision levels 0.700, 0.725, ..., 0.975.
std::vector<double> default_precision_grid();

/// For each level, the largest recall of any score threshold whose precision
/// is at least that level (0 if none).
std::vector<std::pair<double, double>> pr_curve(
    const std::vector<double>& scores, const std::vector<int>& labels,
    const std::vector<double>& precision_grid = default_precision_grid());

struct MetricsReport {
  double auc = 0.0;
  double ks = 0.0;
  double f1_at_half = 0.0;
  double f1_best = 0.0;
  double f1_best_threshold = 0.0;
  std::size_t positives = 0;
  std::size_t negatives = 0;
  /// (precision level, recall), levels descending.
  std::vector<std::pair<double, double>> pr_curve;
};

MetricsReport evaluate_scores(const std::vector<double>& scores,
                              const std::vector<int>& labels);

/// "precision,recall" header then one row per level.
void write_pr_curve_csv(const MetricsReport& report,
                        const std::filesystem::path& path);

}  // namespace grande

#endif  // GRANDE_METRICS_H_
