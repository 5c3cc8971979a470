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

#include "grande/metrics.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>

#include "grande/tensor.h"

namespace grande {

namespace {

struct ClassCounts {
  std::size_t pos = 0;
  std::size_t neg = 0;
};

ClassCounts check(const char* op, const std::vector<double>& scores,
                  const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw Error(std::string(op) + ": " + std::to_string(scores.size()) +
                " scores but " + std::to_string(labels.size()) + " labels");
  }
  ClassCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw Error(std::string(op) + ": score " + std::to_string(i) +
                  " is not finite");
    }
    if (labels[i] == 1) {
      ++c.pos;
    } else if (labels[i] == 0) {
      ++c.neg;
    } else {
      throw Error(std::string(op) + ": label " + std::to_string(i) + " is " +
                  std::to_string(labels[i]) + ", expected 0 or 1");
    }
  }
  if (c.pos == 0 || c.neg == 0) {
    throw Error(std::string(op) + ": need both classes, got " +
                std::to_string(c.pos) + " positive and " +
                std::to_string(c.neg) + " negative");
  }
  return c;
}

// Confusion counts at each distinct threshold, from the highest score down:
// entry k predicts positive for every score >= the k-th largest distinct
// score.
struct Sweep {
  std::vector<double> threshold;
  std::vector<std::size_t> tp;
  std::vector<std::size_t> fp;
};

Sweep sweep(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  Sweep s;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (labels[order[i]] == 1 ? tp : fp) += 1;
    const bool last = i + 1 == order.size() ||
                      scores[order[i + 1]] != scores[order[i]];
    if (!last) continue;
    s.threshold.push_back(scores[order[i]]);
    s.tp.push_back(tp);
    s.fp.push_back(fp);
  }
  return s;
}

double f1_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  if (tp == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) /
         static_cast<double>(2 * tp + fp + fn);
}

}  // namespace

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  const ClassCounts c = check("auc", scores, labels);
  // Mann-Whitney U from tie-averaged ranks, kept in half units so the sum is
  // an exact integer.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::size_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1..j average to (i + 1 + j) / 2.
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) twice_rank_sum += i + 1 + j;
    }
    i = j;
  }
  const std::size_t twice_u = twice_rank_sum - c.pos * (c.pos + 1);
  return static_cast<double>(twice_u) /
         (2.0 * static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

double ks(const std::vector<double>& scores, const std::vector<int>& labels) {
  const ClassCounts c = check("ks", scores, labels);
  const Sweep s = sweep(scores, labels);
  // |TPR - FPR| = |tp * neg - fp * pos| / (pos * neg); the integer
  // numerator keeps the result a single rounding of the exact ratio.
  std::size_t best = 0;
  for (std::size_t k = 0; k < s.threshold.size(); ++k) {
    const std::size_t a = s.tp[k] * c.neg, b = s.fp[k] * c.pos;
    best = std::max(best, a > b ? a - b : b - a);
  }
  return static_cast<double>(best) /
         (static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

double f1(const std::vector<double>& scores, const std::vector<int>& labels,
          double threshold) {
  const ClassCounts c = check("f1", scores, labels);
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] < threshold) continue;
    (labels[i] == 1 ? tp : fp) += 1;
  }
  return f1_from_counts(tp, fp, c.pos - tp);
}

BestF1 best_f1(const std::vector<double>& scores,
               const std::vector<int>& labels) {
  const ClassCounts c = check("best_f1", scores, labels);
  const Sweep s = sweep(scores, labels);
  BestF1 best;
  for (std::size_t k = 0; k < s.threshold.size(); ++k) {
    const double v = f1_from_counts(s.tp[k], s.fp[k], c.pos - s.tp[k]);
    // Thresholds descend, so >= keeps the lowest maximizer.
    if (k == 0 || v >= best.f1) best = {v, s.threshold[k]};
  }
  return best;
}

std::vector<double> default_precision_grid() {
  std::vector<double> grid;
  for (int i = 0; i < 12; ++i) grid.push_back((700.0 + 25.0 * i) / 1000.0);
  return grid;
}

std::vector<std::pair<double, double>> pr_curve(
    const std::vector<double>& scores, const std::vector<int>& labels,
    const std::vector<double>& precision_grid) {
  const ClassCounts c = check("pr_curve", scores, labels);
  const Sweep s = sweep(scores, labels);
  std::vector<std::pair<double, double>> out;
  for (double level : precision_grid) {
    double recall = 0.0;
    for (std::size_t k = 0; k < s.threshold.size(); ++k) {
      const double precision = static_cast<double>(s.tp[k]) /
                               static_cast<double>(s.tp[k] + s.fp[k]);
      if (precision >= level) {
        recall = std::max(recall, static_cast<double>(s.tp[k]) /
                                      static_cast<double>(c.pos));
      }
    }
    out.emplace_back(level, recall);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  return out;
}

MetricsReport evaluate_scores(const std::vector<double>& scores,
                              const std::vector<int>& labels) {
  const ClassCounts c = check("evaluate_scores", scores, labels);
  MetricsReport r;
  r.auc = auc(scores, labels);
  r.ks = ks(scores, labels);
  r.f1_at_half = f1(scores, labels, 0.5);
  const BestF1 best = best_f1(scores, labels);
  r.f1_best = best.f1;
  r.f1_best_threshold = best.threshold;
  r.positives = c.pos;
  r.negatives = c.neg;
  r.pr_curve = pr_curve(scores, labels);
  return r;
}

void write_pr_curve_csv(const MetricsReport& report,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  out << "precision,recall\n";
  for (const auto& [p, r] : report.pr_curve) out << p << "," << r << "\n";
  if (!out) throw Error("error writing " + path.string());
}

}  // namespace grande
