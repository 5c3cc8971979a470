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

// End-to-end experiments: flat key-value configuration, dataset loading,
// training runs with on-disk artifacts, ablation sweeps and dual-graph
// inspection.

#ifndef GRANDE_EXPERIMENT_H_
#define GRANDE_EXPERIMENT_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "grande/dataset.h"
#include "grande/dual_graph.h"
#include "grande/model.h"
#include "grande/sampler.h"
#include "grande/train.h"

namespace grande {

struct DatasetSpec {
  /// "synthetic", "bitcoin" or "edgelist".
  std::string format = "synthetic";
  std::filesystem::path path;
  std::size_t degree_cap = 99;
  SyntheticSpec synthetic;
  std::uint64_t synthetic_seed = 1;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  ModelConfig model;
  /// hops == 0 means "same as model.layers".
  SamplerConfig sampler;
  TrainConfig train;
  std::filesystem::path output_dir = "runs/default";
  std::string variant = "full";

  ExperimentConfig();
  /// Copy with defaults resolved (sampler hops, batch size, time width).
  ExperimentConfig resolved() const;
  void validate() const;
};

using KeyValues = std::map<std::string, std::string>;

/// "key = value" lines; blank lines and '#' comments are skipped.
KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(const KeyValues& kv, const std::filesystem::path& path);

/// Overrides config fields; unknown keys and unparsable values throw.
void apply_overrides(ExperimentConfig& config, const KeyValues& kv);
/// Every field, including defaults.
KeyValues to_key_values(const ExperimentConfig& config);
/// Stable hash of the resolved config, ignoring the output directory.
std::string config_hash(const ExperimentConfig& config);

DatasetBundle load_dataset(const DatasetSpec& spec);

/// Model settings of a named ablation variant: full, reduced,
/// no_causal_pruning, no_time_encoding, no_cross_query, line_graph.
ModelConfig variant_model(const ModelConfig& base, const std::string& variant);
const std::vector<std::string>& ablation_variants();

struct RunSummary {
  std::string variant;
  std::string config_hash;
  std::filesystem::path output_dir;
  TrainResult result;
  double seconds = 0.0;
};

using LogFn = std::function<void(const std::string&)>;

/// Trains and evaluates config.variant on the dataset, writing
/// metrics.json, pr_curve.csv, model.ckpt, config.txt and train_log.csv under
/// config.output_dir.
RunSummary run_experiment(const ExperimentConfig& config,
                          const DatasetBundle& data, const LogFn& log = {});

/// One run per ablation variant under output_dir/<variant>, plus an
/// ablation.csv summary.
std::vector<RunSummary> run_ablation(const ExperimentConfig& config,
                                     const DatasetBundle& data,
                                     const LogFn& log = {});

/// Test metrics of a saved run (its config.txt and model.ckpt) on the
/// dataset's test split.
MetricsReport evaluate_run(const std::filesystem::path& run_dir,
                           const DatasetBundle& data);

/// Flat JSON text of a metrics report plus extra fields.
std::string metrics_json(const MetricsReport& report,
                         const std::map<std::string, double>& extra = {});

/// Dual-graph statistics as flat JSON.
std::string dual_statistics_json(const DualStatistics& stats,
                                 const DirectedMultigraph& g);

}  // namespace grande

#endif  // GRANDE_EXPERIMENT_H_
