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

// Command-line driver. Every config key is also a flag (--model.hidden 64);
// flags override values read with --config.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>

#include "grande/dual_graph.h"
#include "grande/experiment.h"
#include "grande/graph.h"

namespace {

using grande::ExperimentConfig;
using grande::KeyValues;

// Config-key flags attached to one subcommand.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;

  void attach(CLI::App* app, bool with_config = true) {
    if (with_config) {
      app->add_option("--config", config_path, "key = value config file")
          ->check(CLI::ExistingFile);
    }
    for (const auto& [key, def] : grande::to_key_values(ExperimentConfig())) {
      options[key] = app->add_option("--" + key, values[key],
                                     "default: " + (def.empty() ? "''" : def));
    }
  }

  ExperimentConfig build() const {
    ExperimentConfig c;
    if (!config_path.empty()) {
      grande::apply_overrides(c, grande::read_key_values(config_path));
    }
    KeyValues flags;
    for (const auto& [key, opt] : options) {
      if (opt->count() > 0) flags[key] = values.at(key);
    }
    grande::apply_overrides(c, flags);
    c.validate();
    return c;
  }
};

void log_line(const std::string& s) { std::cerr << s << std::endl; }

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw grande::Error("cannot write " + out_path);
  out << text;
}

std::string load_stats(const grande::DatasetBundle& b) {
  const auto& g = b.graph;
  std::size_t pos = 0, neg = 0;
  for (const auto& l : g.labels()) {
    if (!l) continue;
    (*l == 1 ? pos : neg) += 1;
  }
  nlohmann::ordered_json j;
  j["name"] = b.name;
  j["nodes"] = g.num_nodes();
  j["edges"] = g.num_edges();
  j["positive"] = pos;
  j["negative"] = neg;
  j["unlabeled"] = g.num_edges() - pos - neg;
  j["node_feature_width"] = g.node_feature_width();
  j["edge_feature_width"] = g.edge_feature_width();
  j["train"] = b.splits.train.size();
  j["validation"] = b.splits.validation.size();
  j["test"] = b.splits.test.size();
  return j.dump(2) + "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Directional dual-graph transformer for edge classification"};
  app.require_subcommand(1);

  auto* stats_cmd = app.add_subcommand("load-stats", "Dataset summary as JSON");
  ConfigFlags stats_flags;
  stats_flags.attach(stats_cmd);

  auto* dual_cmd =
      app.add_subcommand("inspect-dual", "Dual-graph statistics as JSON");
  ConfigFlags dual_flags;
  dual_flags.attach(dual_cmd);
  std::string dual_out, dual_edges_out;
  dual_cmd->add_option("--out", dual_out, "write the report here");
  dual_cmd->add_option("--dump-edges", dual_edges_out,
                       "write the (unpruned) dual edge list here");

  auto* train_cmd = app.add_subcommand("train", "Train and evaluate one run");
  ConfigFlags train_flags;
  train_flags.attach(train_cmd);

  auto* eval_cmd =
      app.add_subcommand("evaluate", "Re-score a saved run on the test split");
  // The saved config.txt is authoritative; only dataset.* flags apply.
  ConfigFlags eval_flags;
  eval_flags.attach(eval_cmd, false);
  std::string run_dir, eval_out;
  eval_cmd->add_option("--run-dir", run_dir, "directory written by train")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--out", eval_out, "write metrics JSON here");

  auto* ablate_cmd =
      app.add_subcommand("ablate", "Train every ablation variant");
  ConfigFlags ablate_flags;
  ablate_flags.attach(ablate_cmd);

  auto* synth_cmd =
      app.add_subcommand("synth", "Write a synthetic dataset as an edge list");
  ConfigFlags synth_flags;
  synth_flags.attach(synth_cmd);
  std::string synth_out;
  synth_cmd->add_option("--out", synth_out, "edge list path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*stats_cmd) {
      const ExperimentConfig c = stats_flags.build();
      std::cout << load_stats(grande::load_dataset(c.dataset));
    } else if (*dual_cmd) {
      const ExperimentConfig c = dual_flags.build();
      const grande::DatasetBundle b = grande::load_dataset(c.dataset);
      const auto stats = grande::dual_statistics(b.graph, c.model.dual_mode);
      emit(grande::dual_statistics_json(stats, b.graph), dual_out);
      if (!dual_edges_out.empty()) {
        const auto lg = c.model.dual_mode == grande::DualMode::kAugmented
                            ? grande::augmented_edge_graph(b.graph)
                            : grande::line_digraph(b.graph);
        grande::write_dual_edge_list(lg, dual_edges_out);
      }
    } else if (*train_cmd) {
      const ExperimentConfig c = train_flags.build();
      const auto summary = grande::run_experiment(
          c, grande::load_dataset(c.dataset), log_line);
      std::cout << grande::metrics_json(
          *summary.result.test,
          {{"best_validation_auc", summary.result.best_validation_auc}});
    } else if (*eval_cmd) {
      ExperimentConfig c;
      grande::apply_overrides(
          c, grande::read_key_values(std::filesystem::path(run_dir) /
                                     "config.txt"));
      // Dataset flags may point the saved run at another copy of its data.
      for (const auto& [key, opt] : eval_flags.options) {
        if (opt->count() == 0) continue;
        if (key.rfind("dataset.", 0) != 0) {
          throw grande::Error("evaluate only accepts dataset.* overrides, got " +
                              key);
        }
        grande::apply_overrides(c, {{key, eval_flags.values.at(key)}});
      }
      const auto report =
          grande::evaluate_run(run_dir, grande::load_dataset(c.dataset));
      emit(grande::metrics_json(report), eval_out);
    } else if (*ablate_cmd) {
      const ExperimentConfig c = ablate_flags.build();
      const auto runs = grande::run_ablation(
          c, grande::load_dataset(c.dataset), log_line);
      for (const auto& r : runs) {
        std::cout << r.variant << " auc " << r.result.test->auc << " hash "
                  << r.config_hash << "\n";
      }
    } else if (*synth_cmd) {
      ExperimentConfig c = synth_flags.build();
      if (c.dataset.format != "synthetic") {
        throw grande::Error("synth needs dataset.format = synthetic");
      }
      const auto b = grande::load_dataset(c.dataset);
      grande::write_edge_list(b.graph, synth_out, true);
      std::cout << load_stats(b);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
