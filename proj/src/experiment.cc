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

#include "grande/experiment.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "text_io.h"

namespace grande {

namespace {

using json = nlohmann::ordered_json;

std::string format_bool(bool b) { return b ? "true" : "false"; }

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(key + ": expected true or false, got '" + v + "'");
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  if (!detail::parse_int(v, out) || out < 0) {
    throw Error(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return static_cast<std::size_t>(out);
}

std::uint64_t parse_seed(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    throw Error(key + ": expected an unsigned integer, got '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  if (!detail::parse_double(v, out) || !std::isfinite(out)) {
    throw Error(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

std::string format_mode(DualMode m) {
  return m == DualMode::kAugmented ? "augmented" : "plain_line";
}

DualMode parse_mode(const std::string& key, const std::string& v) {
  if (v == "augmented") return DualMode::kAugmented;
  if (v == "plain_line") return DualMode::kPlainLine;
  throw Error(key + ": expected augmented or plain_line, got '" + v + "'");
}

// One row per config key: how to print it and how to set it.
struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define GRANDE_SIZE(k, member)                                            \
  Field{k, [](const ExperimentConfig& c) { return std::to_string(c.member); }, \
        [](ExperimentConfig& c, const std::string& v) {                   \
          c.member = parse_size(k, v);                                    \
        }}
#define GRANDE_SEED(k, member)                                            \
  Field{k, [](const ExperimentConfig& c) { return std::to_string(c.member); }, \
        [](ExperimentConfig& c, const std::string& v) {                   \
          c.member = parse_seed(k, v);                                    \
        }}
#define GRANDE_REAL(k, member)                                            \
  Field{k,                                                                \
        [](const ExperimentConfig& c) {                                   \
          return detail::format_double(c.member);                         \
        },                                                                \
        [](ExperimentConfig& c, const std::string& v) {                   \
          c.member = parse_real(k, v);                                    \
        }}
#define GRANDE_BOOL(k, member)                                            \
  Field{k, [](const ExperimentConfig& c) { return format_bool(c.member); }, \
        [](ExperimentConfig& c, const std::string& v) {                   \
          c.member = parse_bool(k, v);                                    \
        }}
#define GRANDE_TEXT(k, member)                                            \
  Field{k, [](const ExperimentConfig& c) { return std::string(c.member); }, \
        [](ExperimentConfig& c, const std::string& v) { c.member = v; }}

const std::vector<Field>& fields() {
  static const std::vector<Field> kFields = {
      GRANDE_TEXT("dataset.format", dataset.format),
      Field{"dataset.path",
            [](const ExperimentConfig& c) { return c.dataset.path.string(); },
            [](ExperimentConfig& c, const std::string& v) {
              c.dataset.path = v;
            }},
      GRANDE_SIZE("dataset.degree_cap", dataset.degree_cap),
      GRANDE_SIZE("synthetic.nodes", dataset.synthetic.nodes),
      GRANDE_SIZE("synthetic.edges", dataset.synthetic.edges),
      GRANDE_REAL("synthetic.sink_fraction", dataset.synthetic.sink_fraction),
      GRANDE_REAL("synthetic.sink_edge_probability",
                  dataset.synthetic.sink_edge_probability),
      GRANDE_REAL("synthetic.skew", dataset.synthetic.skew),
      GRANDE_SEED("synthetic.seed", dataset.synthetic_seed),
      GRANDE_SIZE("model.hidden", model.hidden),
      GRANDE_SIZE("model.layers", model.layers),
      GRANDE_SIZE("model.ff_hidden", model.ff_hidden),
      GRANDE_SIZE("model.time_width", model.time_width),
      GRANDE_SIZE("model.classifier_hidden", model.classifier_hidden),
      GRANDE_BOOL("model.use_dual", model.use_dual),
      GRANDE_BOOL("model.use_time_encoding", model.use_time_encoding),
      GRANDE_BOOL("model.use_cross_query", model.use_cross_query),
      GRANDE_BOOL("model.use_causal_pruning", model.use_causal_pruning),
      Field{"model.dual_mode",
            [](const ExperimentConfig& c) {
              return format_mode(c.model.dual_mode);
            },
            [](ExperimentConfig& c, const std::string& v) {
              c.model.dual_mode = parse_mode("model.dual_mode", v);
            }},
      GRANDE_SEED("model.seed", model.seed),
      GRANDE_SIZE("sampler.hops", sampler.hops),
      GRANDE_SIZE("sampler.max_edges", sampler.max_edges),
      GRANDE_SEED("sampler.seed", sampler.seed),
      GRANDE_BOOL("sampler.past_only", sampler.past_only),
      GRANDE_SIZE("train.epochs", train.epochs),
      GRANDE_SIZE("train.batch_size", train.batch_size),
      GRANDE_REAL("train.learning_rate", train.learning_rate),
      GRANDE_REAL("train.l2", train.l2),
      GRANDE_SIZE("train.eval_every", train.eval_every),
      GRANDE_SEED("train.seed", train.seed),
      Field{"output_dir",
            [](const ExperimentConfig& c) { return c.output_dir.string(); },
            [](ExperimentConfig& c, const std::string& v) {
              c.output_dir = v;
            }},
      GRANDE_TEXT("variant", variant),
  };
  return kFields;
}

#undef GRANDE_SIZE
#undef GRANDE_SEED
#undef GRANDE_REAL
#undef GRANDE_BOOL
#undef GRANDE_TEXT

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("error writing " + path.string());
}

GrandeModel make_model(const ExperimentConfig& c, const DatasetBundle& data) {
  return GrandeModel(c.model, data.graph.node_feature_width(),
                     data.graph.edge_feature_width());
}

}  // namespace

ExperimentConfig::ExperimentConfig() { sampler.hops = 0; }

ExperimentConfig ExperimentConfig::resolved() const {
  ExperimentConfig c = *this;
  if (c.sampler.hops == 0) c.sampler.hops = c.model.layers;
  c.sampler.batch_size = c.train.batch_size;
  c.model.time_width = c.model.resolved_time_width();
  return c;
}

void ExperimentConfig::validate() const {
  const ExperimentConfig c = resolved();
  c.model.validate();
  c.sampler.validate();
  c.train.validate();
  const auto& f = c.dataset.format;
  if (f != "synthetic" && f != "bitcoin" && f != "edgelist") {
    throw Error("dataset.format: expected synthetic, bitcoin or edgelist, got '" +
                f + "'");
  }
  if (f != "synthetic" && !std::filesystem::exists(c.dataset.path)) {
    throw Error("dataset.path: '" + c.dataset.path.string() +
                "' does not exist");
  }
  const auto& names = ablation_variants();
  if (c.variant != "custom" &&
      std::find(names.begin(), names.end(), c.variant) == names.end()) {
    throw Error("variant: unknown '" + c.variant + "'");
  }
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  KeyValues kv;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw Error(path.string() + ":" + std::to_string(line_no) +
                  ": expected key = value");
    }
    kv[std::string(detail::trim(text.substr(0, eq)))] =
        std::string(detail::trim(text.substr(eq + 1)));
  }
  return kv;
}

void write_key_values(const KeyValues& kv, const std::filesystem::path& path) {
  std::string text;
  for (const auto& [k, v] : kv) text += k + " = " + v + "\n";
  write_text(path, text);
}

void apply_overrides(ExperimentConfig& config, const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    const auto& fs = fields();
    auto it = std::find_if(fs.begin(), fs.end(),
                           [&](const Field& f) { return key == f.key; });
    if (it == fs.end()) throw Error("unknown config key '" + key + "'");
    it->set(config, value);
  }
}

KeyValues to_key_values(const ExperimentConfig& config) {
  KeyValues kv;
  for (const Field& f : fields()) kv[f.key] = f.get(config);
  return kv;
}

std::string config_hash(const ExperimentConfig& config) {
  KeyValues kv = to_key_values(config.resolved());
  kv.erase("output_dir");
  std::string text;
  for (const auto& [k, v] : kv) text += k + "=" + v + "\n";
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(text)));
  return buf;
}

DatasetBundle load_dataset(const DatasetSpec& spec) {
  if (spec.format == "synthetic") {
    return generate_synthetic(spec.synthetic, spec.synthetic_seed);
  }
  if (spec.format == "bitcoin") return load_bitcoin(spec.path, spec.degree_cap);
  if (spec.format == "edgelist") return load_edge_list(spec.path);
  throw Error("unknown dataset format '" + spec.format + "'");
}

const std::vector<std::string>& ablation_variants() {
  static const std::vector<std::string> kVariants = {
      "full",           "reduced",        "no_causal_pruning",
      "no_time_encoding", "no_cross_query", "line_graph"};
  return kVariants;
}

ModelConfig variant_model(const ModelConfig& base, const std::string& variant) {
  if (variant == "custom") return base;
  ModelConfig c = base;
  c.use_dual = true;
  c.use_time_encoding = true;
  c.use_cross_query = true;
  c.use_causal_pruning = true;
  c.dual_mode = DualMode::kAugmented;
  if (variant == "full") return c;
  if (variant == "reduced") {
    c.use_dual = false;
    c.use_cross_query = false;
  } else if (variant == "no_causal_pruning") {
    c.use_causal_pruning = false;
  } else if (variant == "no_time_encoding") {
    c.use_time_encoding = false;
  } else if (variant == "no_cross_query") {
    c.use_cross_query = false;
  } else if (variant == "line_graph") {
    c.dual_mode = DualMode::kPlainLine;
  } else {
    throw Error("unknown variant '" + variant + "'");
  }
  return c;
}

std::string metrics_json(const MetricsReport& report,
                         const std::map<std::string, double>& extra) {
  json j;
  j["auc"] = report.auc;
  j["ks"] = report.ks;
  j["f1_at_half"] = report.f1_at_half;
  j["f1_best"] = report.f1_best;
  j["f1_best_threshold"] = report.f1_best_threshold;
  j["positives"] = report.positives;
  j["negatives"] = report.negatives;
  for (const auto& [k, v] : extra) j[k] = v;
  return j.dump(2) + "\n";
}

std::string dual_statistics_json(const DualStatistics& s,
                                 const DirectedMultigraph& g) {
  json j;
  j["graph_nodes"] = g.num_nodes();
  j["graph_edges"] = g.num_edges();
  j["dual_nodes"] = s.dual_nodes;
  j["dual_edges"] = s.dual_edges;
  for (std::size_t t = 0; t < kNumAdjacencyTypes; ++t) {
    j[std::string(to_string(static_cast<AdjacencyType>(t)))] =
        s.type_histogram[t];
  }
  j["pruned_dual_edges"] = s.pruned_dual_edges;
  for (std::size_t t = 0; t < kNumAdjacencyTypes; ++t) {
    j["pruned_" + std::string(to_string(static_cast<AdjacencyType>(t)))] =
        s.pruned_type_histogram[t];
  }
  j["pruning_ratio"] = s.pruning_ratio;
  j["max_out_degree"] = s.max_out_degree;
  j["max_pruned_out_degree"] = s.max_pruned_out_degree;
  return j.dump(2) + "\n";
}

RunSummary run_experiment(const ExperimentConfig& config,
                          const DatasetBundle& data, const LogFn& log) {
  ExperimentConfig c = config.resolved();
  c.model = variant_model(c.model, c.variant);
  c.validate();
  if (data.splits.test.empty()) {
    throw Error("dataset '" + data.name + "' has no test targets");
  }
  std::filesystem::create_directories(c.output_dir);
  write_key_values(to_key_values(c), c.output_dir / "config.txt");

  RunSummary summary;
  summary.variant = c.variant;
  summary.config_hash = config_hash(c);
  summary.output_dir = c.output_dir;
  GrandeModel model = make_model(c, data);
  const auto start = std::chrono::steady_clock::now();
  std::size_t last_logged = 0;
  summary.result = train(
      model, data.graph, data.splits, c.sampler, c.train,
      [&](std::size_t step, double loss) {
        if (!log) return;
        const double elapsed = std::chrono::duration<double>(
                                   std::chrono::steady_clock::now() - start)
                                   .count();
        if (step == 1 || step - last_logged >= 10) {
          log(c.variant + " step " + std::to_string(step) + " loss " +
              detail::format_double(loss) + " (" +
              std::to_string(static_cast<int>(elapsed)) + " s)");
          last_logged = step;
        }
      });
  summary.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  const TrainResult& r = summary.result;

  save_checkpoint(model.parameters(), c.output_dir / "model.ckpt");
  write_text(c.output_dir / "metrics.json",
             metrics_json(*r.test,
                          {{"best_validation_auc", r.best_validation_auc},
                           {"best_step", static_cast<double>(r.best_step)},
                           {"steps", static_cast<double>(r.steps)}}));
  write_pr_curve_csv(*r.test, c.output_dir / "pr_curve.csv");
  std::string log_text = "step,loss\n";
  for (std::size_t i = 0; i < r.losses.size(); ++i) {
    log_text += std::to_string(i + 1) + "," +
                detail::format_double(r.losses[i]) + "\n";
  }
  write_text(c.output_dir / "train_log.csv", log_text);
  std::string eval_text = "step,validation_auc,best_validation_auc\n";
  for (const EvalPoint& e : r.evaluations) {
    eval_text += std::to_string(e.step) + "," +
                 detail::format_double(e.validation_auc) + "," +
                 detail::format_double(e.best_auc) + "\n";
  }
  write_text(c.output_dir / "validation_log.csv", eval_text);
  if (log) {
    log(c.variant + " done: test auc " + detail::format_double(r.test->auc) +
        ", best validation auc " + detail::format_double(r.best_validation_auc) +
        " at step " + std::to_string(r.best_step));
  }
  return summary;
}

std::vector<RunSummary> run_ablation(const ExperimentConfig& config,
                                     const DatasetBundle& data,
                                     const LogFn& log) {
  std::vector<RunSummary> runs;
  std::string table =
      "variant,auc,ks,f1_at_half,f1_best,best_validation_auc,config_hash\n";
  for (const std::string& v : ablation_variants()) {
    ExperimentConfig c = config;
    c.variant = v;
    c.output_dir = config.output_dir / v;
    runs.push_back(run_experiment(c, data, log));
    const MetricsReport& m = *runs.back().result.test;
    table += v + "," + detail::format_double(m.auc) + "," +
             detail::format_double(m.ks) + "," +
             detail::format_double(m.f1_at_half) + "," +
             detail::format_double(m.f1_best) + "," +
             detail::format_double(runs.back().result.best_validation_auc) +
             "," + runs.back().config_hash + "\n";
  }
  std::filesystem::create_directories(config.output_dir);
  write_text(config.output_dir / "ablation.csv", table);
  return runs;
}

MetricsReport evaluate_run(const std::filesystem::path& run_dir,
                           const DatasetBundle& data) {
  ExperimentConfig c;
  apply_overrides(c, read_key_values(run_dir / "config.txt"));
  c = c.resolved();
  c.model = variant_model(c.model, c.variant);
  GrandeModel model = make_model(c, data);
  load_checkpoint(model.parameters(), run_dir / "model.ckpt");
  const ScoredTargets s =
      score_targets(model, data.graph, data.splits.test, c.sampler);
  return evaluate_scores(s.labeled_scores, s.labels);
}

}  // namespace grande
