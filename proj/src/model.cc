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

#include "grande/model.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace grande {

namespace {

using Index = std::vector<std::int32_t>;

Var join_cols(Var a, Var b) {
  std::array<Var, 2> parts{a, b};
  return concat_cols(parts);
}

Var join_rows(Var a, Var b) {
  std::array<Var, 2> parts{a, b};
  return concat_rows(parts);
}

// Appends the time encoding to key rows when it is enabled.
Var with_time(Var x, Var te) { return te.valid() ? join_cols(x, te) : x; }

Var empty_column(Tape& tape) { return tape.constant(Tensor(0, 1)); }

// Flat key lists for one directional neighbourhood: key i belongs to query
// segment[i], reaches the neighbour row other[i] and edge row edge[i].
struct Neighborhood {
  Index segment;
  Index other;
  Index edge;
  Index type;
  std::vector<double> offsets;
};

}  // namespace

std::size_t ModelConfig::resolved_time_width() const {
  if (time_width > 0) return time_width;
  return branch_width() + branch_width() % 2;
}

void ModelConfig::validate() const {
  if (hidden < 2 || hidden % 2 != 0) {
    throw Error("hidden must be even and at least 2, got " +
                std::to_string(hidden));
  }
  if (layers < 1) throw Error("layers must be at least 1");
  if (ff_hidden < 1) throw Error("ff_hidden must be at least 1");
  if (classifier_hidden < 1) throw Error("classifier_hidden must be at least 1");
  if (use_time_encoding && resolved_time_width() % 2 != 0) {
    throw Error("time_width must be even, got " +
                std::to_string(resolved_time_width()));
  }
  if (!use_dual && dual_mode == DualMode::kPlainLine) {
    throw Error("dual_mode plain_line requires use_dual");
  }
}

AugmentedLineGraph build_dual(const DirectedMultigraph& g,
                              const ModelConfig& config) {
  if (!config.use_dual) return AugmentedLineGraph(g.num_edges(), {});
  AugmentedLineGraph lg = config.dual_mode == DualMode::kAugmented
                              ? augmented_edge_graph(g)
                              : line_digraph(g);
  return config.use_causal_pruning ? causal_prune(lg, g) : lg;
}

ModelInput make_model_input(DirectedMultigraph graph,
                            std::vector<EdgeId> targets,
                            const ModelConfig& config) {
  for (EdgeId e : targets) graph.edge(e);
  AugmentedLineGraph dual = build_dual(graph, config);
  return {std::move(graph), std::move(dual), std::move(targets)};
}

Var time_encode(Tape& tape, const std::vector<double>& offsets, Var rho) {
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (!std::isfinite(offsets[i]) || offsets[i] < 0.0) {
      throw Error("time_encode: offset " + std::to_string(i) + " is " +
                  std::to_string(offsets[i]) + ", expected finite and >= 0");
    }
  }
  if (rho.rows() != 1 || rho.cols() == 0) {
    throw Error("time_encode: frequencies must be a non-empty row, got " +
                rho.value().shape_string());
  }
  Var s = tape.constant(Tensor(offsets.size(), 1, offsets));
  Var arg = matmul(s, rho);
  return scale(interleave_cols(cos(arg), sin(arg)),
               std::sqrt(1.0 / static_cast<double>(rho.cols())));
}

std::vector<double> edge_time_offsets(const DirectedMultigraph& g, NodeId v) {
  std::vector<double> out;
  for (EdgeId e : g.in_edges(v)) out.push_back(g.edge(e).timestamp);
  for (EdgeId e : g.out_edges(v)) out.push_back(g.edge(e).timestamp);
  if (out.empty()) return out;
  const double lo = *std::min_element(out.begin(), out.end());
  for (double& t : out) t -= lo;
  return out;
}

AttentionResult attend(const AttentionWeights& w, Var queries, Var self_keys,
                       Var node_keys, Var edge_keys,
                       const std::vector<std::int32_t>& segment) {
  Tape& tape = queries.tape();
  const std::size_t n = queries.rows();
  const std::size_t k = segment.size();
  if (self_keys.rows() != n || node_keys.rows() != k ||
      edge_keys.rows() != k) {
    throw Error("attend: " + std::to_string(n) + " queries with " +
                std::to_string(self_keys.rows()) + " self keys, " +
                std::to_string(node_keys.rows()) + " node keys and " +
                std::to_string(edge_keys.rows()) + " edge keys for " +
                std::to_string(k) + " segment ids");
  }
  if (node_keys.cols() != w.w_k.rows() || edge_keys.cols() != w.w_e.rows()) {
    throw Error("attend: key widths " + std::to_string(node_keys.cols()) +
                " / " + std::to_string(edge_keys.cols()) +
                " do not match projections " + w.w_k.value().shape_string() +
                " / " + w.w_e.value().shape_string());
  }
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(w.w_q.cols()));
  Var q = matmul(queries, w.w_q);
  Var self_logit = scale(rowwise_dot(q, matmul(self_keys, w.w_k)), inv_sqrt);
  Var self_value = matmul(self_keys, w.w_n);
  Index self_segment(n);
  std::iota(self_segment.begin(), self_segment.end(), 0);

  AttentionResult r;
  if (k == 0) {
    r.alpha_self = segment_softmax(self_logit, self_segment, n);
    r.value = mul_col(self_value, r.alpha_self);
    r.alpha = empty_column(tape);
    r.beta = empty_column(tape);
    return r;
  }
  Var q_per_key = gather_rows(q, segment);
  Var node_logit =
      scale(rowwise_dot(q_per_key, matmul(node_keys, w.w_k)), inv_sqrt);
  Index all_segment = self_segment;
  all_segment.insert(all_segment.end(), segment.begin(), segment.end());
  Var alpha_all =
      segment_softmax(join_rows(self_logit, node_logit), all_segment, n);
  Var values = join_rows(self_value, matmul(node_keys, w.w_n));
  Var node_sum = segment_sum(mul_col(values, alpha_all), all_segment, n);

  Var edge_value = matmul(edge_keys, w.w_e);
  Var beta = segment_softmax(
      scale(rowwise_dot(q_per_key, edge_value), inv_sqrt), segment, n);
  Var edge_sum = segment_sum(mul_col(edge_value, beta), segment, n);

  r.value = add(node_sum, edge_sum);
  r.alpha_self = slice_rows(alpha_all, 0, n);
  r.alpha = slice_rows(alpha_all, n, k);
  r.beta = beta;
  return r;
}

Var transformer_block(const BlockWeights& w, Var queries, Var self_keys,
                      Var node_keys, Var edge_keys,
                      const std::vector<std::int32_t>& segment,
                      AttentionResult* attention) {
  AttentionResult a =
      attend(w.attention, queries, self_keys, node_keys, edge_keys, segment);
  Var x = layer_norm(add(queries, a.value), w.ln1_scale, w.ln1_shift);
  Var hidden = relu(add_row(matmul(x, w.ff1_w), w.ff1_b));
  Var ff = add_row(matmul(hidden, w.ff2_w), w.ff2_b);
  if (attention != nullptr) *attention = a;
  return layer_norm(add(x, ff), w.ln2_scale, w.ln2_shift);
}

GrandeModel::GrandeModel(const ModelConfig& config,
                         std::size_t node_feature_width,
                         std::size_t edge_feature_width)
    : config_(config),
      node_width_(node_feature_width),
      edge_width_(edge_feature_width) {
  config_.validate();
  std::mt19937_64 rng(config_.seed);
  const std::size_t h = config_.hidden;
  const std::size_t a = config_.branch_width();
  const std::size_t te = config_.use_time_encoding
                             ? config_.resolved_time_width()
                             : 0;
  params_.add("embed.node.w", node_width_, h, ParamKind::kWeight, rng);
  params_.add("embed.node.b", 1, h, ParamKind::kBias, rng);
  params_.add("embed.edge.w", edge_width_, h, ParamKind::kWeight, rng);
  params_.add("embed.edge.b", 1, h, ParamKind::kBias, rng);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    params_.add(pre + "phi_n", h, a, ParamKind::kWeight, rng);
    params_.add(pre + "phi_e", h, a, ParamKind::kWeight, rng);
    add_block(pre + "node_in", a + te, rng);
    if (config_.use_out_branch) {
      params_.add(pre + "psi_n", h, a, ParamKind::kWeight, rng);
      params_.add(pre + "psi_e", h, a, ParamKind::kWeight, rng);
      add_block(pre + "node_out", a + te, rng);
    }
    if (config_.use_dual) {
      params_.add(pre + "theta_n", h, a, ParamKind::kWeight, rng);
      params_.add(pre + "theta_e", h, a, ParamKind::kWeight, rng);
      add_block(pre + "edge_in", a + te, rng);
      params_.add(pre + "gamma_n", h, a, ParamKind::kWeight, rng);
      params_.add(pre + "gamma_e", h, a, ParamKind::kWeight, rng);
      add_block(pre + "edge_out", a + te, rng);
    }
  }
  if (config_.use_dual) {
    params_.add("type_embedding", kNumAdjacencyTypes, h, ParamKind::kWeight,
                rng);
  }
  if (config_.use_time_encoding) {
    // Geometric frequencies from 1 down to 1e-9 cover offsets from seconds
    // to decades.
    const std::size_t k = te / 2;
    Parameter& rho = params_.add("time.frequency", 1, k, ParamKind::kFrequency,
                                 rng);
    for (std::size_t j = 0; j < k; ++j) {
      const double frac = k > 1 ? double(j) / double(k - 1) : 0.0;
      rho.value[j] = std::pow(10.0, -9.0 * frac);
    }
  }
  if (config_.use_cross_query) {
    for (const char* name : {"left_in", "left_out", "right_in", "right_out"}) {
      add_attention(std::string("cross.") + name, h, h, a, rng);
    }
  }
  params_.add("head.w1", classifier_input_width(), config_.classifier_hidden,
              ParamKind::kWeight, rng);
  params_.add("head.b1", 1, config_.classifier_hidden, ParamKind::kBias, rng);
  params_.add("head.w2", config_.classifier_hidden, 1, ParamKind::kWeight, rng);
  params_.add("head.b2", 1, 1, ParamKind::kBias, rng);
}

std::size_t GrandeModel::classifier_input_width() const {
  return (config_.use_cross_query ? 5 : 3) * config_.hidden;
}

void GrandeModel::add_attention(const std::string& prefix,
                                std::size_t query_width,
                                std::size_t key_width, std::size_t out_width,
                                std::mt19937_64& rng) {
  params_.add(prefix + ".w_q", query_width, out_width, ParamKind::kWeight, rng);
  params_.add(prefix + ".w_k", key_width, out_width, ParamKind::kWeight, rng);
  params_.add(prefix + ".w_n", key_width, out_width, ParamKind::kWeight, rng);
  params_.add(prefix + ".w_e", key_width, out_width, ParamKind::kWeight, rng);
}

void GrandeModel::add_block(const std::string& prefix, std::size_t key_width,
                            std::mt19937_64& rng) {
  const std::size_t a = config_.branch_width();
  const std::size_t ff = config_.ff_hidden;
  add_attention(prefix, a, key_width, a, rng);
  params_.add(prefix + ".ln1.scale", 1, a, ParamKind::kNormScale, rng);
  params_.add(prefix + ".ln1.shift", 1, a, ParamKind::kNormShift, rng);
  params_.add(prefix + ".ff1.w", a, ff, ParamKind::kWeight, rng);
  params_.add(prefix + ".ff1.b", 1, ff, ParamKind::kBias, rng);
  params_.add(prefix + ".ff2.w", ff, a, ParamKind::kWeight, rng);
  params_.add(prefix + ".ff2.b", 1, a, ParamKind::kBias, rng);
  params_.add(prefix + ".ln2.scale", 1, a, ParamKind::kNormScale, rng);
  params_.add(prefix + ".ln2.shift", 1, a, ParamKind::kNormShift, rng);
}

Var GrandeModel::p(Tape& tape, const std::string& name) {
  Parameter* param = params_.find(name);
  if (param == nullptr) throw Error("model has no parameter " + name);
  return tape.param(*param);
}

AttentionWeights GrandeModel::attention(Tape& tape, const std::string& prefix) {
  return {p(tape, prefix + ".w_q"), p(tape, prefix + ".w_k"),
          p(tape, prefix + ".w_n"), p(tape, prefix + ".w_e")};
}

BlockWeights GrandeModel::block(Tape& tape, const std::string& prefix) {
  BlockWeights b;
  b.attention = attention(tape, prefix);
  b.ln1_scale = p(tape, prefix + ".ln1.scale");
  b.ln1_shift = p(tape, prefix + ".ln1.shift");
  b.ff1_w = p(tape, prefix + ".ff1.w");
  b.ff1_b = p(tape, prefix + ".ff1.b");
  b.ff2_w = p(tape, prefix + ".ff2.w");
  b.ff2_b = p(tape, prefix + ".ff2.b");
  b.ln2_scale = p(tape, prefix + ".ln2.scale");
  b.ln2_shift = p(tape, prefix + ".ln2.shift");
  return b;
}

ForwardState GrandeModel::forward(Tape& tape, const ModelInput& input) {
  return forward(tape, input, tape.constant(input.graph.node_features()),
                 tape.constant(input.graph.edge_features()));
}

ForwardState GrandeModel::forward(Tape& tape, const ModelInput& input,
                                  Var node_features, Var edge_features) {
  const DirectedMultigraph& g = input.graph;
  const AugmentedLineGraph& dual = input.dual;
  const std::size_t n = g.num_nodes();
  const std::size_t m = g.num_edges();
  const std::size_t a = config_.branch_width();
  if (node_features.rows() != n || node_features.cols() != node_width_ ||
      edge_features.rows() != m || edge_features.cols() != edge_width_) {
    throw Error("forward: features " + node_features.value().shape_string() +
                " / " + edge_features.value().shape_string() +
                " do not match a graph with " + std::to_string(n) +
                " nodes and " + std::to_string(m) +
                " edges for a model expecting widths " +
                std::to_string(node_width_) + " / " +
                std::to_string(edge_width_));
  }
  if (config_.use_dual && dual.num_nodes() != m) {
    throw Error("forward: dual has " + std::to_string(dual.num_nodes()) +
                " nodes for " + std::to_string(m) + " edges");
  }

  // Earliest timestamp incident to each node.
  std::vector<double> node_min(n, std::numeric_limits<double>::infinity());
  for (const Edge& e : g.edges()) {
    node_min[e.tail] = std::min(node_min[e.tail], e.timestamp);
    node_min[e.head] = std::min(node_min[e.head], e.timestamp);
  }
  Neighborhood node_in, node_out;
  for (std::size_t v = 0; v < n; ++v) {
    const auto node = static_cast<NodeId>(v);
    for (EdgeId e : g.in_edges(node)) {
      node_in.segment.push_back(node);
      node_in.other.push_back(g.edge(e).tail);
      node_in.edge.push_back(e);
      node_in.offsets.push_back(g.edge(e).timestamp - node_min[v]);
    }
    for (EdgeId e : g.out_edges(node)) {
      node_out.segment.push_back(node);
      node_out.other.push_back(g.edge(e).head);
      node_out.edge.push_back(e);
      node_out.offsets.push_back(g.edge(e).timestamp - node_min[v]);
    }
  }

  // Dual neighbourhoods; offsets are relative to the earliest edge among the
  // edge itself and all of its dual neighbours.
  Neighborhood dual_in, dual_out;
  if (config_.use_dual) {
    std::vector<double> edge_min(m);
    for (std::size_t i = 0; i < m; ++i) edge_min[i] = g.edges()[i].timestamp;
    for (const DualEdge& d : dual.edges()) {
      const double tf = g.edge(d.from).timestamp;
      const double tt = g.edge(d.to).timestamp;
      edge_min[d.to] = std::min(edge_min[d.to], tf);
      edge_min[d.from] = std::min(edge_min[d.from], tt);
    }
    for (std::size_t i = 0; i < m; ++i) {
      const auto edge = static_cast<EdgeId>(i);
      for (std::int32_t k : dual.in_edges(edge)) {
        const DualEdge& d = dual.edges()[k];
        dual_in.segment.push_back(edge);
        dual_in.other.push_back(d.from);
        dual_in.edge.push_back(d.common);
        dual_in.type.push_back(static_cast<std::int32_t>(d.type));
        dual_in.offsets.push_back(g.edge(d.from).timestamp - edge_min[i]);
      }
      for (std::int32_t k : dual.out_edges(edge)) {
        const DualEdge& d = dual.edges()[k];
        dual_out.segment.push_back(edge);
        dual_out.other.push_back(d.to);
        dual_out.edge.push_back(d.common);
        dual_out.type.push_back(static_cast<std::int32_t>(d.type));
        dual_out.offsets.push_back(g.edge(d.to).timestamp - edge_min[i]);
      }
    }
  }

  // Time encodings are shared by all layers.
  Var te_node_self, te_node_in, te_node_out, te_edge_self, te_dual_in,
      te_dual_out;
  if (config_.use_time_encoding) {
    Var rho = p(tape, "time.frequency");
    te_node_self = time_encode(tape, std::vector<double>(n, 0.0), rho);
    te_node_in = time_encode(tape, node_in.offsets, rho);
    te_node_out = time_encode(tape, node_out.offsets, rho);
    if (config_.use_dual) {
      te_edge_self = time_encode(tape, std::vector<double>(m, 0.0), rho);
      te_dual_in = time_encode(tape, dual_in.offsets, rho);
      te_dual_out = time_encode(tape, dual_out.offsets, rho);
    }
  }

  ForwardState s;
  s.h.push_back(add_row(matmul(node_features, p(tape, "embed.node.w")),
                        p(tape, "embed.node.b")));
  s.g.push_back(add_row(matmul(edge_features, p(tape, "embed.edge.w")),
                        p(tape, "embed.edge.b")));
  Var type_table =
      config_.use_dual ? p(tape, "type_embedding") : Var();

  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    Var h = s.h.back();
    Var ge = s.g.back();

    // Node branch over edges entering (or leaving) each node: node keys are
    // the far endpoints, edge keys the connecting edges.
    auto node_branch = [&](const std::string& name, const std::string& n_proj,
                           const std::string& e_proj, const Neighborhood& nb,
                           Var te_keys) {
      Var hp = matmul(h, p(tape, pre + n_proj));
      Var gp = matmul(ge, p(tape, pre + e_proj));
      AttentionResult a;
      Var out = transformer_block(
          block(tape, pre + name), hp, with_time(hp, te_node_self),
          with_time(gather_rows(hp, nb.other), te_keys),
          with_time(gather_rows(gp, nb.edge), te_keys), nb.segment, &a);
      s.attention.push_back({pre + name, a, nb.segment});
      return out;
    };
    Var phi = node_branch("node_in", "phi_n", "phi_e", node_in, te_node_in);
    Var psi = config_.use_out_branch
                  ? node_branch("node_out", "psi_n", "psi_e", node_out,
                                te_node_out)
                  : tape.constant(Tensor(n, a));
    s.h.push_back(join_cols(phi, psi));

    if (!config_.use_dual) {
      s.g.push_back(ge);
      continue;
    }
    // Edge branch over dual neighbours: node keys are the neighbouring
    // edges, edge keys the shared endpoint plus its adjacency-type row.
    // (h_w + T_type) W is formed as h W gathered plus T W gathered.
    auto edge_branch = [&](const std::string& name, const std::string& n_proj,
                           const std::string& e_proj, const Neighborhood& nb,
                           Var te_keys) {
      Var w_n = p(tape, pre + n_proj);
      Var w_e = p(tape, pre + e_proj);
      Var gp = matmul(ge, w_n);
      Var common = add(gather_rows(matmul(h, w_e), nb.edge),
                       gather_rows(matmul(type_table, w_e), nb.type));
      AttentionResult a;
      Var out = transformer_block(
          block(tape, pre + name), gp, with_time(gp, te_edge_self),
          with_time(gather_rows(gp, nb.other), te_keys),
          with_time(common, te_keys), nb.segment, &a);
      s.attention.push_back({pre + name, a, nb.segment});
      return out;
    };
    Var theta =
        edge_branch("edge_in", "theta_n", "theta_e", dual_in, te_dual_in);
    Var gamma =
        edge_branch("edge_out", "gamma_n", "gamma_e", dual_out, te_dual_out);
    s.g.push_back(join_cols(theta, gamma));
  }

  Var h = s.h.back();
  Var ge = s.g.back();
  const std::size_t b = input.targets.size();
  Index target_edge, target_tail, target_head;
  for (EdgeId e : input.targets) {
    target_edge.push_back(e);
    target_tail.push_back(g.edge(e).tail);
    target_head.push_back(g.edge(e).head);
  }
  std::vector<Var> parts = {gather_rows(ge, target_edge),
                            gather_rows(h, target_head),
                            gather_rows(h, target_tail)};

  if (config_.use_cross_query) {
    // Each endpoint attends over the other endpoint's incoming and outgoing
    // edges, leaving out the target edge itself.
    auto cross = [&](const std::string& name, const Index& query_nodes,
                     const Index& around, bool incoming) {
      Index segment, other, edge;
      for (std::size_t i = 0; i < b; ++i) {
        const auto node = static_cast<NodeId>(around[i]);
        auto list = incoming ? g.in_edges(node) : g.out_edges(node);
        for (EdgeId e : list) {
          if (e == input.targets[i]) continue;
          segment.push_back(static_cast<std::int32_t>(i));
          other.push_back(incoming ? g.edge(e).tail : g.edge(e).head);
          edge.push_back(e);
        }
      }
      Var q = gather_rows(h, query_nodes);
      AttentionResult a = attend(attention(tape, "cross." + name), q, q,
                                 gather_rows(h, other), gather_rows(ge, edge),
                                 segment);
      s.attention.push_back({"cross." + name, a, segment});
      return a.value;
    };
    s.delta_uv = join_cols(cross("left_in", target_tail, target_head, true),
                           cross("left_out", target_tail, target_head, false));
    s.delta_vu = join_cols(cross("right_in", target_head, target_tail, true),
                           cross("right_out", target_head, target_tail, false));
    parts.push_back(s.delta_uv);
    parts.push_back(s.delta_vu);
  }

  Var features = concat_cols(parts);
  Var hidden = relu(add_row(matmul(features, p(tape, "head.w1")),
                            p(tape, "head.b1")));
  s.probabilities = sigmoid(
      add_row(matmul(hidden, p(tape, "head.w2")), p(tape, "head.b2")));
  return s;
}

std::vector<double> GrandeModel::predict(const ModelInput& input) {
  Tape tape;
  ForwardState s = forward(tape, input);
  const Tensor& v = s.probabilities.value();
  return {v.values().begin(), v.values().end()};
}

}  // namespace grande
