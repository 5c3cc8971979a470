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

// Directional transformer message passing over a graph and its edge dual.
//
// Each layer updates node vectors from their incoming and outgoing edges and
// edge vectors from their incoming and outgoing dual neighbours, with separate
// parameters per direction. Target edges are scored from the final edge
// vector, both endpoint vectors and a cross-query summary of each endpoint's
// view of the other's neighbourhood.
//
// Conventions: vectors are rows, a projection is x * W with W stored
// [in x out], and every neighbourhood is a segment of a flat key list so one
// tape record covers a whole batch.

#ifndef GRANDE_MODEL_H_
#define GRANDE_MODEL_H_

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "grande/autodiff.h"
#include "grande/dual_graph.h"
#include "grande/graph.h"
#include "grande/parameters.h"

namespace grande {

struct ModelConfig {
  /// Node and edge representation width; each directional branch has H / 2.
  std::size_t hidden = 128;
  std::size_t layers = 2;
  std::size_t ff_hidden = 512;
  /// Width of the sinusoidal time encoding; 0 picks the branch width
  /// (rounded up to even).
  std::size_t time_width = 0;
  std::size_t classifier_hidden = 128;
  bool use_dual = true;
  bool use_time_encoding = true;
  bool use_cross_query = true;
  bool use_causal_pruning = true;
  DualMode dual_mode = DualMode::kAugmented;
  /// Disables the outgoing-edge node branch (its half of h becomes zero).
  /// Only meant for probing reachability.
  bool use_out_branch = true;
  std::uint64_t seed = 1;

  std::size_t branch_width() const { return hidden / 2; }
  std::size_t resolved_time_width() const;
  /// Throws on inconsistent settings.
  void validate() const;
};

/// Dual graph of g as configured: augmented or plain line digraph, causally
/// pruned when use_causal_pruning is set. Empty when use_dual is off.
AugmentedLineGraph build_dual(const DirectedMultigraph& g,
                              const ModelConfig& config);

/// A graph (usually a disjoint union of sampled subgraphs), its dual and the
/// edges to score.
struct ModelInput {
  DirectedMultigraph graph;
  AugmentedLineGraph dual;
  std::vector<EdgeId> targets;
};

ModelInput make_model_input(DirectedMultigraph graph,
                            std::vector<EdgeId> targets,
                            const ModelConfig& config);

/// TE(s) rows for a column of offsets: sqrt(1/k) [cos r1 s, sin r1 s, ...]
/// with k = rho.cols(). Throws on negative or non-finite offsets.
Var time_encode(Tape& tape, const std::vector<double>& offsets, Var rho);

/// For each edge incident to v (incoming edges first, then outgoing, each in
/// ascending id), its timestamp minus the earliest timestamp incident to v.
std::vector<double> edge_time_offsets(const DirectedMultigraph& g, NodeId v);

struct AttentionWeights {
  Var w_q, w_k, w_n, w_e;
};

struct AttentionResult {
  /// One row per query.
  Var value;
  /// Weight of each query's own node vector.
  Var alpha_self;
  /// Weights of the node-vector and edge-vector keys, one row per key.
  Var alpha;
  Var beta;
};

/// Batched multiplicative attention. Key i belongs to query segment[i].
/// Per query: alpha is a softmax over its self key and its node keys, beta a
/// softmax over its edge keys only, logits scaled by 1/sqrt(A), and the
/// result is sum(alpha * node_key W_N) + sum(beta * edge_key W_E).
/// self_keys has one row per query; keys may be empty.
AttentionResult attend(const AttentionWeights& w, Var queries, Var self_keys,
                       Var node_keys, Var edge_keys,
                       const std::vector<std::int32_t>& segment);

struct BlockWeights {
  AttentionWeights attention;
  Var ln1_scale, ln1_shift;
  Var ff1_w, ff1_b, ff2_w, ff2_b;
  Var ln2_scale, ln2_shift;
};

/// out = LN(x + FF(x)) with x = LN(queries + attend(...)).
Var transformer_block(const BlockWeights& w, Var queries, Var self_keys,
                      Var node_keys, Var edge_keys,
                      const std::vector<std::int32_t>& segment,
                      AttentionResult* attention = nullptr);

/// One attention call of a forward pass: its parameter prefix, weights and
/// key-to-query segment.
struct AttentionCall {
  std::string site;
  AttentionResult result;
  std::vector<std::int32_t> segment;
};

/// Per-layer representations and the scored edges of one forward pass.
struct ForwardState {
  /// h[l], g[l] for l = 0..L (l = 0 is the input embedding).
  std::vector<Var> h;
  std::vector<Var> g;
  /// One row per target; absent without cross-query.
  Var delta_uv, delta_vu;
  /// Target probabilities as a column.
  Var probabilities;
  /// Every attention call in evaluation order.
  std::vector<AttentionCall> attention;
};

class GrandeModel {
 public:
  GrandeModel(const ModelConfig& config, std::size_t node_feature_width,
              std::size_t edge_feature_width);

  const ModelConfig& config() const { return config_; }
  std::size_t node_feature_width() const { return node_width_; }
  std::size_t edge_feature_width() const { return edge_width_; }
  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }
  /// Input width of the classifier head (5H, or 3H without cross-query).
  std::size_t classifier_input_width() const;

  /// Forward pass with the graph's own features.
  ForwardState forward(Tape& tape, const ModelInput& input);
  /// Forward pass with caller-provided feature leaves (for gradient probes).
  ForwardState forward(Tape& tape, const ModelInput& input, Var node_features,
                       Var edge_features);
  /// Target probabilities without keeping a tape around.
  std::vector<double> predict(const ModelInput& input);

 private:
  BlockWeights block(Tape& tape, const std::string& prefix);
  AttentionWeights attention(Tape& tape, const std::string& prefix);
  Var p(Tape& tape, const std::string& name);
  void add_block(const std::string& prefix, std::size_t key_width,
                 std::mt19937_64& rng);
  void add_attention(const std::string& prefix, std::size_t query_width,
                     std::size_t key_width, std::size_t out_width,
                     std::mt19937_64& rng);

  ModelConfig config_;
  std::size_t node_width_ = 0;
  std::size_t edge_width_ = 0;
  ParameterStore params_;
};

}  // namespace grande

#endif  // GRANDE_MODEL_H_
