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

// Local computation windows around target edges.
//
// Each target gets the subgraph of edges within K hops of either endpoint,
// capped at max_edges. Batches are disjoint unions of these subgraphs with
// their dual graphs, ready for GrandeModel::forward.

#ifndef GRANDE_SAMPLER_H_
#define GRANDE_SAMPLER_H_

#include <cstdint>
#include <vector>

#include "grande/graph.h"
#include "grande/model.h"

namespace grande {

struct SamplerConfig {
  std::size_t hops = 2;
  std::size_t max_edges = 32;
  std::size_t batch_size = 128;
  std::uint64_t seed = 1;
  /// Drop neighbour edges newer than the target edge.
  bool past_only = false;

  void validate() const;
};

/// A capped rooted subgraph with local ids.
struct RootedSubgraph {
  DirectedMultigraph graph;
  /// Global id of each local node / edge, ascending.
  std::vector<NodeId> node_ids;
  std::vector<EdgeId> edge_ids;
  /// Local id of the target edge.
  EdgeId target = 0;
  /// Hop distance of each local edge: 1 + min hop of its endpoints, where
  /// the target's endpoints are hop 0.
  std::vector<std::size_t> edge_hops;
};

/// Edges reachable within config.hops of either endpoint of target, ignoring
/// direction. Over the cap, the target is kept and the rest of the budget
/// goes to the lowest hops, then the newest edges, then a seeded hash.
RootedSubgraph rooted_subgraph(const DirectedMultigraph& g, EdgeId target,
                               const SamplerConfig& config);

struct SubgraphBatch {
  std::vector<RootedSubgraph> subgraphs;
  /// Disjoint union of the subgraphs (in order) with its dual; targets[i] is
  /// subgraph i's target edge.
  ModelInput input;
  /// Per target: 1/0 label and 1 when the label is present, else 0/0.
  std::vector<double> labels;
  std::vector<double> mask;
};

/// Deterministic random-access batches over targets in the given order.
class BatchStream {
 public:
  BatchStream(const DirectedMultigraph& g, std::vector<EdgeId> targets,
              const SamplerConfig& sampler, const ModelConfig& model);

  std::size_t num_batches() const;
  std::size_t num_targets() const { return targets_.size(); }
  SubgraphBatch batch(std::size_t i) const;

 private:
  const DirectedMultigraph& graph_;
  std::vector<EdgeId> targets_;
  SamplerConfig sampler_;
  ModelConfig model_;
};

/// Union of subgraphs with the dual built per model config.
SubgraphBatch assemble_batch(std::vector<RootedSubgraph> subgraphs,
                             const ModelConfig& model);

/// All batches at once.
std::vector<SubgraphBatch> make_batches(const DirectedMultigraph& g,
                                        const std::vector<EdgeId>& targets,
                                        const SamplerConfig& sampler,
                                        const ModelConfig& model);

}  // namespace grande

#endif  // GRANDE_SAMPLER_H_
