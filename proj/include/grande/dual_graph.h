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

// Edge-to-node dual graphs of a directed multigraph.
//
// Dual node i stands for edge i of the source graph. The augmented edge
// adjacency graph links two edges for every endpoint they share and records
// how the shared node sits in each: HeadToTail means the common node is the
// head of the from-edge and the tail of the to-edge. The plain line digraph
// keeps only HeadToTail links.

#ifndef GRANDE_DUAL_GRAPH_H_
#define GRANDE_DUAL_GRAPH_H_

#include <array>
#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "grande/graph.h"

namespace grande {

enum class AdjacencyType : std::uint8_t {
  kHeadToHead = 0,
  kHeadToTail = 1,
  kTailToHead = 2,
  kTailToTail = 3,
};

inline constexpr std::size_t kNumAdjacencyTypes = 4;

/// Swaps the two role halves (HeadToTail <-> TailToHead).
AdjacencyType reverse(AdjacencyType t);
std::string_view to_string(AdjacencyType t);
std::optional<AdjacencyType> parse_adjacency_type(std::string_view s);

struct DualEdge {
  EdgeId from = 0;
  EdgeId to = 0;
  AdjacencyType type = AdjacencyType::kHeadToHead;
  NodeId common = 0;

  friend auto operator<=>(const DualEdge&, const DualEdge&) = default;
};

class AugmentedLineGraph {
 public:
  AugmentedLineGraph() = default;
  /// Dual edges are stored sorted by (from, to, type, common).
  AugmentedLineGraph(std::size_t num_dual_nodes, std::vector<DualEdge> edges);

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<DualEdge>& edges() const { return edges_; }
  /// Indices into edges() of dual edges ending at dual node i.
  std::span<const std::int32_t> in_edges(EdgeId i) const;
  /// Indices into edges() of dual edges starting at dual node i.
  std::span<const std::int32_t> out_edges(EdgeId i) const;
  std::array<std::size_t, kNumAdjacencyTypes> type_histogram() const;

 private:
  std::size_t num_nodes_ = 0;
  std::vector<DualEdge> edges_;
  std::vector<std::size_t> in_offsets_, out_offsets_;
  std::vector<std::int32_t> in_index_, out_index_;
};

/// (a -> b) iff head(a) == tail(b). Throws on self-loops.
AugmentedLineGraph line_digraph(const DirectedMultigraph& g);

/// One dual edge per ordered pair of distinct edges and per shared endpoint.
/// Throws on self-loops.
AugmentedLineGraph augmented_edge_graph(const DirectedMultigraph& g);

/// Drops dual edges (a -> b) with time(b) < time(a). times holds one finite
/// timestamp per dual node.
AugmentedLineGraph causal_prune(const AugmentedLineGraph& lg,
                                std::span<const double> times);
/// Uses the edge timestamps of g.
AugmentedLineGraph causal_prune(const AugmentedLineGraph& lg,
                                const DirectedMultigraph& g);

struct DualStatistics {
  std::size_t dual_nodes = 0;
  std::size_t dual_edges = 0;
  std::array<std::size_t, kNumAdjacencyTypes> type_histogram{};
  /// Dual edges surviving causal pruning, and their type histogram.
  std::size_t pruned_dual_edges = 0;
  std::array<std::size_t, kNumAdjacencyTypes> pruned_type_histogram{};
  /// Fraction of dual edges removed by pruning (0 when there are none).
  double pruning_ratio = 0.0;
  std::size_t max_out_degree = 0;
  std::size_t max_pruned_out_degree = 0;
};

enum class DualMode { kAugmented, kPlainLine };

/// Counts the dual of g from per-node incidence without materializing it, so
/// it also works on graphs whose dual is too large to build.
DualStatistics dual_statistics(const DirectedMultigraph& g, DualMode mode);

/// Same report computed from materialized duals.
DualStatistics dual_statistics(const AugmentedLineGraph& full,
                               const AugmentedLineGraph& pruned);

/// Debug export, one dual edge per line: from_edge,to_edge,type,common_node
void write_dual_edge_list(const AugmentedLineGraph& lg,
                          const std::filesystem::path& path);

}  // namespace grande

#endif  // GRANDE_DUAL_GRAPH_H_
