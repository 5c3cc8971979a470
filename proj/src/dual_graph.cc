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

#include "grande/dual_graph.h"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace grande {

namespace {

constexpr std::array<std::string_view, kNumAdjacencyTypes> kTypeNames = {
    "head_to_head", "head_to_tail", "tail_to_head", "tail_to_tail"};

AdjacencyType make_type(bool head_in_from, bool head_in_to) {
  if (head_in_from) {
    return head_in_to ? AdjacencyType::kHeadToHead : AdjacencyType::kHeadToTail;
  }
  return head_in_to ? AdjacencyType::kTailToHead : AdjacencyType::kTailToTail;
}

void reject_self_loops(const DirectedMultigraph& g, const char* op) {
  for (std::size_t i = 0; i < g.num_edges(); ++i) {
    if (g.edges()[i].tail == g.edges()[i].head) {
      throw Error(std::string(op) + ": edge " + std::to_string(i) +
                  " is a self-loop on node " +
                  std::to_string(g.edges()[i].tail));
    }
  }
}

void build_index(std::size_t n, const std::vector<DualEdge>& edges,
                 bool by_to, std::vector<std::size_t>& offsets,
                 std::vector<std::int32_t>& index) {
  offsets.assign(n + 1, 0);
  for (const DualEdge& d : edges) ++offsets[(by_to ? d.to : d.from) + 1];
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  index.assign(edges.size(), 0);
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const EdgeId v = by_to ? edges[k].to : edges[k].from;
    index[cursor[v]++] = static_cast<std::int32_t>(k);
  }
}

// Number of b in sorted with t_b >= t.
std::size_t count_at_least(const std::vector<double>& sorted, double t) {
  return static_cast<std::size_t>(
      sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), t));
}

}  // namespace

AdjacencyType reverse(AdjacencyType t) {
  switch (t) {
    case AdjacencyType::kHeadToTail: return AdjacencyType::kTailToHead;
    case AdjacencyType::kTailToHead: return AdjacencyType::kHeadToTail;
    default: return t;
  }
}

std::string_view to_string(AdjacencyType t) {
  return kTypeNames[static_cast<std::size_t>(t)];
}

std::optional<AdjacencyType> parse_adjacency_type(std::string_view s) {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
    if (kTypeNames[i] == s) return static_cast<AdjacencyType>(i);
  }
  return std::nullopt;
}

AugmentedLineGraph::AugmentedLineGraph(std::size_t num_dual_nodes,
                                       std::vector<DualEdge> edges)
    : num_nodes_(num_dual_nodes), edges_(std::move(edges)) {
  for (const DualEdge& d : edges_) {
    if (d.from < 0 || d.to < 0 ||
        static_cast<std::size_t>(d.from) >= num_nodes_ ||
        static_cast<std::size_t>(d.to) >= num_nodes_ || d.from == d.to) {
      throw Error("AugmentedLineGraph: invalid dual edge " +
                  std::to_string(d.from) + " -> " + std::to_string(d.to));
    }
  }
  if (!std::is_sorted(edges_.begin(), edges_.end())) {
    std::sort(edges_.begin(), edges_.end());
  }
  build_index(num_nodes_, edges_, true, in_offsets_, in_index_);
  build_index(num_nodes_, edges_, false, out_offsets_, out_index_);
}

std::span<const std::int32_t> AugmentedLineGraph::in_edges(EdgeId i) const {
  return {in_index_.data() + in_offsets_[i],
          in_offsets_[i + 1] - in_offsets_[i]};
}

std::span<const std::int32_t> AugmentedLineGraph::out_edges(EdgeId i) const {
  return {out_index_.data() + out_offsets_[i],
          out_offsets_[i + 1] - out_offsets_[i]};
}

std::array<std::size_t, kNumAdjacencyTypes>
AugmentedLineGraph::type_histogram() const {
  std::array<std::size_t, kNumAdjacencyTypes> h{};
  for (const DualEdge& d : edges_) ++h[static_cast<std::size_t>(d.type)];
  return h;
}

AugmentedLineGraph line_digraph(const DirectedMultigraph& g) {
  reject_self_loops(g, "line_digraph");
  std::vector<DualEdge> out;
  for (std::size_t a = 0; a < g.num_edges(); ++a) {
    const NodeId w = g.edges()[a].head;
    for (EdgeId b : g.out_edges(w)) {
      out.push_back({static_cast<EdgeId>(a), b, AdjacencyType::kHeadToTail, w});
    }
  }
  return AugmentedLineGraph(g.num_edges(), std::move(out));
}

AugmentedLineGraph augmented_edge_graph(const DirectedMultigraph& g) {
  reject_self_loops(g, "augmented_edge_graph");
  std::vector<DualEdge> out;
  struct Incidence {
    EdgeId edge;
    bool is_head;
  };
  std::vector<Incidence> at;
  for (std::size_t w = 0; w < g.num_nodes(); ++w) {
    const NodeId node = static_cast<NodeId>(w);
    at.clear();
    for (EdgeId e : g.in_edges(node)) at.push_back({e, true});
    for (EdgeId e : g.out_edges(node)) at.push_back({e, false});
    for (const Incidence& a : at) {
      for (const Incidence& b : at) {
        if (a.edge == b.edge) continue;
        out.push_back({a.edge, b.edge, make_type(a.is_head, b.is_head), node});
      }
    }
  }
  return AugmentedLineGraph(g.num_edges(), std::move(out));
}

AugmentedLineGraph causal_prune(const AugmentedLineGraph& lg,
                                std::span<const double> times) {
  if (times.size() != lg.num_nodes()) {
    throw Error("causal_prune: " + std::to_string(times.size()) +
                " timestamps for " + std::to_string(lg.num_nodes()) +
                " dual nodes");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i])) {
      throw Error("causal_prune: dual node " + std::to_string(i) +
                  " has no finite timestamp");
    }
  }
  std::vector<DualEdge> kept;
  kept.reserve(lg.num_edges());
  for (const DualEdge& d : lg.edges()) {
    if (times[d.to] >= times[d.from]) kept.push_back(d);
  }
  return AugmentedLineGraph(lg.num_nodes(), std::move(kept));
}

AugmentedLineGraph causal_prune(const AugmentedLineGraph& lg,
                                const DirectedMultigraph& g) {
  std::vector<double> times(g.num_edges());
  for (std::size_t i = 0; i < g.num_edges(); ++i) {
    times[i] = g.edges()[i].timestamp;
  }
  return causal_prune(lg, times);
}

DualStatistics dual_statistics(const DirectedMultigraph& g, DualMode mode) {
  reject_self_loops(g, "dual_statistics");
  DualStatistics s;
  s.dual_nodes = g.num_edges();
  const std::size_t n = g.num_nodes();
  // Sorted timestamps of edges entering (heads) and leaving (tails) each node.
  std::vector<std::vector<double>> heads(n), tails(n);
  for (const Edge& e : g.edges()) {
    heads[e.head].push_back(e.timestamp);
    tails[e.tail].push_back(e.timestamp);
  }
  for (std::size_t w = 0; w < n; ++w) {
    std::sort(heads[w].begin(), heads[w].end());
    std::sort(tails[w].begin(), tails[w].end());
  }
  auto add_type = [&](AdjacencyType type, const std::vector<double>& from,
                      const std::vector<double>& to, bool same_set) {
    const std::size_t idx = static_cast<std::size_t>(type);
    const std::size_t total =
        from.size() * to.size() - (same_set ? from.size() : 0);
    std::size_t kept = 0;
    for (double t : from) kept += count_at_least(to, t);
    if (same_set) kept -= from.size();
    s.type_histogram[idx] += total;
    s.pruned_type_histogram[idx] += kept;
  };
  for (std::size_t w = 0; w < n; ++w) {
    add_type(AdjacencyType::kHeadToTail, heads[w], tails[w], false);
    if (mode == DualMode::kAugmented) {
      add_type(AdjacencyType::kHeadToHead, heads[w], heads[w], true);
      add_type(AdjacencyType::kTailToHead, tails[w], heads[w], false);
      add_type(AdjacencyType::kTailToTail, tails[w], tails[w], true);
    }
  }
  for (std::size_t k = 0; k < kNumAdjacencyTypes; ++k) {
    s.dual_edges += s.type_histogram[k];
    s.pruned_dual_edges += s.pruned_type_histogram[k];
  }
  s.pruning_ratio =
      s.dual_edges == 0
          ? 0.0
          : static_cast<double>(s.dual_edges - s.pruned_dual_edges) /
                static_cast<double>(s.dual_edges);
  for (const Edge& e : g.edges()) {
    std::size_t full = 0, kept = 0;
    if (mode == DualMode::kAugmented) {
      for (NodeId w : {e.tail, e.head}) {
        full += heads[w].size() + tails[w].size() - 1;
        kept += count_at_least(heads[w], e.timestamp) +
                count_at_least(tails[w], e.timestamp) - 1;
      }
    } else {
      full = tails[e.head].size();
      kept = count_at_least(tails[e.head], e.timestamp);
    }
    s.max_out_degree = std::max(s.max_out_degree, full);
    s.max_pruned_out_degree = std::max(s.max_pruned_out_degree, kept);
  }
  return s;
}

DualStatistics dual_statistics(const AugmentedLineGraph& full,
                               const AugmentedLineGraph& pruned) {
  DualStatistics s;
  s.dual_nodes = full.num_nodes();
  s.dual_edges = full.num_edges();
  s.type_histogram = full.type_histogram();
  s.pruned_dual_edges = pruned.num_edges();
  s.pruned_type_histogram = pruned.type_histogram();
  s.pruning_ratio =
      s.dual_edges == 0
          ? 0.0
          : static_cast<double>(s.dual_edges - s.pruned_dual_edges) /
                static_cast<double>(s.dual_edges);
  for (std::size_t i = 0; i < full.num_nodes(); ++i) {
    s.max_out_degree = std::max(
        s.max_out_degree, full.out_edges(static_cast<EdgeId>(i)).size());
  }
  for (std::size_t i = 0; i < pruned.num_nodes(); ++i) {
    s.max_pruned_out_degree =
        std::max(s.max_pruned_out_degree,
                 pruned.out_edges(static_cast<EdgeId>(i)).size());
  }
  return s;
}

void write_dual_edge_list(const AugmentedLineGraph& lg,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const DualEdge& d : lg.edges()) {
    out << d.from << ',' << d.to << ',' << to_string(d.type) << ','
        << d.common << '\n';
  }
}

}  // namespace grande
