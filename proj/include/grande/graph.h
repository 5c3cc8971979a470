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

// Temporal event streams and the directed multigraphs built from them.
//
// Node and edge ids are dense integers assigned at construction. Every
// incidence list is in ascending edge-id order so downstream reductions run
// in a canonical order.

#ifndef GRANDE_GRAPH_H_
#define GRANDE_GRAPH_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "grande/tensor.h"

namespace grande {

using NodeId = std::int32_t;
using EdgeId = std::int32_t;

/// One transaction u -> v at time t with event-level features.
struct Event {
  NodeId source = 0;
  NodeId target = 0;
  double timestamp = 0.0;
  std::vector<double> features;
};

/// Events in ascending timestamp order; ties keep insertion order.
class EventStream {
 public:
  EventStream() = default;

  const std::vector<Event>& events() const { return events_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }

 private:
  friend EventStream ingest_events(std::vector<Event> records);
  std::vector<Event> events_;
};

/// Closed interval [start, end].
struct TimeInterval {
  double start = 0.0;
  double end = 0.0;

  static TimeInterval make(double start, double end);
  bool contains(double t) const { return start <= t && t <= end; }
};

struct Edge {
  NodeId tail = 0;
  NodeId head = 0;
  double timestamp = 0.0;
};

using EdgeLabel = std::optional<int>;

class DirectedMultigraph {
 public:
  DirectedMultigraph() = default;
  /// node_features is num_nodes x F and edge_features num_edges x F' (either
  /// may be empty, meaning width 0). labels is empty or one entry per edge.
  DirectedMultigraph(std::size_t num_nodes, std::vector<Edge> edges,
                     Tensor node_features = {}, Tensor edge_features = {},
                     std::vector<EdgeLabel> labels = {});

  std::size_t num_nodes() const { return num_nodes_; }
  std::size_t num_edges() const { return edges_.size(); }

  const Edge& edge(EdgeId e) const;
  const std::vector<Edge>& edges() const { return edges_; }
  /// Edges whose head is v, ascending id.
  std::span<const EdgeId> in_edges(NodeId v) const;
  /// Edges whose tail is v, ascending id.
  std::span<const EdgeId> out_edges(NodeId v) const;
  /// Number of parallel edges u -> v.
  int multiplicity(NodeId u, NodeId v) const;

  const Tensor& node_features() const { return node_features_; }
  const Tensor& edge_features() const { return edge_features_; }
  std::size_t node_feature_width() const { return node_features_.cols(); }
  std::size_t edge_feature_width() const { return edge_features_.cols(); }
  void set_node_features(Tensor features);
  void set_edge_features(Tensor features);

  EdgeLabel label(EdgeId e) const;
  const std::vector<EdgeLabel>& labels() const { return labels_; }
  void set_labels(std::vector<EdgeLabel> labels);

  bool has_self_loops() const;
  bool valid_node(NodeId v) const {
    return v >= 0 && static_cast<std::size_t>(v) < num_nodes_;
  }

 private:
  std::size_t num_nodes_ = 0;
  std::vector<Edge> edges_;
  // CSR incidence: offsets has num_nodes + 1 entries.
  std::vector<std::size_t> in_offsets_, out_offsets_;
  std::vector<EdgeId> in_index_, out_index_;
  Tensor node_features_;
  Tensor edge_features_;
  std::vector<EdgeLabel> labels_;
};

/// Validates and stably sorts events by timestamp. A non-finite timestamp is
/// rejected with the offending record index.
EventStream ingest_events(std::vector<Event> records);

struct Snapshot {
  DirectedMultigraph graph;
  /// Stream node id of each graph node, ascending.
  std::vector<NodeId> stream_node_ids;
  /// Stream position of each graph edge.
  std::vector<std::size_t> event_index;
};

/// Graph of all events with start <= t <= end. Nodes are the endpoints of
/// included events, renumbered densely in ascending stream-id order.
Snapshot snapshot(const EventStream& stream, TimeInterval interval);

/// Events implied by a graph (edge order, edge features as event features).
EventStream to_event_stream(const DirectedMultigraph& g);

/// Edge list text format, one edge per line: tail_id,head_id,timestamp[,label]
/// Node ids are used as dense ids. Feature sidecars, when present, live next to
/// the edge list as <path>.nodes.csv (node_id,f...) and <path>.edges.csv
/// (edge_index,f...).
DirectedMultigraph read_edge_list(const std::filesystem::path& path);
void write_edge_list(const DirectedMultigraph& g,
                     const std::filesystem::path& path,
                     bool write_feature_sidecars = false);

}  // namespace grande

#endif  // GRANDE_GRAPH_H_
