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

#include "grande/graph.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "text_io.h"

namespace grande {

namespace {

void build_csr(std::size_t n, const std::vector<Edge>& edges, bool by_head,
               std::vector<std::size_t>& offsets, std::vector<EdgeId>& index) {
  offsets.assign(n + 1, 0);
  for (const Edge& e : edges) ++offsets[(by_head ? e.head : e.tail) + 1];
  for (std::size_t v = 0; v < n; ++v) offsets[v + 1] += offsets[v];
  index.assign(edges.size(), 0);
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const NodeId v = by_head ? edges[i].head : edges[i].tail;
    index[cursor[v]++] = static_cast<EdgeId>(i);
  }
}

}  // namespace

TimeInterval TimeInterval::make(double start, double end) {
  if (!(start <= end)) {
    throw Error("TimeInterval: start " + detail::format_double(start) +
                " is after end " + detail::format_double(end));
  }
  return TimeInterval{start, end};
}

DirectedMultigraph::DirectedMultigraph(std::size_t num_nodes,
                                       std::vector<Edge> edges,
                                       Tensor node_features,
                                       Tensor edge_features,
                                       std::vector<EdgeLabel> labels)
    : num_nodes_(num_nodes), edges_(std::move(edges)) {
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (!valid_node(e.tail) || !valid_node(e.head)) {
      throw Error("DirectedMultigraph: edge " + std::to_string(i) +
                  " references node outside [0, " + std::to_string(num_nodes) +
                  ")");
    }
    if (!std::isfinite(e.timestamp)) {
      throw Error("DirectedMultigraph: edge " + std::to_string(i) +
                  " has non-finite timestamp");
    }
  }
  build_csr(num_nodes_, edges_, true, in_offsets_, in_index_);
  build_csr(num_nodes_, edges_, false, out_offsets_, out_index_);
  set_node_features(std::move(node_features));
  set_edge_features(std::move(edge_features));
  set_labels(std::move(labels));
}

const Edge& DirectedMultigraph::edge(EdgeId e) const {
  if (e < 0 || static_cast<std::size_t>(e) >= edges_.size()) {
    throw Error("edge id " + std::to_string(e) + " out of range");
  }
  return edges_[e];
}

std::span<const EdgeId> DirectedMultigraph::in_edges(NodeId v) const {
  if (!valid_node(v)) throw Error("in_edges: invalid node " + std::to_string(v));
  return {in_index_.data() + in_offsets_[v],
          in_offsets_[v + 1] - in_offsets_[v]};
}

std::span<const EdgeId> DirectedMultigraph::out_edges(NodeId v) const {
  if (!valid_node(v)) {
    throw Error("out_edges: invalid node " + std::to_string(v));
  }
  return {out_index_.data() + out_offsets_[v],
          out_offsets_[v + 1] - out_offsets_[v]};
}

int DirectedMultigraph::multiplicity(NodeId u, NodeId v) const {
  if (!valid_node(u) || !valid_node(v)) return 0;
  int count = 0;
  for (EdgeId e : out_edges(u)) count += edges_[e].head == v ? 1 : 0;
  return count;
}

void DirectedMultigraph::set_node_features(Tensor features) {
  if (features.empty()) {
    node_features_ = Tensor(num_nodes_, 0);
    return;
  }
  if (features.rows() != num_nodes_) {
    throw Error("node features have " + std::to_string(features.rows()) +
                " rows for " + std::to_string(num_nodes_) + " nodes");
  }
  node_features_ = std::move(features);
}

void DirectedMultigraph::set_edge_features(Tensor features) {
  if (features.empty()) {
    edge_features_ = Tensor(edges_.size(), 0);
    return;
  }
  if (features.rows() != edges_.size()) {
    throw Error("edge features have " + std::to_string(features.rows()) +
                " rows for " + std::to_string(edges_.size()) + " edges");
  }
  edge_features_ = std::move(features);
}

EdgeLabel DirectedMultigraph::label(EdgeId e) const {
  edge(e);
  return labels_[e];
}

void DirectedMultigraph::set_labels(std::vector<EdgeLabel> labels) {
  if (labels.empty()) labels.assign(edges_.size(), std::nullopt);
  if (labels.size() != edges_.size()) {
    throw Error("got " + std::to_string(labels.size()) + " labels for " +
                std::to_string(edges_.size()) + " edges");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] && *labels[i] != 0 && *labels[i] != 1) {
      throw Error("edge " + std::to_string(i) + " has label " +
                  std::to_string(*labels[i]) + ", expected 0 or 1");
    }
  }
  labels_ = std::move(labels);
}

bool DirectedMultigraph::has_self_loops() const {
  return std::any_of(edges_.begin(), edges_.end(),
                     [](const Edge& e) { return e.tail == e.head; });
}

EventStream ingest_events(std::vector<Event> records) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!std::isfinite(records[i].timestamp)) {
      throw Error("ingest_events: record " + std::to_string(i) +
                  " has non-finite timestamp");
    }
    if (records[i].source < 0 || records[i].target < 0) {
      throw Error("ingest_events: record " + std::to_string(i) +
                  " has negative node id");
    }
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const Event& a, const Event& b) {
                     return a.timestamp < b.timestamp;
                   });
  EventStream s;
  s.events_ = std::move(records);
  return s;
}

Snapshot snapshot(const EventStream& stream, TimeInterval interval) {
  Snapshot out;
  std::map<NodeId, NodeId> remap;
  std::size_t width = 0;
  bool width_set = false;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const Event& ev = stream.events()[i];
    if (!interval.contains(ev.timestamp)) continue;
    if (!width_set) {
      width = ev.features.size();
      width_set = true;
    } else if (ev.features.size() != width) {
      throw Error("snapshot: event " + std::to_string(i) + " has " +
                  std::to_string(ev.features.size()) +
                  " features, expected " + std::to_string(width));
    }
    remap.emplace(ev.source, 0);
    remap.emplace(ev.target, 0);
    out.event_index.push_back(i);
  }
  NodeId next = 0;
  for (auto& [stream_id, local] : remap) {
    local = next++;
    out.stream_node_ids.push_back(stream_id);
  }
  std::vector<Edge> edges;
  Tensor feats(out.event_index.size(), width);
  for (std::size_t k = 0; k < out.event_index.size(); ++k) {
    const Event& ev = stream.events()[out.event_index[k]];
    edges.push_back({remap[ev.source], remap[ev.target], ev.timestamp});
    std::copy(ev.features.begin(), ev.features.end(), feats.row_span(k).begin());
  }
  out.graph = DirectedMultigraph(remap.size(), std::move(edges), Tensor(),
                                 width > 0 ? std::move(feats) : Tensor());
  return out;
}

EventStream to_event_stream(const DirectedMultigraph& g) {
  std::vector<Event> events;
  events.reserve(g.num_edges());
  for (std::size_t i = 0; i < g.num_edges(); ++i) {
    const Edge& e = g.edges()[i];
    auto f = g.edge_features().row_span(i);
    events.push_back({e.tail, e.head, e.timestamp,
                      std::vector<double>(f.begin(), f.end())});
  }
  return ingest_events(std::move(events));
}

namespace {

std::filesystem::path sidecar(const std::filesystem::path& p,
                              const char* suffix) {
  return std::filesystem::path(p.string() + suffix);
}

// Reads index,f... rows. With max_rows unset the table grows to the largest
// index seen; rows never listed stay zero.
Tensor read_feature_sidecar(const std::filesystem::path& path,
                            std::optional<std::size_t> max_rows,
                            std::size_t min_rows) {
  std::ifstream in(path);
  if (!in) return {};
  std::vector<std::vector<double>> table(min_rows);
  std::size_t width = 0;
  bool width_set = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto fields = detail::split(t, ',');
    std::int64_t idx = 0;
    if (!detail::parse_int(fields[0], idx) || idx < 0 ||
        (max_rows && static_cast<std::size_t>(idx) >= *max_rows)) {
      throw Error(path.string() + ":" + std::to_string(line_no) +
                  ": bad row index");
    }
    if (static_cast<std::size_t>(idx) >= table.size()) table.resize(idx + 1);
    std::vector<double> vals;
    for (std::size_t k = 1; k < fields.size(); ++k) {
      double v = 0.0;
      if (!detail::parse_double(fields[k], v)) {
        throw Error(path.string() + ":" + std::to_string(line_no) +
                    ": bad feature value");
      }
      vals.push_back(v);
    }
    if (width_set && vals.size() != width) {
      throw Error(path.string() + ":" + std::to_string(line_no) +
                  ": inconsistent feature width");
    }
    width = vals.size();
    width_set = true;
    table[idx] = std::move(vals);
  }
  Tensor out(table.size(), width);
  for (std::size_t r = 0; r < table.size(); ++r) {
    if (!table[r].empty()) {
      std::copy(table[r].begin(), table[r].end(), out.row_span(r).begin());
    }
  }
  return out;
}

void write_feature_sidecar(const Tensor& t, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    out << r;
    for (double v : t.row_span(r)) out << ',' << detail::format_double(v);
    out << '\n';
  }
}

}  // namespace

DirectedMultigraph read_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open edge list " + path.string());
  std::vector<Edge> edges;
  std::vector<EdgeLabel> labels;
  NodeId max_id = -1;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto fields = detail::split(t, ',');
    std::int64_t tail = 0, head = 0, label = 0;
    double ts = 0.0;
    const bool ok = (fields.size() == 3 || fields.size() == 4) &&
                    detail::parse_int(fields[0], tail) && tail >= 0 &&
                    detail::parse_int(fields[1], head) && head >= 0 &&
                    detail::parse_double(fields[2], ts) && std::isfinite(ts) &&
                    (fields.size() == 3 || fields[3].empty() ||
                     (detail::parse_int(fields[3], label) &&
                      (label == 0 || label == 1)));
    if (!ok) {
      throw Error(path.string() + ":" + std::to_string(line_no) +
                  ": malformed edge line '" + std::string(t) + "'");
    }
    edges.push_back({static_cast<NodeId>(tail), static_cast<NodeId>(head), ts});
    if (fields.size() == 4 && !fields[3].empty()) {
      labels.emplace_back(static_cast<int>(label));
    } else {
      labels.emplace_back(std::nullopt);
    }
    max_id = std::max({max_id, static_cast<NodeId>(tail),
                       static_cast<NodeId>(head)});
  }
  // Isolated nodes only show up in the node sidecar.
  Tensor node_feats = read_feature_sidecar(
      sidecar(path, ".nodes.csv"), std::nullopt,
      static_cast<std::size_t>(max_id + 1));
  const std::size_t n = node_feats.empty()
                            ? static_cast<std::size_t>(max_id + 1)
                            : node_feats.rows();
  Tensor edge_feats = read_feature_sidecar(sidecar(path, ".edges.csv"),
                                           edges.size(), edges.size());
  return DirectedMultigraph(n, std::move(edges), std::move(node_feats),
                            std::move(edge_feats), std::move(labels));
}

void write_edge_list(const DirectedMultigraph& g,
                     const std::filesystem::path& path,
                     bool write_feature_sidecars) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write edge list " + path.string());
  for (std::size_t i = 0; i < g.num_edges(); ++i) {
    const Edge& e = g.edges()[i];
    out << e.tail << ',' << e.head << ',' << detail::format_double(e.timestamp);
    if (g.labels()[i]) out << ',' << *g.labels()[i];
    out << '\n';
  }
  if (write_feature_sidecars) {
    if (g.node_feature_width() > 0) {
      write_feature_sidecar(g.node_features(), sidecar(path, ".nodes.csv"));
    }
    if (g.edge_feature_width() > 0) {
      write_feature_sidecar(g.edge_features(), sidecar(path, ".edges.csv"));
    }
  }
}

}  // namespace grande
