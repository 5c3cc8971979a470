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

#include "grande/sampler.h"

#include <algorithm>
#include <deque>
#include <limits>
#include <unordered_map>

namespace grande {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Tensor gather(const Tensor& source, const std::vector<std::int32_t>& rows) {
  if (source.cols() == 0) return {};
  Tensor out(rows.size(), source.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    auto src = source.row_span(rows[r]);
    std::copy(src.begin(), src.end(), out.row_span(r).begin());
  }
  return out;
}

}  // namespace

void SamplerConfig::validate() const {
  if (hops < 1) throw Error("sampler hops must be at least 1");
  if (max_edges < 1) throw Error("sampler max_edges must be at least 1");
  if (batch_size < 1) throw Error("sampler batch_size must be at least 1");
}

RootedSubgraph rooted_subgraph(const DirectedMultigraph& g, EdgeId target,
                               const SamplerConfig& config) {
  config.validate();
  const Edge& root = g.edge(target);

  // Undirected BFS over nodes, K - 1 expansions deep: an edge is within K
  // hops when one of its endpoints is within K - 1.
  std::unordered_map<NodeId, std::size_t> dist;
  std::deque<NodeId> queue;
  for (NodeId v : {root.tail, root.head}) {
    if (dist.emplace(v, 0).second) queue.push_back(v);
  }
  std::unordered_map<EdgeId, std::size_t> edge_hop;
  while (!queue.empty()) {
    const NodeId v = queue.front();
    queue.pop_front();
    const std::size_t d = dist.at(v);
    for (auto incident : {g.in_edges(v), g.out_edges(v)}) {
      for (EdgeId e : incident) {
        const Edge& edge = g.edges()[e];
        if (config.past_only && e != target &&
            edge.timestamp > root.timestamp) {
          continue;
        }
        auto [it, inserted] = edge_hop.emplace(e, d + 1);
        if (!inserted) it->second = std::min(it->second, d + 1);
        if (d + 1 >= config.hops) continue;
        const NodeId other = edge.tail == v ? edge.head : edge.tail;
        if (dist.emplace(other, d + 1).second) queue.push_back(other);
      }
    }
  }

  std::vector<EdgeId> kept;
  kept.reserve(edge_hop.size());
  for (const auto& [e, hop] : edge_hop) {
    if (e != target) kept.push_back(e);
  }
  if (kept.size() + 1 > config.max_edges) {
    auto key = [&](EdgeId e) {
      return std::make_tuple(edge_hop.at(e), -g.edges()[e].timestamp,
                             splitmix64(config.seed ^ splitmix64(e)), e);
    };
    std::sort(kept.begin(), kept.end(),
              [&](EdgeId a, EdgeId b) { return key(a) < key(b); });
    kept.resize(config.max_edges - 1);
  }
  kept.push_back(target);
  std::sort(kept.begin(), kept.end());

  RootedSubgraph out;
  out.edge_ids = kept;
  for (EdgeId e : kept) {
    out.node_ids.push_back(g.edges()[e].tail);
    out.node_ids.push_back(g.edges()[e].head);
  }
  std::sort(out.node_ids.begin(), out.node_ids.end());
  out.node_ids.erase(std::unique(out.node_ids.begin(), out.node_ids.end()),
                     out.node_ids.end());
  auto local = [&](NodeId v) {
    return static_cast<NodeId>(
        std::lower_bound(out.node_ids.begin(), out.node_ids.end(), v) -
        out.node_ids.begin());
  };
  std::vector<Edge> edges;
  std::vector<EdgeLabel> labels;
  for (EdgeId e : kept) {
    const Edge& edge = g.edges()[e];
    edges.push_back({local(edge.tail), local(edge.head), edge.timestamp});
    labels.push_back(g.label(e));
    out.edge_hops.push_back(edge_hop.at(e));
  }
  out.target = static_cast<EdgeId>(
      std::lower_bound(kept.begin(), kept.end(), target) - kept.begin());
  out.graph = DirectedMultigraph(out.node_ids.size(), std::move(edges),
                                 gather(g.node_features(), out.node_ids),
                                 gather(g.edge_features(), out.edge_ids),
                                 std::move(labels));
  return out;
}

SubgraphBatch assemble_batch(std::vector<RootedSubgraph> subgraphs,
                             const ModelConfig& model) {
  std::size_t n = 0, m = 0;
  std::size_t node_width = 0, edge_width = 0;
  if (!subgraphs.empty()) {
    node_width = subgraphs.front().graph.node_feature_width();
    edge_width = subgraphs.front().graph.edge_feature_width();
  }
  for (const RootedSubgraph& s : subgraphs) {
    n += s.graph.num_nodes();
    m += s.graph.num_edges();
  }
  std::vector<Edge> edges;
  edges.reserve(m);
  std::vector<EdgeLabel> edge_labels;
  edge_labels.reserve(m);
  Tensor x(node_width > 0 ? n : 0, node_width);
  Tensor z(edge_width > 0 ? m : 0, edge_width);
  SubgraphBatch batch;
  std::vector<EdgeId> targets;
  std::size_t node_base = 0, edge_base = 0;
  for (const RootedSubgraph& s : subgraphs) {
    const DirectedMultigraph& sg = s.graph;
    for (const Edge& e : sg.edges()) {
      edges.push_back({static_cast<NodeId>(e.tail + node_base),
                       static_cast<NodeId>(e.head + node_base), e.timestamp});
    }
    edge_labels.insert(edge_labels.end(), sg.labels().begin(),
                       sg.labels().end());
    if (node_width > 0) {
      std::copy(sg.node_features().values().begin(),
                sg.node_features().values().end(), &x(node_base, 0));
    }
    if (edge_width > 0) {
      std::copy(sg.edge_features().values().begin(),
                sg.edge_features().values().end(), &z(edge_base, 0));
    }
    targets.push_back(static_cast<EdgeId>(s.target + edge_base));
    const EdgeLabel label = sg.label(s.target);
    batch.labels.push_back(label ? *label : 0.0);
    batch.mask.push_back(label ? 1.0 : 0.0);
    node_base += sg.num_nodes();
    edge_base += sg.num_edges();
  }
  DirectedMultigraph graph(n, std::move(edges), std::move(x), std::move(z),
                           std::move(edge_labels));
  // The dual of a disjoint union is the union of the per-subgraph duals.
  batch.input = make_model_input(std::move(graph), std::move(targets), model);
  batch.subgraphs = std::move(subgraphs);
  return batch;
}

BatchStream::BatchStream(const DirectedMultigraph& g,
                         std::vector<EdgeId> targets,
                         const SamplerConfig& sampler,
                         const ModelConfig& model)
    : graph_(g), targets_(std::move(targets)), sampler_(sampler),
      model_(model) {
  sampler_.validate();
  model_.validate();
  for (EdgeId e : targets_) graph_.edge(e);
}

std::size_t BatchStream::num_batches() const {
  return (targets_.size() + sampler_.batch_size - 1) / sampler_.batch_size;
}

SubgraphBatch BatchStream::batch(std::size_t i) const {
  if (i >= num_batches()) {
    throw Error("batch " + std::to_string(i) + " out of range, have " +
                std::to_string(num_batches()));
  }
  const std::size_t begin = i * sampler_.batch_size;
  const std::size_t end =
      std::min(targets_.size(), begin + sampler_.batch_size);
  std::vector<RootedSubgraph> subgraphs;
  subgraphs.reserve(end - begin);
  for (std::size_t k = begin; k < end; ++k) {
    subgraphs.push_back(rooted_subgraph(graph_, targets_[k], sampler_));
  }
  return assemble_batch(std::move(subgraphs), model_);
}

std::vector<SubgraphBatch> make_batches(const DirectedMultigraph& g,
                                        const std::vector<EdgeId>& targets,
                                        const SamplerConfig& sampler,
                                        const ModelConfig& model) {
  BatchStream stream(g, targets, sampler, model);
  std::vector<SubgraphBatch> out;
  out.reserve(stream.num_batches());
  for (std::size_t i = 0; i < stream.num_batches(); ++i) {
    out.push_back(stream.batch(i));
  }
  return out;
}

}  // namespace grande
