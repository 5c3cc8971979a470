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

#include "grande/dataset.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include "text_io.h"

namespace grande {

namespace {

// Reorders edges (and their features and labels) by (timestamp, id).
DirectedMultigraph chronological(const DirectedMultigraph& g) {
  std::vector<EdgeId> order(g.num_edges());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](EdgeId a, EdgeId b) {
    return g.edges()[a].timestamp < g.edges()[b].timestamp;
  });
  std::vector<Edge> edges;
  std::vector<EdgeLabel> labels;
  Tensor z(g.edge_feature_width() > 0 ? g.num_edges() : 0,
           g.edge_feature_width());
  for (std::size_t i = 0; i < order.size(); ++i) {
    edges.push_back(g.edges()[order[i]]);
    labels.push_back(g.label(order[i]));
    for (std::size_t j = 0; j < z.cols(); ++j) {
      z(i, j) = g.edge_features()(order[i], j);
    }
  }
  return DirectedMultigraph(g.num_nodes(), std::move(edges),
                            g.node_features(), std::move(z),
                            std::move(labels));
}

Tensor constant_column(std::size_t rows) { return Tensor(rows, 1, 1.0); }

}  // namespace

Splits chronological_split(const DirectedMultigraph& g, double train_fraction,
                           double validation_fraction) {
  if (!(train_fraction >= 0.0) || !(validation_fraction >= 0.0) ||
      train_fraction + validation_fraction > 1.0) {
    throw Error("split fractions must be non-negative and sum to at most 1");
  }
  std::vector<EdgeId> labeled;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    if (g.label(e)) labeled.push_back(static_cast<EdgeId>(e));
  }
  std::stable_sort(labeled.begin(), labeled.end(), [&](EdgeId a, EdgeId b) {
    return g.edges()[a].timestamp < g.edges()[b].timestamp;
  });
  const double n = static_cast<double>(labeled.size());
  const auto n_train = static_cast<std::size_t>(std::round(train_fraction * n));
  const auto n_val = std::min(
      labeled.size() - n_train,
      static_cast<std::size_t>(std::round(validation_fraction * n)));
  Splits s;
  s.train.assign(labeled.begin(), labeled.begin() + n_train);
  s.validation.assign(labeled.begin() + n_train,
                      labeled.begin() + n_train + n_val);
  s.test.assign(labeled.begin() + n_train + n_val, labeled.end());
  return s;
}

Tensor degree_one_hot(const DirectedMultigraph& g, std::size_t cap) {
  const std::size_t buckets = cap + 2;
  Tensor x(g.num_nodes(), 2 * buckets);
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    const NodeId id = static_cast<NodeId>(v);
    const std::size_t in = std::min(g.in_edges(id).size(), cap + 1);
    const std::size_t out = std::min(g.out_edges(id).size(), cap + 1);
    x(v, in) = 1.0;
    x(v, buckets + out) = 1.0;
  }
  return x;
}

DatasetBundle load_bitcoin(const std::filesystem::path& path,
                           std::size_t degree_cap) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  struct Record {
    std::int64_t source, target;
    double time;
    int label;
  };
  std::vector<Record> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = detail::trim(line);
    if (text.empty()) continue;
    auto fail = [&](const std::string& why) {
      return Error(path.string() + ":" + std::to_string(line_no) + ": " + why);
    };
    const auto cols = detail::split(text, ',');
    if (cols.size() != 4) {
      throw fail("expected source,target,rating,time, got " +
                 std::to_string(cols.size()) + " fields");
    }
    Record r;
    std::int64_t rating = 0;
    if (!detail::parse_int(cols[0], r.source) ||
        !detail::parse_int(cols[1], r.target)) {
      throw fail("bad node id");
    }
    if (!detail::parse_int(cols[2], rating) || rating < -10 || rating > 10) {
      throw fail("rating must be an integer in [-10, 10], got '" +
                 std::string(cols[2]) + "'");
    }
    if (!detail::parse_double(cols[3], r.time) || !std::isfinite(r.time)) {
      throw fail("bad timestamp '" + std::string(cols[3]) + "'");
    }
    if (r.source == r.target) throw fail("self-loop on node " + std::string(cols[0]));
    r.label = rating < 0 ? 1 : 0;
    records.push_back(r);
  }
  std::map<std::int64_t, NodeId> ids;
  for (const Record& r : records) {
    ids.emplace(r.source, 0);
    ids.emplace(r.target, 0);
  }
  NodeId next = 0;
  for (auto& [raw, id] : ids) id = next++;
  std::stable_sort(records.begin(), records.end(),
                   [](const Record& a, const Record& b) { return a.time < b.time; });
  std::vector<Edge> edges;
  std::vector<EdgeLabel> labels;
  for (const Record& r : records) {
    edges.push_back({ids.at(r.source), ids.at(r.target), r.time});
    labels.push_back(r.label);
  }
  DirectedMultigraph skeleton(ids.size(), edges);
  DatasetBundle b;
  b.name = path.stem().string();
  b.graph = DirectedMultigraph(ids.size(), std::move(edges),
                               degree_one_hot(skeleton, degree_cap),
                               constant_column(records.size()),
                               std::move(labels));
  b.splits = chronological_split(b.graph);
  return b;
}

DatasetBundle load_edge_list(const std::filesystem::path& path) {
  DirectedMultigraph g = chronological(read_edge_list(path));
  if (g.node_feature_width() == 0) {
    g.set_node_features(constant_column(g.num_nodes()));
  }
  if (g.edge_feature_width() == 0) {
    g.set_edge_features(constant_column(g.num_edges()));
  }
  DatasetBundle b;
  b.name = path.stem().string();
  b.splits = chronological_split(g);
  b.graph = std::move(g);
  return b;
}

std::vector<EdgeLabel> sink_hub_labels(const DirectedMultigraph& g) {
  std::vector<EdgeLabel> labels;
  labels.reserve(g.num_edges());
  for (const Edge& e : g.edges()) {
    const bool sink = g.out_edges(e.head).empty() && g.in_edges(e.head).size() >= 3;
    labels.push_back(sink ? 1 : 0);
  }
  return labels;
}

DatasetBundle generate_synthetic(const SyntheticSpec& spec,
                                 std::uint64_t seed) {
  auto in_unit = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!in_unit(spec.sink_fraction) || !in_unit(spec.sink_edge_probability)) {
    throw Error("synthetic: fractions must lie in [0, 1]");
  }
  if (!(spec.skew >= 0.0) || !std::isfinite(spec.skew)) {
    throw Error("synthetic: skew must be finite and non-negative");
  }
  const auto sinks = static_cast<std::size_t>(
      std::round(spec.sink_fraction * static_cast<double>(spec.nodes)));
  const std::size_t senders = spec.nodes - sinks;
  if (spec.edges > 0) {
    if (senders < 2) {
      throw Error("synthetic: need at least 2 non-sink nodes, have " +
                  std::to_string(senders));
    }
    if (sinks == 0 && spec.sink_edge_probability > 0.0) {
      throw Error("synthetic: sink_edge_probability > 0 needs sinks");
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<NodeId> perm(spec.nodes);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  const std::vector<NodeId> sink_pool(perm.begin(), perm.begin() + sinks);
  const std::vector<NodeId> sender_pool(perm.begin() + sinks, perm.end());

  auto skewed = [&](std::size_t n) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = std::pow(static_cast<double>(i + 1), -spec.skew);
    }
    return std::discrete_distribution<std::size_t>(w.begin(), w.end());
  };
  auto pick_sink = skewed(std::max<std::size_t>(sinks, 1));
  auto pick_sender_head = skewed(std::max<std::size_t>(senders, 1));
  std::uniform_int_distribution<std::size_t> pick_tail(
      0, std::max<std::size_t>(senders, 1) - 1);
  std::bernoulli_distribution to_sink(spec.sink_edge_probability);

  std::vector<Edge> edges;
  edges.reserve(spec.edges);
  for (std::size_t i = 0; i < spec.edges; ++i) {
    const NodeId tail = sender_pool[pick_tail(rng)];
    NodeId head;
    if (to_sink(rng)) {
      head = sink_pool[pick_sink(rng)];
    } else {
      do {
        head = sender_pool[pick_sender_head(rng)];
      } while (head == tail);
    }
    edges.push_back({tail, head, static_cast<double>(i)});
  }
  DirectedMultigraph skeleton(spec.nodes, edges);
  DatasetBundle b;
  b.name = "synthetic";
  b.graph = DirectedMultigraph(spec.nodes, std::move(edges),
                               constant_column(spec.nodes),
                               constant_column(spec.edges),
                               sink_hub_labels(skeleton));
  b.splits = chronological_split(b.graph);
  return b;
}

}  // namespace grande
