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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <tuple>

#include "grande/graph.h"
#include "test_graphs.h"

using namespace grande;
using grande::testing::random_multigraph;
using grande::testing::sink_star_graph;

namespace {

std::vector<EdgeId> ids(std::span<const EdgeId> s) {
  return {s.begin(), s.end()};
}

using EdgeTuple = std::tuple<NodeId, NodeId, double, EdgeLabel>;

std::vector<EdgeTuple> sorted_edges(const DirectedMultigraph& g) {
  std::vector<EdgeTuple> out;
  for (std::size_t i = 0; i < g.num_edges(); ++i) {
    const Edge& e = g.edges()[i];
    out.emplace_back(e.tail, e.head, e.timestamp, g.labels()[i]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(IngestEvents, EmptyInput) { EXPECT_TRUE(ingest_events({}).empty()); }

TEST(IngestEvents, SortsByTimestamp) {
  EventStream s = ingest_events({{0, 1, 5.0, {}}, {1, 2, 1.0, {}},
                                 {2, 0, 3.0, {}}});
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.events()[0].timestamp, 1.0);
  EXPECT_EQ(s.events()[1].timestamp, 3.0);
  EXPECT_EQ(s.events()[2].timestamp, 5.0);
}

TEST(IngestEvents, TiesKeepInsertionOrder) {
  EventStream s = ingest_events(
      {{0, 1, 2.0, {}}, {3, 4, 1.0, {}}, {5, 6, 2.0, {}}, {7, 8, 1.0, {}}});
  std::vector<NodeId> sources;
  for (const Event& e : s.events()) sources.push_back(e.source);
  EXPECT_EQ(sources, (std::vector<NodeId>{3, 7, 0, 5}));
}

TEST(IngestEvents, RandomStreamsMatchStableSortOracle) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> t(0, 9);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Event> records;
    for (int i = 0; i < 50; ++i) records.push_back({i, i + 1, double(t(rng)), {}});
    // Insertion-sort oracle: stable by construction.
    std::vector<Event> oracle;
    for (const Event& r : records) {
      auto pos = oracle.end();
      while (pos != oracle.begin() && (pos - 1)->timestamp > r.timestamp) --pos;
      oracle.insert(pos, r);
    }
    EventStream s = ingest_events(records);
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      EXPECT_EQ(s.events()[i].source, oracle[i].source);
    }
  }
}

TEST(IngestEvents, RejectsNonFiniteTimestampWithIndex) {
  try {
    ingest_events({{0, 1, 1.0, {}}, {0, 1, NAN, {}}});
    FAIL() << "expected rejection";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("record 1"), std::string::npos);
  }
}

TEST(TimeIntervalTest, RejectsReversedBounds) {
  EXPECT_THROW(TimeInterval::make(2.0, 1.0), Error);
  EXPECT_TRUE(TimeInterval::make(1.0, 1.0).contains(1.0));
}

TEST(Snapshot, DisjointIntervalIsEmpty) {
  EventStream s = ingest_events({{0, 1, 1.0, {}}, {1, 2, 2.0, {}}});
  Snapshot snap = snapshot(s, TimeInterval::make(10.0, 20.0));
  EXPECT_EQ(snap.graph.num_nodes(), 0u);
  EXPECT_EQ(snap.graph.num_edges(), 0u);
}

TEST(Snapshot, KeepsParallelEdgesInsideInterval) {
  const NodeId a = 10, b = 20, c = 30;
  EventStream s = ingest_events({{a, b, 1.0, {0.5}}, {a, b, 2.0, {0.25}},
                                 {b, c, 3.0, {1.0}}});
  Snapshot snap = snapshot(s, TimeInterval::make(1.0, 2.0));
  EXPECT_EQ(snap.graph.num_nodes(), 2u);
  EXPECT_EQ(snap.graph.num_edges(), 2u);
  EXPECT_EQ(snap.stream_node_ids, (std::vector<NodeId>{a, b}));
  EXPECT_EQ(snap.graph.multiplicity(0, 1), 2);
  EXPECT_EQ(snap.graph.edge_features()(1, 0), 0.25);
}

TEST(Snapshot, IsIdempotent) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    DirectedMultigraph g = random_multigraph(rng, 15, 40);
    const TimeInterval iv = TimeInterval::make(3.0, 14.0);
    Snapshot once = snapshot(to_event_stream(g), iv);
    Snapshot twice = snapshot(to_event_stream(once.graph), iv);
    EXPECT_EQ(sorted_edges(once.graph), sorted_edges(twice.graph));
    EXPECT_EQ(once.graph.num_nodes(), twice.graph.num_nodes());
  }
}

TEST(Incidence, SinkStarGraph) {
  DirectedMultigraph g = sink_star_graph();
  EXPECT_EQ(ids(g.in_edges(0)), (std::vector<EdgeId>{0, 1, 2, 3, 4, 5, 6, 7}));
  EXPECT_TRUE(g.out_edges(0).empty());
  EXPECT_EQ(ids(g.out_edges(5)), (std::vector<EdgeId>{4, 8, 9}));
  EXPECT_EQ(g.multiplicity(5, 0), 1);
  EXPECT_EQ(g.multiplicity(0, 5), 0);
  EXPECT_THROW(g.in_edges(11), Error);
  EXPECT_THROW(g.out_edges(-1), Error);
}

TEST(Incidence, MultiplicityIsDirectional) {
  EXPECT_EQ(DirectedMultigraph(2, {}).multiplicity(0, 1), 0);
  DirectedMultigraph g(2, {{0, 1, 0.0}, {0, 1, 1.0}});
  EXPECT_EQ(g.multiplicity(0, 1), 2);
  EXPECT_EQ(g.multiplicity(1, 0), 0);
}

TEST(Incidence, EveryEdgeIndexedOnceUnderEachEndpoint) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    DirectedMultigraph g = random_multigraph(rng, 50, 200);
    std::vector<int> in_seen(g.num_edges()), out_seen(g.num_edges());
    std::size_t in_total = 0, out_total = 0;
    for (std::size_t v = 0; v < g.num_nodes(); ++v) {
      auto in = g.in_edges(static_cast<NodeId>(v));
      auto out = g.out_edges(static_cast<NodeId>(v));
      EXPECT_TRUE(std::is_sorted(in.begin(), in.end()));
      EXPECT_TRUE(std::is_sorted(out.begin(), out.end()));
      for (EdgeId e : in) {
        EXPECT_EQ(g.edge(e).head, static_cast<NodeId>(v));
        ++in_seen[e];
      }
      for (EdgeId e : out) {
        EXPECT_EQ(g.edge(e).tail, static_cast<NodeId>(v));
        ++out_seen[e];
      }
      in_total += in.size();
      out_total += out.size();
    }
    EXPECT_EQ(in_total, g.num_edges());
    EXPECT_EQ(out_total, g.num_edges());
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
      EXPECT_EQ(in_seen[e], 1);
      EXPECT_EQ(out_seen[e], 1);
    }
    // Multiplicity against a direct count.
    const Edge& probe = g.num_edges() ? g.edges()[0] : Edge{0, 1, 0.0};
    const auto count = std::count_if(
        g.edges().begin(), g.edges().end(), [&](const Edge& e) {
          return e.tail == probe.tail && e.head == probe.head;
        });
    EXPECT_EQ(g.multiplicity(probe.tail, probe.head), count);
  }
}

TEST(Labels, AbsentAndValidated) {
  DirectedMultigraph g(2, {{0, 1, 0.0}, {1, 0, 1.0}});
  EXPECT_FALSE(g.label(0).has_value());
  g.set_labels({1, std::nullopt});
  EXPECT_EQ(g.label(0), 1);
  EXPECT_FALSE(g.label(1).has_value());
  EXPECT_THROW(g.set_labels({2, 0}), Error);
  EXPECT_THROW(g.set_labels({0}), Error);
}

TEST(Construction, RejectsOutOfRangeNodes) {
  EXPECT_THROW(DirectedMultigraph(2, {{0, 2, 0.0}}), Error);
  EXPECT_THROW(DirectedMultigraph(2, {{0, 1, INFINITY}}), Error);
  EXPECT_THROW(DirectedMultigraph(2, {{0, 1, 0.0}}, Tensor(3, 1)), Error);
}

TEST(EdgeListFormat, RoundTrip) {
  std::mt19937_64 rng(21);
  const auto dir = std::filesystem::temp_directory_path() / "grande_graph_rt";
  std::filesystem::create_directories(dir);
  for (int trial = 0; trial < 10; ++trial) {
    DirectedMultigraph g = random_multigraph(rng, 20, 60);
    std::vector<EdgeLabel> labels(g.num_edges());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (i % 3 != 2) labels[i] = static_cast<int>(i % 2);
    }
    g.set_labels(labels);
    Tensor x(g.num_nodes(), 2), z(g.num_edges(), 1);
    for (double& v : x.values()) v = std::uniform_real_distribution<>(-1, 1)(rng);
    for (double& v : z.values()) v = std::uniform_real_distribution<>(-1, 1)(rng);
    g.set_node_features(x);
    g.set_edge_features(z);

    const auto path = dir / "g.csv";
    write_edge_list(g, path, true);
    DirectedMultigraph back = read_edge_list(path);
    EXPECT_EQ(sorted_edges(back), sorted_edges(g));
    EXPECT_EQ(back.num_nodes(), g.num_nodes());
    EXPECT_EQ(back.node_features(), g.node_features());
    EXPECT_EQ(back.edge_features(), g.edge_features());
    const auto path2 = dir / "g2.csv";
    write_edge_list(back, path2, false);
    std::ifstream a(path), b(path2);
    std::string sa((std::istreambuf_iterator<char>(a)), {});
    std::string sb((std::istreambuf_iterator<char>(b)), {});
    EXPECT_EQ(sa, sb);
  }
  std::filesystem::remove_all(dir);
}

TEST(EdgeListFormat, MalformedLineReportsLocation) {
  const auto path =
      std::filesystem::temp_directory_path() / "grande_bad_edges.csv";
  {
    std::ofstream out(path);
    out << "0,1,1.5\n1,x,2\n";
  }
  try {
    read_edge_list(path);
    FAIL() << "expected parse error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
  }
  std::filesystem::remove(path);
}
