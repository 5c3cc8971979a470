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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "test_graphs.h"

using namespace grande;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("grande_dataset_" + std::to_string(std::random_device{}()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path file(const std::string& name, const std::string& text) const {
    std::ofstream(path_ / name) << text;
    return path_ / name;
  }

 private:
  fs::path path_;
};

// Ten trust ratings between raw ids 10..40, listed out of time order.
const char* kToyBitcoin =
    "10,20,5,1005\n"
    "20,30,-3,1001\n"
    "30,10,2,1002\n"
    "40,10,-10,1009\n"
    "10,30,10,1003\n"
    "20,10,1,1004\n"
    "30,20,-1,1000\n"
    "40,20,4,1006\n"
    "10,40,3,1007\n"
    "20,40,1,1008\n";

// Independent label rule over an edge list.
std::vector<int> sink_hub_oracle(const DirectedMultigraph& g) {
  std::vector<int> in(g.num_nodes()), out(g.num_nodes()), labels;
  for (const Edge& e : g.edges()) {
    ++out[e.tail];
    ++in[e.head];
  }
  for (const Edge& e : g.edges()) {
    labels.push_back(out[e.head] == 0 && in[e.head] >= 3 ? 1 : 0);
  }
  return labels;
}

}  // namespace

TEST(ChronologicalSplit, ToySizesAndOrder) {
  TempDir dir;
  const DatasetBundle b = load_bitcoin(dir.file("toy.csv", kToyBitcoin));
  EXPECT_EQ(b.splits.train.size(), 7u);
  EXPECT_EQ(b.splits.validation.size(), 1u);
  EXPECT_EQ(b.splits.test.size(), 2u);
  double last = -1e300;
  for (const auto* part : {&b.splits.train, &b.splits.validation, &b.splits.test}) {
    double lo = 1e300;
    for (EdgeId e : *part) lo = std::min(lo, b.graph.edge(e).timestamp);
    EXPECT_LE(last, lo);
    for (EdgeId e : *part) last = std::max(last, b.graph.edge(e).timestamp);
  }
}

TEST(ChronologicalSplit, PartitionsLabeledEdgesOnly) {
  std::vector<EdgeLabel> labels = {1, std::nullopt, 0, 0, std::nullopt, 1};
  DirectedMultigraph g(3, {{0, 1, 5}, {1, 2, 4}, {2, 0, 3}, {0, 2, 2},
                           {1, 0, 1}, {2, 1, 0}},
                       {}, {}, labels);
  const Splits s = chronological_split(g, 0.5, 0.25);
  EXPECT_EQ(s.train, (std::vector<EdgeId>{5, 3}));
  EXPECT_EQ(s.validation, (std::vector<EdgeId>{2}));
  EXPECT_EQ(s.test, (std::vector<EdgeId>{0}));
  EXPECT_THROW(chronological_split(g, 0.8, 0.3), Error);
}

TEST(LoadBitcoin, ParsesToyFile) {
  TempDir dir;
  const DatasetBundle b = load_bitcoin(dir.file("toy.csv", kToyBitcoin));
  const DirectedMultigraph& g = b.graph;
  EXPECT_EQ(g.num_nodes(), 4u);
  EXPECT_EQ(g.num_edges(), 10u);
  // Edges are ordered by time; raw id 30 -> dense 2, 20 -> 1.
  EXPECT_EQ(g.edge(0).tail, 2);
  EXPECT_EQ(g.edge(0).head, 1);
  EXPECT_EQ(g.edge(0).timestamp, 1000.0);
  int positives = 0;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    EXPECT_LE(g.edge(e - (e > 0)).timestamp, g.edge(e).timestamp);
    positives += *g.label(e);
  }
  EXPECT_EQ(positives, 3);
  EXPECT_EQ(g.node_feature_width(), 202u);
  EXPECT_EQ(g.edge_feature_width(), 1u);
  for (double v : g.edge_features().values()) EXPECT_EQ(v, 1.0);
  // Raw 10 (dense 0) has in-degree 3 and out-degree 3.
  EXPECT_EQ(g.node_features()(0, 3), 1.0);
  EXPECT_EQ(g.node_features()(0, 101 + 3), 1.0);
}

TEST(LoadBitcoin, RatingNeverReachesFeatures) {
  TempDir dir;
  std::string flipped = kToyBitcoin;
  for (char& c : flipped) {
    if (c == '-') c = ' ';
  }
  const DatasetBundle a = load_bitcoin(dir.file("a.csv", kToyBitcoin));
  const DatasetBundle b = load_bitcoin(dir.file("b.csv", flipped));
  EXPECT_EQ(a.graph.node_features(), b.graph.node_features());
  EXPECT_EQ(a.graph.edge_features(), b.graph.edge_features());
  EXPECT_NE(a.graph.labels(), b.graph.labels());
}

TEST(LoadBitcoin, ReportsBadLines) {
  TempDir dir;
  auto message = [&](const std::string& text) {
    try {
      load_bitcoin(dir.file("bad.csv", text));
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("1,2,3,4\n1,2,x,5\n").find(":2:"), std::string::npos);
  EXPECT_NE(message("1,2,3,4\n1,2,3,4\n1,2,11,5\n").find(":3:"),
            std::string::npos);
  EXPECT_NE(message("1,2,3\n").find(":1:"), std::string::npos);
  EXPECT_NE(message("1,1,3,4\n").find("self-loop"), std::string::npos);
  EXPECT_THROW(load_bitcoin(dir.file("none", "") / "missing"), Error);
}

TEST(DegreeOneHot, CapsIntoOverflowBucket) {
  std::vector<Edge> edges;
  for (int i = 1; i <= 5; ++i) edges.push_back({i, 0, 0.0});
  DirectedMultigraph g(6, edges);
  const Tensor x = degree_one_hot(g, 3);
  ASSERT_EQ(x.cols(), 10u);
  EXPECT_EQ(x(0, 4), 1.0);      // in-degree 5 -> overflow bucket 4
  EXPECT_EQ(x(0, 5 + 0), 1.0);  // out-degree 0
  EXPECT_EQ(x(1, 0), 1.0);
  EXPECT_EQ(x(1, 5 + 1), 1.0);
  for (std::size_t v = 0; v < 6; ++v) {
    double row = 0.0;
    for (std::size_t j = 0; j < 10; ++j) row += x(v, j);
    EXPECT_EQ(row, 2.0);
  }
}

TEST(SinkHubLabels, SinkStar) {
  const DirectedMultigraph g = grande::testing::sink_star_graph();
  const std::vector<EdgeLabel> labels = sink_hub_labels(g);
  for (int e = 0; e < 8; ++e) EXPECT_EQ(labels[e], 1);
  EXPECT_EQ(labels[8], 0);
  EXPECT_EQ(labels[9], 0);
}

TEST(Synthetic, EmptyAndInfeasible) {
  SyntheticSpec spec;
  spec.edges = 0;
  const DatasetBundle b = generate_synthetic(spec, 1);
  EXPECT_EQ(b.graph.num_edges(), 0u);
  EXPECT_TRUE(b.splits.train.empty());
  EXPECT_TRUE(b.splits.test.empty());
  spec.edges = 10;
  spec.nodes = 2;
  EXPECT_THROW(generate_synthetic(spec, 1), Error);
  spec.nodes = 10;
  spec.sink_fraction = 0.0;
  EXPECT_THROW(generate_synthetic(spec, 1), Error);
  spec.sink_fraction = 1.5;
  EXPECT_THROW(generate_synthetic(spec, 1), Error);
}

TEST(Synthetic, DeterministicAndRuleConsistent) {
  SyntheticSpec spec;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const DatasetBundle a = generate_synthetic(spec, seed);
    const DatasetBundle b = generate_synthetic(spec, seed);
    EXPECT_EQ(a.graph.edges().size(), b.graph.edges().size());
    for (std::size_t e = 0; e < a.graph.num_edges(); ++e) {
      EXPECT_EQ(a.graph.edge(e).tail, b.graph.edge(e).tail);
      EXPECT_EQ(a.graph.edge(e).head, b.graph.edge(e).head);
    }
    EXPECT_EQ(a.graph.labels(), b.graph.labels());
    EXPECT_EQ(a.splits.test, b.splits.test);
    EXPECT_FALSE(a.graph.has_self_loops());
    const std::vector<int> want = sink_hub_oracle(a.graph);
    int positives = 0;
    for (std::size_t e = 0; e < a.graph.num_edges(); ++e) {
      EXPECT_EQ(*a.graph.label(e), want[e]);
      EXPECT_EQ(a.graph.edge(e).timestamp, double(e));
      positives += want[e];
    }
    // Both classes are well represented.
    EXPECT_GT(positives, 200);
    EXPECT_LT(positives, 1800);
    EXPECT_EQ(a.splits.train.size(), 1400u);
    EXPECT_EQ(a.splits.validation.size(), 200u);
    EXPECT_EQ(a.splits.test.size(), 400u);
  }
  const DatasetBundle x = generate_synthetic(spec, 1);
  const DatasetBundle y = generate_synthetic(spec, 2);
  EXPECT_NE(x.graph.labels(), y.graph.labels());
}

TEST(LoadEdgeList, SortsByTimeAndFillsFeatures) {
  TempDir dir;
  const DatasetBundle b =
      load_edge_list(dir.file("g.csv", "0,1,5,1\n1,2,3,0\n2,0,4,1\n"));
  EXPECT_EQ(b.graph.num_edges(), 3u);
  EXPECT_EQ(b.graph.edge(0).timestamp, 3.0);
  EXPECT_EQ(*b.graph.label(0), 0);
  EXPECT_EQ(b.graph.edge(2).timestamp, 5.0);
  EXPECT_EQ(b.graph.node_feature_width(), 1u);
  EXPECT_EQ(b.graph.edge_feature_width(), 1u);
}
