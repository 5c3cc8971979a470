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

// Small graphs shared by the unit and acceptance tests.

#ifndef GRANDE_TESTS_TEST_GRAPHS_H_
#define GRANDE_TESTS_TEST_GRAPHS_H_

#include <algorithm>
#include <random>
#include <vector>

#include "grande/graph.h"

namespace grande::testing {

// Star sink: n1..n8 -> n0 as e0..e7, plus n5 -> n9 (e8) and n5 -> n10 (e9).
// Edge i has timestamp i.
inline DirectedMultigraph sink_star_graph(std::size_t node_feature_width = 0,
                                          std::size_t edge_feature_width = 0) {
  std::vector<Edge> edges;
  for (int i = 0; i < 8; ++i) edges.push_back({i + 1, 0, double(i)});
  edges.push_back({5, 9, 8.0});
  edges.push_back({5, 10, 9.0});
  Tensor x, z;
  if (node_feature_width > 0) {
    x = Tensor(11, node_feature_width);
    for (std::size_t v = 0; v < 11; ++v) {
      for (std::size_t j = 0; j < node_feature_width; ++j) {
        x(v, j) = 0.1 * double((v * 7 + j * 3) % 11) - 0.5;
      }
    }
  }
  if (edge_feature_width > 0) {
    z = Tensor(10, edge_feature_width);
    for (std::size_t e = 0; e < 10; ++e) {
      for (std::size_t j = 0; j < edge_feature_width; ++j) {
        z(e, j) = 0.1 * double((e * 5 + j * 2) % 9) - 0.4;
      }
    }
  }
  return DirectedMultigraph(11, std::move(edges), std::move(x), std::move(z));
}

// Random multigraph without self-loops; each sampled (u, v) pair is repeated
// up to max_multiplicity times. Timestamps are small integers so ties occur.
inline DirectedMultigraph random_multigraph(std::mt19937_64& rng,
                                            int max_nodes, int max_edges,
                                            int max_multiplicity = 3,
                                            bool distinct_times = false) {
  std::uniform_int_distribution<int> n_dist(2, max_nodes);
  const int n = n_dist(rng);
  std::uniform_int_distribution<int> node(0, n - 1);
  std::uniform_int_distribution<int> mult(1, max_multiplicity);
  std::uniform_int_distribution<int> time(0, 20);
  std::uniform_int_distribution<int> m_dist(0, max_edges);
  const int target = m_dist(rng);
  std::vector<Edge> edges;
  while (static_cast<int>(edges.size()) < target) {
    const int u = node(rng);
    const int v = node(rng);
    if (u == v) continue;
    for (int k = mult(rng); k > 0 && static_cast<int>(edges.size()) < target;
         --k) {
      const double t = distinct_times ? double(edges.size()) : time(rng);
      edges.push_back({u, v, t});
    }
  }
  if (distinct_times) std::shuffle(edges.begin(), edges.end(), rng);
  return DirectedMultigraph(n, std::move(edges));
}

}  // namespace grande::testing

#endif  // GRANDE_TESTS_TEST_GRAPHS_H_
