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

// Labeled edge datasets: signed trust networks, synthetic sink-hub graphs and
// generic edge lists, each with a chronological train/validation/test split.

#ifndef GRANDE_DATASET_H_
#define GRANDE_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "grande/graph.h"
#include "grande/train.h"

namespace grande {

struct DatasetBundle {
  std::string name;
  /// Edge ids ascend with timestamp.
  DirectedMultigraph graph;
  Splits splits;
};

/// Splits the labeled edges by (timestamp, id): the first round(0.7 n) train,
/// the next round(0.1 n) validate and the rest test.
Splits chronological_split(const DirectedMultigraph& g,
                           double train_fraction = 0.7,
                           double validation_fraction = 0.1);

/// One-hot in-degree then one-hot out-degree, buckets 0..cap plus one
/// overflow bucket each (width 2 * (cap + 2)).
Tensor degree_one_hot(const DirectedMultigraph& g, std::size_t cap = 99);

/// Reads "source,target,rating,time" lines. Ratings are integers in
/// [-10, 10] and only set the label (1 iff negative). Node ids are
/// renumbered densely in ascending raw id; edges are ordered by time, ties
/// by line. Edge features are a constant 1.
DatasetBundle load_bitcoin(const std::filesystem::path& path,
                           std::size_t degree_cap = 99);

/// Edge list with optional label column and feature sidecars (see
/// read_edge_list); edges are re-ordered by time. Missing features become a
/// constant 1 column.
DatasetBundle load_edge_list(const std::filesystem::path& path);

struct SyntheticSpec {
  std::size_t nodes = 500;
  std::size_t edges = 2000;
  /// Fraction of nodes that never send.
  double sink_fraction = 0.1;
  /// Probability that an edge goes to a sink.
  double sink_edge_probability = 0.3;
  /// Heads are drawn with weight 1 / (rank + 1)^skew within each pool.
  double skew = 1.0;
};

/// 1 iff the edge's head has out-degree 0 and in-degree >= 3.
std::vector<EdgeLabel> sink_hub_labels(const DirectedMultigraph& g);

/// Random multigraph labeled by sink_hub_labels, timestamps 0..m-1 in edge
/// order, constant node and edge features. Deterministic in seed.
DatasetBundle generate_synthetic(const SyntheticSpec& spec,
                                 std::uint64_t seed);

}  // namespace grande

#endif  // GRANDE_DATASET_H_
