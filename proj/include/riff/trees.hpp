// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Binary decision trees grown best-first under a total split budget.
//
// Three growers share one split-search kernel:
//   * grow_cart: a single tree, gini (or mse) on the labels.
//   * grow_figs: a sum of trees. Each candidate split of tree i is scored by
//     mse on the residual y - sum_{j != i} yhat_j(x); a brand new tree may be
//     started at any iteration.
//   * grow_figu: a union of trees. Instead of residuals, samples that another
//     tree already flags (a leaf with precision >= tau, or that tree's most
//     precise leaf) are left out of the gini computation.
//
// In every mode yhat_j(x) is the positive rate of the leaf x lands in.

#ifndef RIFF_TREES_HPP
#define RIFF_TREES_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riff/data.hpp"

namespace riff {

enum class Criterion { kGini, kMse };

enum class ForestMode {
  kSingle,  // CART
  kSum,     // FIGS
  kUnion,   // FIGU
};

const char* to_string(ForestMode mode);
ForestMode forest_mode_from_string(const std::string& s);

// Rows with x[feature] <= threshold go left. Node ids are indices into
// Tree::nodes; the root is node 0.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::int64_t positive_count = 0;
  std::int64_t total_count = 0;
  // Positive rate of the rows routed here during growth.
  double value = 0.0;
  // Criterion gain recorded when the node was split (internal nodes only).
  double gain = 0.0;

  bool is_leaf() const { return left < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  std::size_t leaf_for(std::span<const double> x) const;
  std::size_t num_splits() const;
  // Leaf node ids in depth-first, left-first order.
  std::vector<std::size_t> leaves() const;
  // Leaf with the highest precision; ties go to more positives, then to the
  // lower node id.
  std::size_t best_precision_leaf() const;
};

struct ForestModel {
  std::vector<Tree> trees;
  ForestMode mode = ForestMode::kSingle;
  double tau = 0.5;
  // Schema of the training data; node features index into it.
  std::vector<std::string> feature_names;

  std::size_t total_splits() const;
};

struct SplitCandidate {
  std::size_t leaf = 0;
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

// Best split of `rows` (positions in `ds`) scored on `targets` (aligned with
// `rows`). Gain is the weighted impurity decrease of the node, scaled by
// |rows| / normalizer (normalizer defaults to |rows|, so for a root the gain
// is the plain impurity decrease). Gini requires 0/1 targets. Returns nullopt
// when no split has strictly positive gain with both children holding at
// least `min_leaf` rows. Ties go to the lowest feature, then the lowest
// threshold.
std::optional<SplitCandidate> best_split(
    const LabeledDataset& ds, std::span<const std::size_t> rows,
    std::span<const double> targets, Criterion criterion,
    std::size_t min_leaf = 1, std::optional<double> normalizer = std::nullopt);

ForestModel grow_cart(const LabeledDataset& ds, std::size_t max_splits,
                      std::size_t min_leaf = 5,
                      Criterion criterion = Criterion::kGini);

// `max_trees` = 0 leaves the number of trees unbounded; 1 disables starting
// new trees.
ForestModel grow_figs(const LabeledDataset& ds, std::size_t max_splits,
                      std::size_t min_leaf = 5, std::size_t max_trees = 0);

ForestModel grow_figu(const LabeledDataset& ds, std::size_t max_splits,
                      std::size_t min_leaf = 5, double tau = 0.5,
                      std::size_t max_trees = 0);

// y - sum over trees j != tree_index of the leaf value x lands in.
double figs_residual(const ForestModel& forest, std::size_t tree_index,
                     std::span<const double> x, int y);

// True iff some tree j != tree_index flags x: x lands in a leaf of j whose
// value is >= tau, or in j's best_precision_leaf().
bool figu_covered(const ForestModel& forest, std::size_t tree_index,
                  std::span<const double> x);

// single: leaf value; sum: sum of leaf values; union: max of leaf values.
double predict(const ForestModel& forest, std::span<const double> x);

std::vector<double> predict_all(const ForestModel& forest,
                                const LabeledDataset& ds);

}  // namespace riff

#endif  // RIFF_TREES_HPP
