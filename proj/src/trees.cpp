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

#include "riff/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "riff/common.hpp"

namespace riff {

const char* to_string(ForestMode mode) {
  switch (mode) {
    case ForestMode::kSingle:
      return "single";
    case ForestMode::kSum:
      return "sum";
    case ForestMode::kUnion:
      return "union";
  }
  return "?";
}

ForestMode forest_mode_from_string(const std::string& s) {
  if (s == "single") return ForestMode::kSingle;
  if (s == "sum") return ForestMode::kSum;
  if (s == "union") return ForestMode::kUnion;
  throw SchemaError("unknown forest mode '" + s + "'");
}

std::size_t Tree::leaf_for(std::span<const double> x) const {
  std::size_t n = 0;
  while (!nodes[n].is_leaf()) {
    const TreeNode& node = nodes[n];
    n = static_cast<std::size_t>(
        x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                    : node.right);
  }
  return n;
}

std::size_t Tree::num_splits() const {
  return static_cast<std::size_t>(std::count_if(
      nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
}

std::vector<std::size_t> Tree::leaves() const {
  std::vector<std::size_t> out;
  if (nodes.empty()) return out;
  std::vector<std::size_t> stack = {0};
  while (!stack.empty()) {
    std::size_t n = stack.back();
    stack.pop_back();
    if (nodes[n].is_leaf()) {
      out.push_back(n);
    } else {
      stack.push_back(static_cast<std::size_t>(nodes[n].right));
      stack.push_back(static_cast<std::size_t>(nodes[n].left));
    }
  }
  return out;
}

std::size_t Tree::best_precision_leaf() const {
  std::size_t best = 0;
  bool found = false;
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const TreeNode& c = nodes[n];
    if (!c.is_leaf() || c.total_count == 0) continue;
    if (!found) {
      best = n;
      found = true;
      continue;
    }
    const TreeNode& b = nodes[best];
    // Exact comparison of pos/total fractions.
    const std::int64_t lhs = c.positive_count * b.total_count;
    const std::int64_t rhs = b.positive_count * c.total_count;
    if (lhs > rhs || (lhs == rhs && c.positive_count > b.positive_count)) {
      best = n;
    }
  }
  return best;
}

std::size_t ForestModel::total_splits() const {
  std::size_t total = 0;
  for (const auto& t : trees) total += t.num_splits();
  return total;
}

// ---------------------------------------------------------------------------
// Split search kernel

namespace {

// Relative margin a later candidate needs to displace an earlier one, so that
// floating-point noise cannot override the documented tie-break.
constexpr double kTieTolerance = 1e-12;

bool improves(double gain, double best) {
  return gain > best + kTieTolerance * std::abs(best);
}

// Row positions of `ds` sorted by each feature value (stable on position).
class SortedColumns {
 public:
  explicit SortedColumns(const LabeledDataset& ds) : order_(ds.num_features()) {
    for (std::size_t f = 0; f < ds.num_features(); ++f) {
      auto& o = order_[f];
      o.resize(ds.num_rows());
      std::iota(o.begin(), o.end(), std::size_t{0});
      std::stable_sort(o.begin(), o.end(), [&](std::size_t a, std::size_t b) {
        return ds.value(a, f) < ds.value(b, f);
      });
    }
  }
  const std::vector<std::size_t>& operator[](std::size_t f) const {
    return order_[f];
  }

 private:
  std::vector<std::vector<std::size_t>> order_;
};

// Impurity terms, written so that gain = term(parent) - term(left) -
// term(right) is the un-normalized weighted impurity decrease.
//   gini: n * gini(p) = 2 s (n - s) / n
//   mse:  SSE = sum(y^2) - s^2 / n; the sum of squares cancels.
double impurity_term(Criterion c, double n, double s) {
  if (c == Criterion::kGini) return 2.0 * s * (n - s) / n;
  return -s * s / n;
}

double raw_gain(Criterion c, double n, double s, double nl, double sl) {
  const double nr = n - nl;
  const double sr = s - sl;
  return impurity_term(c, n, s) - impurity_term(c, nl, sl) -
         impurity_term(c, nr, sr);
}

bool strictly_positive(Criterion c, double raw, double n, double s, double nl,
                       double sl) {
  double scale = n;
  if (c == Criterion::kMse) {
    scale = 1.0 + s * s / n + sl * sl / nl + (s - sl) * (s - sl) / (n - nl);
  }
  return raw > 1e-12 * scale;
}

struct SlotTotals {
  double n = 0.0;
  double s = 0.0;
};

// Finds the best split for every slot at once. slot_of_row[r] names the slot
// (leaf) row r belongs to, or -1 if the row is excluded; targets are indexed
// by row position.
std::vector<std::optional<SplitCandidate>> search_slots(
    const LabeledDataset& ds, const SortedColumns& sorted,
    std::span<const int> slot_of_row, std::size_t num_slots,
    std::span<const double> targets, Criterion criterion, std::size_t min_leaf,
    double normalizer) {
  std::vector<SlotTotals> totals(num_slots);
  for (std::size_t r = 0; r < slot_of_row.size(); ++r) {
    if (slot_of_row[r] < 0) continue;
    auto& t = totals[static_cast<std::size_t>(slot_of_row[r])];
    t.n += 1.0;
    t.s += targets[r];
  }

  std::vector<std::optional<SplitCandidate>> best(num_slots);
  struct ScanState {
    double n = 0.0;
    double s = 0.0;
    double prev = 0.0;
  };
  std::vector<ScanState> state(num_slots);
  const double min_rows = static_cast<double>(std::max<std::size_t>(min_leaf, 1));

  for (std::size_t f = 0; f < ds.num_features(); ++f) {
    std::fill(state.begin(), state.end(), ScanState{});
    for (std::size_t r : sorted[f]) {
      const int slot = slot_of_row[r];
      if (slot < 0) continue;
      const auto k = static_cast<std::size_t>(slot);
      ScanState& st = state[k];
      const double v = ds.value(r, f);
      const SlotTotals& tot = totals[k];
      if (st.n > 0.0 && v > st.prev && st.n >= min_rows &&
          tot.n - st.n >= min_rows) {
        const double raw = raw_gain(criterion, tot.n, tot.s, st.n, st.s);
        if (strictly_positive(criterion, raw, tot.n, tot.s, st.n, st.s)) {
          const double gain = raw / normalizer;
          if (!best[k] || improves(gain, best[k]->gain)) {
            double threshold = 0.5 * st.prev + 0.5 * v;
            if (!(threshold < v) || threshold < st.prev) threshold = st.prev;
            best[k] = SplitCandidate{k, f, threshold, gain};
          }
        }
      }
      st.n += 1.0;
      st.s += targets[r];
      st.prev = v;
    }
  }
  return best;
}

}  // namespace

std::optional<SplitCandidate> best_split(const LabeledDataset& ds,
                                         std::span<const std::size_t> rows,
                                         std::span<const double> targets,
                                         Criterion criterion,
                                         std::size_t min_leaf,
                                         std::optional<double> normalizer) {
  if (rows.size() != targets.size()) {
    throw ModelError("best_split: rows and targets differ in length");
  }
  if (rows.empty()) return std::nullopt;
  std::vector<std::size_t> positions(rows.begin(), rows.end());
  const LabeledDataset subset = ds.select_rows(positions);
  const SortedColumns sorted(subset);
  std::vector<int> slots(rows.size(), 0);
  auto result = search_slots(subset, sorted, slots, 1, targets, criterion,
                             min_leaf,
                             normalizer.value_or(static_cast<double>(rows.size())));
  return result[0];
}

// ---------------------------------------------------------------------------
// Best-first growth

namespace {

struct GrowSettings {
  ForestMode mode = ForestMode::kSingle;
  Criterion criterion = Criterion::kGini;
  std::size_t max_splits = 0;
  std::size_t min_leaf = 5;
  std::size_t max_trees = 1;  // 0 = unbounded
  double tau = 0.5;
};

class ForestGrower {
 public:
  ForestGrower(const LabeledDataset& ds, const GrowSettings& settings)
      : ds_(ds), settings_(settings), sorted_(ds) {
    forest_.mode = settings.mode;
    forest_.tau = settings.tau;
    forest_.feature_names = ds.feature_names();
    labels_.reserve(ds.num_rows());
    for (std::size_t r = 0; r < ds.num_rows(); ++r) {
      labels_.push_back(static_cast<double>(ds.label(r)));
    }
  }

  ForestModel run() {
    if (settings_.mode == ForestMode::kSingle) add_tree();
    while (forest_.total_splits() < settings_.max_splits) {
      if (!step()) break;
    }
    if (forest_.trees.empty()) add_tree();
    return std::move(forest_);
  }

 private:
  struct Choice {
    std::size_t tree = 0;  // == trees.size() for a new tree
    SplitCandidate split;
  };

  std::size_t num_rows() const { return ds_.num_rows(); }

  void add_tree() {
    Tree t;
    TreeNode root;
    root.total_count = static_cast<std::int64_t>(num_rows());
    root.positive_count = static_cast<std::int64_t>(ds_.num_positives());
    root.value = ds_.positive_rate();
    t.nodes.push_back(root);
    forest_.trees.push_back(std::move(t));
    assignment_.emplace_back(num_rows(), 0);
  }

  // Per-row leaf value of tree t.
  double tree_value(std::size_t t, std::size_t r) const {
    return forest_.trees[t].nodes[assignment_[t][r]].value;
  }

  bool new_trees_allowed() const {
    if (settings_.mode == ForestMode::kSingle) return false;
    return settings_.max_trees == 0 ||
           forest_.trees.size() < settings_.max_trees;
  }

  // Per-row flag for FIGU: row lands in a leaf of tree t with value >= tau
  // or in t's most precise leaf.
  std::vector<std::uint8_t> flags_for(std::size_t t) const {
    const Tree& tree = forest_.trees[t];
    const std::size_t best_leaf = tree.best_precision_leaf();
    std::vector<std::uint8_t> leaf_flag(tree.nodes.size(), 0);
    for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
      const TreeNode& node = tree.nodes[n];
      if (node.is_leaf() &&
          (node.value >= settings_.tau || n == best_leaf)) {
        leaf_flag[n] = 1;
      }
    }
    std::vector<std::uint8_t> out(num_rows());
    for (std::size_t r = 0; r < num_rows(); ++r) {
      out[r] = leaf_flag[assignment_[t][r]];
    }
    return out;
  }

  // Evaluates every candidate and applies the best one. Returns false when
  // no candidate has positive gain.
  bool step() {
    const std::size_t num_trees = forest_.trees.size();
    const double normalizer = static_cast<double>(num_rows());

    // Shared per-row aggregates over existing trees.
    std::vector<double> sum_pred(num_rows(), 0.0);
    std::vector<int> flag_count(num_rows(), 0);
    std::vector<std::vector<std::uint8_t>> flags;
    if (settings_.mode == ForestMode::kSum) {
      for (std::size_t t = 0; t < num_trees; ++t) {
        for (std::size_t r = 0; r < num_rows(); ++r) sum_pred[r] += tree_value(t, r);
      }
    } else if (settings_.mode == ForestMode::kUnion) {
      for (std::size_t t = 0; t < num_trees; ++t) {
        flags.push_back(flags_for(t));
        for (std::size_t r = 0; r < num_rows(); ++r) flag_count[r] += flags[t][r];
      }
    }

    std::optional<Choice> best;
    std::vector<double> targets(num_rows());
    std::vector<int> slots(num_rows());

    auto consider = [&](std::size_t t, std::size_t num_slots) {
      auto found = search_slots(ds_, sorted_, slots, num_slots, targets,
                                settings_.criterion, settings_.min_leaf,
                                normalizer);
      // Slots are node ids; scanning them in order gives the node-id
      // tie-break.
      for (auto& cand : found) {
        if (cand && (!best || improves(cand->gain, best->split.gain))) {
          best = Choice{t, *cand};
        }
      }
    };

    for (std::size_t t = 0; t < num_trees; ++t) {
      const Tree& tree = forest_.trees[t];
      for (std::size_t r = 0; r < num_rows(); ++r) {
        const std::size_t node = assignment_[t][r];
        slots[r] = tree.nodes[node].is_leaf() ? static_cast<int>(node) : -1;
        switch (settings_.mode) {
          case ForestMode::kSingle:
            targets[r] = labels_[r];
            break;
          case ForestMode::kSum:
            targets[r] = labels_[r] - (sum_pred[r] - tree_value(t, r));
            break;
          case ForestMode::kUnion:
            targets[r] = labels_[r];
            if (flag_count[r] - flags[t][r] > 0) slots[r] = -1;
            break;
        }
      }
      consider(t, tree.nodes.size());
    }

    if (new_trees_allowed()) {
      for (std::size_t r = 0; r < num_rows(); ++r) {
        slots[r] = 0;
        switch (settings_.mode) {
          case ForestMode::kSum:
            targets[r] = labels_[r] - sum_pred[r];
            break;
          default:
            targets[r] = labels_[r];
            if (flag_count[r] > 0) slots[r] = -1;
            break;
        }
      }
      consider(num_trees, 1);
    }

    if (!best) return false;
    if (best->tree == num_trees) add_tree();
    apply(best->tree, best->split);
    return true;
  }

  void apply(std::size_t t, const SplitCandidate& split) {
    Tree& tree = forest_.trees[t];
    const std::size_t parent = split.leaf;
    const int left = static_cast<int>(tree.nodes.size());
    const int right = left + 1;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    TreeNode& p = tree.nodes[parent];
    p.feature = static_cast<int>(split.feature);
    p.threshold = split.threshold;
    p.left = left;
    p.right = right;
    p.gain = split.gain;
    TreeNode& l = tree.nodes[static_cast<std::size_t>(left)];
    TreeNode& rn = tree.nodes[static_cast<std::size_t>(right)];
    auto& assign = assignment_[t];
    for (std::size_t r = 0; r < num_rows(); ++r) {
      if (assign[r] != parent) continue;
      const bool go_left = ds_.value(r, split.feature) <= split.threshold;
      TreeNode& child = go_left ? l : rn;
      assign[r] = static_cast<std::size_t>(go_left ? left : right);
      child.total_count += 1;
      child.positive_count += ds_.label(r);
    }
    for (TreeNode* c : {&l, &rn}) {
      c->value = c->total_count > 0
                     ? static_cast<double>(c->positive_count) /
                           static_cast<double>(c->total_count)
                     : 0.0;
    }
  }

  const LabeledDataset& ds_;
  GrowSettings settings_;
  SortedColumns sorted_;
  std::vector<double> labels_;
  ForestModel forest_;
  // assignment_[t][r]: node of tree t that row r currently sits in.
  std::vector<std::vector<std::size_t>> assignment_;
};

void check_grow_args(const LabeledDataset& ds, std::size_t max_splits) {
  if (ds.empty()) throw ModelError("cannot grow a tree on an empty dataset");
  if (max_splits < 1) throw ModelError("split budget must be at least 1");
}

}  // namespace

ForestModel grow_cart(const LabeledDataset& ds, std::size_t max_splits,
                      std::size_t min_leaf, Criterion criterion) {
  check_grow_args(ds, max_splits);
  GrowSettings s;
  s.mode = ForestMode::kSingle;
  s.criterion = criterion;
  s.max_splits = max_splits;
  s.min_leaf = min_leaf;
  s.max_trees = 1;
  return ForestGrower(ds, s).run();
}

ForestModel grow_figs(const LabeledDataset& ds, std::size_t max_splits,
                      std::size_t min_leaf, std::size_t max_trees) {
  check_grow_args(ds, max_splits);
  GrowSettings s;
  s.mode = ForestMode::kSum;
  s.criterion = Criterion::kMse;
  s.max_splits = max_splits;
  s.min_leaf = min_leaf;
  s.max_trees = max_trees;
  return ForestGrower(ds, s).run();
}

ForestModel grow_figu(const LabeledDataset& ds, std::size_t max_splits,
                      std::size_t min_leaf, double tau, std::size_t max_trees) {
  check_grow_args(ds, max_splits);
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  GrowSettings s;
  s.mode = ForestMode::kUnion;
  s.criterion = Criterion::kGini;
  s.max_splits = max_splits;
  s.min_leaf = min_leaf;
  s.max_trees = max_trees;
  s.tau = tau;
  return ForestGrower(ds, s).run();
}

// ---------------------------------------------------------------------------
// Inference

namespace {

void check_tree_index(const ForestModel& forest, std::size_t tree_index) {
  if (tree_index >= forest.trees.size()) {
    throw ModelError("tree index " + std::to_string(tree_index) +
                     " out of range for a forest of " +
                     std::to_string(forest.trees.size()) + " trees");
  }
}

}  // namespace

double figs_residual(const ForestModel& forest, std::size_t tree_index,
                     std::span<const double> x, int y) {
  if (forest.mode != ForestMode::kSum) {
    throw ModelError("figs_residual requires a sum-mode forest");
  }
  check_tree_index(forest, tree_index);
  double others = 0.0;
  for (std::size_t j = 0; j < forest.trees.size(); ++j) {
    if (j == tree_index) continue;
    const Tree& t = forest.trees[j];
    others += t.nodes[t.leaf_for(x)].value;
  }
  return static_cast<double>(y) - others;
}

bool figu_covered(const ForestModel& forest, std::size_t tree_index,
                  std::span<const double> x) {
  if (forest.mode != ForestMode::kUnion) {
    throw ModelError("figu_covered requires a union-mode forest");
  }
  check_tree_index(forest, tree_index);
  for (std::size_t j = 0; j < forest.trees.size(); ++j) {
    if (j == tree_index) continue;
    const Tree& t = forest.trees[j];
    const std::size_t leaf = t.leaf_for(x);
    if (t.nodes[leaf].value >= forest.tau || leaf == t.best_precision_leaf()) {
      return true;
    }
  }
  return false;
}

double predict(const ForestModel& forest, std::span<const double> x) {
  if (forest.trees.empty()) throw ModelError("cannot predict with an empty forest");
  double out = 0.0;
  for (std::size_t j = 0; j < forest.trees.size(); ++j) {
    const Tree& t = forest.trees[j];
    const double v = t.nodes[t.leaf_for(x)].value;
    switch (forest.mode) {
      case ForestMode::kSingle:
        return v;
      case ForestMode::kSum:
        out += v;
        break;
      case ForestMode::kUnion:
        out = j == 0 ? v : std::max(out, v);
        break;
    }
  }
  return out;
}

std::vector<double> predict_all(const ForestModel& forest,
                                const LabeledDataset& ds) {
  std::vector<std::size_t> columns;
  columns.reserve(forest.feature_names.size());
  for (const auto& name : forest.feature_names) {
    auto idx = ds.feature_index(name);
    if (!idx) throw SchemaError("dataset lacks model feature '" + name + "'");
    columns.push_back(*idx);
  }
  std::vector<double> scores(ds.num_rows());
  std::vector<double> x(columns.size());
  for (std::size_t r = 0; r < ds.num_rows(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) x[c] = ds.value(r, columns[c]);
    scores[r] = predict(forest, x);
  }
  return scores;
}

}  // namespace riff
