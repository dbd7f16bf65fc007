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

// Test-only helpers: random generators and brute-force reference
// implementations that share no code with the library internals.

#ifndef RIFF_TESTS_SUPPORT_HPP
#define RIFF_TESTS_SUPPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "riff/data.hpp"
#include "riff/pipeline.hpp"
#include "riff/rules.hpp"
#include "riff/selection.hpp"
#include "riff/trees.hpp"

namespace riff::test {

inline LabeledDataset make_dataset(std::vector<std::vector<double>> rows,
                                   std::vector<std::uint8_t> labels,
                                   std::vector<std::string> names = {}) {
  const std::size_t d = rows.empty() ? names.size() : rows.front().size();
  if (names.empty()) {
    for (std::size_t f = 0; f < d; ++f) names.push_back("x" + std::to_string(f));
  }
  std::vector<double> flat;
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return LabeledDataset(names, flat, labels);
}

// Rows with integer-valued features in [0, levels) so that ties and repeated
// values are common. Labels follow a noisy OR of two threshold events.
inline LabeledDataset random_dataset(std::mt19937_64& rng, std::size_t n,
                                     std::size_t d, int levels = 8,
                                     double noise = 0.1) {
  std::uniform_int_distribution<int> value(0, levels - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<std::vector<double>> rows(n, std::vector<double>(d));
  std::vector<std::uint8_t> labels(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t f = 0; f < d; ++f) rows[r][f] = value(rng);
    bool y = rows[r][0] >= levels - 2;
    if (d > 1) y = y || rows[r][1] <= 0;
    if (unit(rng) < noise) y = !y;
    labels[r] = y ? 1 : 0;
  }
  return make_dataset(rows, labels);
}

inline Rule random_rule(std::mt19937_64& rng, const LabeledDataset& ds,
                        int max_conditions, int levels) {
  std::uniform_int_distribution<int> count(0, max_conditions);
  std::uniform_int_distribution<std::size_t> feature(0, ds.num_features() - 1);
  std::uniform_int_distribution<int> value(-1, levels);
  std::bernoulli_distribution coin(0.5);
  Rule rule;
  const int k = count(rng);
  for (int i = 0; i < k; ++i) {
    rule.conditions.push_back(Condition{ds.feature_names()[feature(rng)],
                                        coin(rng) ? Op::kLessEqual : Op::kGreater,
                                        value(rng) + 0.5});
  }
  return rule;
}

// Direct evaluation of a conjunction by feature name.
inline bool oracle_covers(const Rule& rule, const LabeledDataset& ds,
                          std::size_t r) {
  for (const auto& c : rule.conditions) {
    const double v = ds.value(r, *ds.feature_index(c.feature));
    const bool ok = c.op == Op::kLessEqual ? v <= c.threshold : v > c.threshold;
    if (!ok) return false;
  }
  return true;
}

// Node impurity times node size, computed from the definitions.
inline double weighted_impurity(const std::vector<double>& y, Criterion c) {
  if (y.empty()) return 0.0;
  const double n = static_cast<double>(y.size());
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= n;
  if (c == Criterion::kGini) return n * (1.0 - mean * mean - (1.0 - mean) * (1.0 - mean));
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  return ss;
}

struct OracleSplit {
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;
};

// Enumerates every feature and every gap between adjacent distinct values.
inline std::optional<OracleSplit> oracle_best_split(
    const LabeledDataset& ds, const std::vector<std::size_t>& rows,
    const std::vector<double>& targets, Criterion c, std::size_t min_leaf,
    double normalizer) {
  std::vector<double> all(targets);
  const double parent = weighted_impurity(all, c);
  std::optional<OracleSplit> best;
  for (std::size_t f = 0; f < ds.num_features(); ++f) {
    std::set<double> values;
    for (auto r : rows) values.insert(ds.value(r, f));
    for (auto it = values.begin(); it != values.end() && std::next(it) != values.end(); ++it) {
      const double lo = *it;
      const double hi = *std::next(it);
      double t = lo + (hi - lo) / 2.0;
      if (!(t < hi) || t < lo) t = lo;
      std::vector<double> left, right;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        (ds.value(rows[i], f) <= t ? left : right).push_back(targets[i]);
      }
      if (left.size() < min_leaf || right.size() < min_leaf) continue;
      const double gain = (parent - weighted_impurity(left, c) -
                           weighted_impurity(right, c)) / normalizer;
      if (gain <= 1e-9) continue;
      if (!best || gain > best->gain + 1e-9) best = OracleSplit{f, t, gain};
    }
  }
  return best;
}

// Reference greedy selection: rescans every candidate against the
// remaining rows at each step using exact rational comparison.
struct OracleStep {
  std::size_t candidate;
  std::int64_t tp;
  std::int64_t fp;
};

inline std::vector<OracleStep> oracle_greedy(const std::vector<Rule>& rules,
                                             const LabeledDataset& ds,
                                             const BudgetConstraint& budget,
                                             bool* exhausted) {
  std::vector<bool> removed(ds.num_rows(), false), used(rules.size(), false);
  std::vector<OracleStep> steps;
  std::int64_t pos = 0, neg = 0;
  const auto value = [&] {
    return budget.metric == BudgetMetric::kFpr
               ? static_cast<double>(neg) / static_cast<double>(ds.num_negatives())
               : static_cast<double>(pos + neg) / static_cast<double>(ds.num_rows());
  };
  *exhausted = false;
  while (value() < budget.max_value) {
    std::optional<OracleStep> best;
    for (std::size_t c = 0; c < rules.size(); ++c) {
      if (used[c]) continue;
      std::int64_t tp = 0, fp = 0;
      for (std::size_t r = 0; r < ds.num_rows(); ++r) {
        if (removed[r] || !oracle_covers(rules[c], ds, r)) continue;
        (ds.label(r) ? tp : fp) += 1;
      }
      if (tp + fp == 0) continue;
      if (best) {
        // Precision compared by cross products.
        const auto a = tp * (best->tp + best->fp);
        const auto b = best->tp * (tp + fp);
        if (a < b) continue;
        if (a == b && (tp < best->tp || (tp == best->tp && fp >= best->fp))) continue;
      }
      best = OracleStep{c, tp, fp};
    }
    if (!best) {
      *exhausted = true;
      break;
    }
    used[best->candidate] = true;
    for (std::size_t r = 0; r < ds.num_rows(); ++r) {
      if (oracle_covers(rules[best->candidate], ds, r)) removed[r] = true;
    }
    pos += best->tp;
    neg += best->fp;
    steps.push_back(*best);
  }
  return steps;
}

// Per-leaf row sets of a tree obtained by routing every row.
inline std::vector<std::set<std::size_t>> routed_rows(const Tree& tree,
                                                      const LabeledDataset& ds) {
  std::vector<std::set<std::size_t>> out(tree.nodes.size());
  for (std::size_t r = 0; r < ds.num_rows(); ++r) {
    std::size_t node = 0;
    while (!tree.nodes[node].is_leaf()) {
      const auto& n = tree.nodes[node];
      node = static_cast<std::size_t>(
          ds.value(r, static_cast<std::size_t>(n.feature)) <= n.threshold ? n.left
                                                                          : n.right);
    }
    out[node].insert(r);
  }
  return out;
}

inline bool same_structure(const Tree& a, const Tree& b) {
  if (a.nodes.size() != b.nodes.size()) return false;
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    const auto& x = a.nodes[i];
    const auto& y = b.nodes[i];
    if (x.feature != y.feature || x.threshold != y.threshold || x.left != y.left ||
        x.right != y.right || x.total_count != y.total_count ||
        x.positive_count != y.positive_count) {
      return false;
    }
  }
  return true;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Synthetic credit-style table: a rare positive class driven by a few
// interacting features plus noise columns.
inline void write_synthetic_csv(const std::filesystem::path& path, std::size_t n,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::ofstream out(path);
  out << "id,limit,pay_0,pay_2,bill,age,segment,default\n";
  for (std::size_t i = 0; i < n; ++i) {
    const double limit = std::round(50 + 40 * std::abs(z(rng)));
    const int pay0 = static_cast<int>(std::floor(u(rng) * 5)) - 1;
    const int pay2 = static_cast<int>(std::floor(u(rng) * 5)) - 1;
    const double bill = std::round(1000 * u(rng));
    const int age = 20 + static_cast<int>(u(rng) * 50);
    const char* segment = u(rng) < 0.6 ? "retail" : (u(rng) < 0.5 ? "sme" : "corp");
    double p = 0.03;
    if (pay0 >= 2) p += 0.5;
    if (pay2 >= 2 && limit < 70) p += 0.3;
    const int y = u(rng) < p ? 1 : 0;
    out << i << ',' << limit << ',' << pay0 << ',' << pay2 << ',' << bill << ','
        << age << ',' << segment << ',' << y << '\n';
  }
}

// Brute-force best-precision leaf.
inline std::size_t oracle_best_leaf(const Tree& t) {
  std::optional<std::size_t> best;
  for (std::size_t n = 0; n < t.nodes.size(); ++n) {
    const auto& c = t.nodes[n];
    if (!c.is_leaf() || c.total_count == 0) continue;
    if (!best) {
      best = n;
      continue;
    }
    const auto& b = t.nodes[*best];
    const long double pc = static_cast<long double>(c.positive_count) / c.total_count;
    const long double pb = static_cast<long double>(b.positive_count) / b.total_count;
    if (pc > pb || (pc == pb && c.positive_count > b.positive_count)) best = n;
  }
  return best.value_or(0);
}

inline bool oracle_discarded(const ForestModel& f, std::size_t i, std::span<const double> x) {
  for (std::size_t j = 0; j < f.trees.size(); ++j) {
    if (j == i) continue;
    const Tree& t = f.trees[j];
    std::size_t k = 0;
    while (!t.nodes[k].is_leaf()) {
      const auto& nd = t.nodes[k];
      k = static_cast<std::size_t>(x[static_cast<std::size_t>(nd.feature)] <= nd.threshold
                                       ? nd.left
                                       : nd.right);
    }
    if (t.nodes[k].value >= f.tau || k == oracle_best_leaf(t)) return true;
  }
  return false;
}

// Small experiment over a synthetic CSV written into `dir`.
inline ExperimentConfig synthetic_config(const std::filesystem::path& dir,
                                         std::size_t rows = 3000) {
  std::filesystem::create_directories(dir);
  write_synthetic_csv(dir / "synthetic.csv", rows, 99);
  ExperimentConfig c;
  c.dataset_path = dir / "synthetic.csv";
  c.csv.label_column = "default";
  c.csv.id_column = "id";
  c.sample_ratio = 0.5;
  c.target_positive_rate = 0.3;
  c.budget = BudgetConstraint{BudgetMetric::kFpr, 0.05};
  c.models = {{ModelKind::kCart}, {ModelKind::kFigs}, {ModelKind::kFigu}};
  c.grid = {2, 4, 8};
  c.seeds = {0, 1};
  c.out_dir = dir / "runs";
  return c;
}

}  // namespace riff::test

#endif  // RIFF_TESTS_SUPPORT_HPP
