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

#include "riff/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "riff/common.hpp"

namespace riff {

namespace {

struct RocPoint {
  double x = 0.0;  // FPR or alert rate
  double recall = 0.0;
};

enum class Axis { kFpr, kAlertRate };

// Operating points for thresholds at every distinct score, highest first,
// starting from the empty flag set at (0, 0).
std::vector<RocPoint> roc_points(std::span<const double> scores,
                                 std::span<const std::uint8_t> labels,
                                 Axis axis) {
  if (scores.size() != labels.size()) {
    throw MetricError("scores and labels differ in length");
  }
  std::size_t pos = 0;
  for (auto l : labels) pos += l ? 1 : 0;
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) {
    throw MetricError("recall at a budget needs both positive and negative rows");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<RocPoint> points = {{0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    for (; i < order.size() && scores[order[i]] == s; ++i) {
      (labels[order[i]] ? tp : fp) += 1;
    }
    const double x = axis == Axis::kFpr
                         ? static_cast<double>(fp) / static_cast<double>(neg)
                         : static_cast<double>(tp + fp) /
                               static_cast<double>(labels.size());
    points.push_back({x, static_cast<double>(tp) / static_cast<double>(pos)});
  }
  return points;
}

double interpolate(const std::vector<RocPoint>& points, double target) {
  // Points are non-decreasing in both coordinates.
  std::size_t last = 0;
  for (std::size_t i = 0; i < points.size() && points[i].x <= target; ++i) last = i;
  if (points[last].x == target || last + 1 == points.size()) {
    return points[last].recall;
  }
  const RocPoint& a = points[last];
  const RocPoint& b = points[last + 1];
  return a.recall + (target - a.x) / (b.x - a.x) * (b.recall - a.recall);
}

void check_target(double target) {
  if (!(target >= 0.0 && target <= 1.0)) {
    throw MetricError("target operating point must lie in [0, 1]");
  }
}

}  // namespace

double recall_at_fpr(std::span<const double> scores,
                     std::span<const std::uint8_t> labels, double fpr_target) {
  check_target(fpr_target);
  return interpolate(roc_points(scores, labels, Axis::kFpr), fpr_target);
}

double recall_at_alert_rate(std::span<const double> scores,
                            std::span<const std::uint8_t> labels,
                            double alert_target) {
  check_target(alert_target);
  return interpolate(roc_points(scores, labels, Axis::kAlertRate), alert_target);
}

double recall_at_budget(std::span<const double> scores,
                        std::span<const std::uint8_t> labels,
                        const BudgetConstraint& budget) {
  return budget.metric == BudgetMetric::kFpr
             ? recall_at_fpr(scores, labels, budget.max_value)
             : recall_at_alert_rate(scores, labels, budget.max_value);
}

MetricsReport evaluate_rules(std::span<const Rule> rules,
                             const LabeledDataset& ds,
                             const BudgetConstraint& budget,
                             std::string split_name, std::uint64_t seed) {
  if (ds.empty()) throw MetricError("cannot evaluate rules on an empty split");
  for (std::size_t i = 0; i + 1 < rules.size(); ++i) {
    if (rules[i].probability != 1.0) {
      throw SchemaError("only the last rule of a rule set may fire with "
                        "probability below 1");
    }
  }
  MetricsReport report;
  report.split_name = std::move(split_name);
  report.seed = seed;
  report.rule_count = rules.size();
  const double rho = rules.empty() ? 1.0 : rules.back().probability;
  if (!(rho >= 0.0 && rho <= 1.0)) {
    throw SchemaError("rule probability must lie in [0, 1]");
  }
  report.expected = rho > 0.0 && rho < 1.0;

  auto recall = [&](std::span<const Rule> r) {
    return ds.num_positives() ? tpr(r, ds) : 0.0;
  };
  auto spend = [&](std::span<const Rule> r) {
    if (budget.metric == BudgetMetric::kFpr && ds.num_negatives() == 0) return 0.0;
    return budget_value(r, ds, budget.metric);
  };
  const auto prefix = rules.empty() ? rules : rules.first(rules.size() - 1);
  const double recall_full = recall(rules);
  const double recall_prefix = recall(prefix);
  report.conservative_recall = rho == 1.0 ? recall_full : recall_prefix;
  report.recall_at_budget = (1.0 - rho) * recall_prefix + rho * recall_full;
  report.budget_metric_value = (1.0 - rho) * spend(prefix) + rho * spend(rules);
  return report;
}

MetricsReport evaluate_ruleset(const SelectionResult& result,
                               const LabeledDataset& ds,
                               const BudgetConstraint& budget,
                               std::string split_name, std::uint64_t seed) {
  const std::vector<Rule> rules = result.randomized_rules();
  return evaluate_rules(rules, ds, budget, std::move(split_name), seed);
}

MetricsReport evaluate_scores(std::span<const double> scores,
                              const LabeledDataset& ds,
                              const BudgetConstraint& budget,
                              std::string split_name, std::uint64_t seed) {
  MetricsReport report;
  report.is_rule_set = false;
  report.split_name = std::move(split_name);
  report.seed = seed;
  report.recall_at_budget = recall_at_budget(scores, ds.labels(), budget);
  report.conservative_recall = report.recall_at_budget;
  report.budget_metric_value = budget.max_value;
  report.expected = true;
  return report;
}

MetricSummary summarize(std::span<const double> values) {
  if (values.empty()) throw MetricError("cannot summarize an empty list");
  MetricSummary s;
  s.n = values.size();
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(s.n);
  if (s.n == 1) {
    s.single_run = true;
    return s;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  return s;
}

AggregateReport aggregate_runs(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw MetricError("no reports to aggregate");
  std::vector<double> recall, budget, conservative, rules;
  for (const auto& r : reports) {
    recall.push_back(r.recall_at_budget);
    budget.push_back(r.budget_metric_value);
    conservative.push_back(r.conservative_recall);
    rules.push_back(static_cast<double>(r.rule_count));
  }
  return AggregateReport{summarize(recall), summarize(budget),
                         summarize(conservative), summarize(rules)};
}

std::vector<double> load_scores(const std::filesystem::path& path,
                                const LabeledDataset& ds) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("score file has no header");
  std::unordered_map<RowId, double> by_id;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw DataError("score file line " + std::to_string(line_no) +
                      " lacks a comma");
    }
    RowId id = 0;
    double score = 0.0;
    auto r1 = std::from_chars(line.data(), line.data() + comma, id);
    auto r2 = std::from_chars(line.data() + comma + 1,
                              line.data() + line.size(), score);
    if (r1.ec != std::errc() || r2.ec != std::errc() ||
        r2.ptr != line.data() + line.size()) {
      throw DataError("unparseable score file line " + std::to_string(line_no));
    }
    by_id[id] = score;
  }
  std::vector<double> scores(ds.num_rows());
  for (std::size_t r = 0; r < ds.num_rows(); ++r) {
    auto it = by_id.find(ds.row_id(r));
    if (it == by_id.end()) {
      throw DataError("score file has no score for row id " +
                      std::to_string(ds.row_id(r)));
    }
    scores[r] = it->second;
  }
  return scores;
}

}  // namespace riff
