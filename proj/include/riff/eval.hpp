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

// Recall at a fixed FPR (or alert rate) for scoring models and rule sets.

#ifndef RIFF_EVAL_HPP
#define RIFF_EVAL_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "riff/data.hpp"
#include "riff/rules.hpp"
#include "riff/selection.hpp"

namespace riff {

struct MetricsReport {
  // Expected recall (TPR) at the operating point.
  double recall_at_budget = 0.0;
  // Expected budget metric (FPR or alert rate) on the evaluated split.
  double budget_metric_value = 0.0;
  // Recall of S_{l-1}, i.e. without the randomized last rule.
  double conservative_recall = 0.0;
  std::size_t rule_count = 0;
  // True when the last rule fires with a probability strictly inside (0, 1).
  bool expected = false;
  bool is_rule_set = true;
  std::string split_name;
  std::uint64_t seed = 0;
};

// Builds the ROC step set over distinct score values (tied rows flip
// together) and linearly interpolates recall at `fpr_target`. At an exact
// hit the highest recall at that FPR is returned. Throws MetricError unless
// both classes are present.
double recall_at_fpr(std::span<const double> scores,
                     std::span<const std::uint8_t> labels, double fpr_target);

// Same sweep with the alert rate (fraction of all rows flagged) on the x
// axis.
double recall_at_alert_rate(std::span<const double> scores,
                            std::span<const std::uint8_t> labels,
                            double alert_target);

double recall_at_budget(std::span<const double> scores,
                        std::span<const std::uint8_t> labels,
                        const BudgetConstraint& budget);

// Expected recall and budget metric of a selection applied to `ds`, using
// the rho found on the selection set. rule_count counts the randomized last
// rule as a whole rule.
MetricsReport evaluate_ruleset(const SelectionResult& result,
                               const LabeledDataset& ds,
                               const BudgetConstraint& budget,
                               std::string split_name = {},
                               std::uint64_t seed = 0);

// Same for an arbitrary rule list. At most one rule may carry a probability
// below 1 and it must be the last one; SchemaError otherwise.
MetricsReport evaluate_rules(std::span<const Rule> rules,
                             const LabeledDataset& ds,
                             const BudgetConstraint& budget,
                             std::string split_name = {},
                             std::uint64_t seed = 0);

// Recall of a scoring model at the budget.
MetricsReport evaluate_scores(std::span<const double> scores,
                              const LabeledDataset& ds,
                              const BudgetConstraint& budget,
                              std::string split_name = {},
                              std::uint64_t seed = 0);

struct MetricSummary {
  std::size_t n = 0;
  double mean = 0.0;
  // Sample (n - 1) standard deviation; 0 when n == 1 (see single_run).
  double stddev = 0.0;
  bool single_run = false;
};

struct AggregateReport {
  MetricSummary recall;
  MetricSummary budget_metric;
  MetricSummary conservative_recall;
  MetricSummary rule_count;
};

MetricSummary summarize(std::span<const double> values);

// Throws MetricError on an empty list.
AggregateReport aggregate_runs(std::span<const MetricsReport> reports);

// Reads "row_id,score" (with header) and returns scores aligned with the rows
// of `ds`. Every row of `ds` needs a score.
std::vector<double> load_scores(const std::filesystem::path& path,
                                const LabeledDataset& ds);

}  // namespace riff

#endif  // RIFF_EVAL_HPP
