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

// Budgeted greedy rule selection (separate-and-conquer over a fixed
// candidate pool) and its randomized relaxation.
//
// Starting from S = {} and D' = D, each step picks the candidate with the
// highest precision on the still-uncovered rows D', removes the rows it
// covers from D', and appends it to S. Selection stops as soon as the budget
// metric (FPR or alert rate) of S on D reaches the maximum; the last rule
// r_l is the one that crosses it. The last rule is then given a firing
// probability rho so that the expected budget metric equals the maximum:
//
//   rho = (max - budget(S_{l-1})) / (budget(S_l) - budget(S_{l-1}))

#ifndef RIFF_SELECTION_HPP
#define RIFF_SELECTION_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "riff/data.hpp"
#include "riff/rules.hpp"

namespace riff {

enum class BudgetMetric { kFpr, kAlertRate };

const char* to_string(BudgetMetric metric);
BudgetMetric budget_metric_from_string(const std::string& s);

struct BudgetConstraint {
  BudgetMetric metric = BudgetMetric::kFpr;
  double max_value = 0.01;

  // Throws ConfigError unless 0 < max_value <= 1.
  void validate() const;
};

// Coverage fractions of a rule set. tpr needs a positive row, fpr a negative
// row and alert_rate any row; otherwise MetricError.
double tpr(std::span<const Rule> rules, const LabeledDataset& ds);
double fpr(std::span<const Rule> rules, const LabeledDataset& ds);
double alert_rate(std::span<const Rule> rules, const LabeledDataset& ds);
double budget_value(std::span<const Rule> rules, const LabeledDataset& ds,
                    BudgetMetric metric);

// Covered positives / covered rows; 0 when the rule covers nothing.
double rule_precision(const Rule& rule, const LabeledDataset& ds);

struct SelectionStep {
  std::size_t candidate = 0;  // index into the candidate rule set
  // Coverage of the chosen rule on D' before it was removed.
  std::int64_t true_positives = 0;
  std::int64_t false_positives = 0;
  double precision = 0.0;
  std::size_t remaining_rows = 0;  // |D'| before this step
  // Cumulative figures for S_i on the full selection set.
  double tpr = 0.0;
  double fpr = 0.0;
  double alert_rate = 0.0;
  double budget_value = 0.0;

  bool operator==(const SelectionStep&) const = default;
};

struct SelectionResult {
  std::vector<Rule> ordered_rules;
  std::vector<SelectionStep> step_trace;
  // rho(r_l); every earlier rule fires with probability 1.
  double last_rule_probability = 1.0;
  // The budget was never reached: candidates ran out or none covered any
  // remaining row.
  bool terminated_early = false;
  BudgetConstraint budget;
  std::string selection_set_digest;

  std::size_t length() const { return ordered_rules.size(); }
  // budget(S_{l-1}) and TPR(S_{l-1}); 0 for an empty prefix.
  double budget_before_last() const;
  double tpr_before_last() const;
  // ordered_rules with rho attached to the last rule.
  std::vector<Rule> randomized_rules() const;
};

// Ties in precision go to more true positives on D', then fewer false
// positives, then the earlier candidate. Candidates that cover nothing in D'
// are never picked. The result is already randomized (see randomize()).
// Throws MetricError if `ds` lacks positives or the class the budget is
// measured on.
SelectionResult greedy_select(const CandidateRuleSet& candidates,
                              const LabeledDataset& ds,
                              const BudgetConstraint& budget);

// Sets and returns rho(r_l), clamped to [0, 1]. On an early-terminated
// selection rho is 1 and a warning is emitted.
double randomize(SelectionResult& result, const BudgetConstraint& budget);

// (1 - rho) TPR(S_{l-1}) + rho TPR(S_l) on `ds`.
double expected_tpr(const SelectionResult& result, const LabeledDataset& ds);

}  // namespace riff

#endif  // RIFF_SELECTION_HPP
