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

#include "riff/selection.hpp"

#include <algorithm>
#include <bit>
#include <optional>

#include "riff/common.hpp"

namespace riff {

const char* to_string(BudgetMetric metric) {
  return metric == BudgetMetric::kFpr ? "fpr" : "alert-rate";
}

BudgetMetric budget_metric_from_string(const std::string& s) {
  if (s == "fpr") return BudgetMetric::kFpr;
  if (s == "alert-rate" || s == "alert_rate") return BudgetMetric::kAlertRate;
  throw ConfigError("unknown budget metric '" + s + "'");
}

void BudgetConstraint::validate() const {
  if (!(max_value > 0.0 && max_value <= 1.0)) {
    throw ConfigError("budget maximum must lie in (0, 1]");
  }
}

namespace {

// Fixed-size bitset over dataset rows.
class RowMask {
 public:
  explicit RowMask(std::size_t n, bool fill = false)
      : size_(n), words_((n + 63) / 64, fill ? ~0ULL : 0ULL) {
    trim();
  }

  void set(std::size_t i) { words_[i / 64] |= 1ULL << (i % 64); }

  std::int64_t count() const {
    std::int64_t c = 0;
    for (auto w : words_) c += std::popcount(w);
    return c;
  }

  // |a & b & c|
  static std::int64_t count_and(const RowMask& a, const RowMask& b,
                                const RowMask& c) {
    std::int64_t n = 0;
    for (std::size_t i = 0; i < a.words_.size(); ++i) {
      n += std::popcount(a.words_[i] & b.words_[i] & c.words_[i]);
    }
    return n;
  }

  void subtract(const RowMask& other) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~other.words_[i];
  }

 private:
  void trim() {
    if (size_ % 64 != 0 && !words_.empty()) {
      words_.back() &= (1ULL << (size_ % 64)) - 1;
    }
  }

  std::size_t size_;
  std::vector<std::uint64_t> words_;
};

RowMask mask_of(const Rule& rule, const LabeledDataset& ds) {
  const CompiledRule compiled(rule, ds);
  RowMask m(ds.num_rows());
  for (std::size_t r = 0; r < ds.num_rows(); ++r) {
    if (compiled.covers(ds.row(r))) m.set(r);
  }
  return m;
}

struct Counts {
  std::int64_t pos = 0;
  std::int64_t neg = 0;
};

Counts covered_counts(std::span<const Rule> rules, const LabeledDataset& ds) {
  std::vector<CompiledRule> compiled;
  compiled.reserve(rules.size());
  for (const auto& r : rules) compiled.emplace_back(r, ds);
  Counts c;
  for (std::size_t r = 0; r < ds.num_rows(); ++r) {
    const auto x = ds.row(r);
    if (std::any_of(compiled.begin(), compiled.end(),
                    [&](const CompiledRule& cr) { return cr.covers(x); })) {
      (ds.label(r) ? c.pos : c.neg) += 1;
    }
  }
  return c;
}

void require_rows(const LabeledDataset& ds, bool positives, bool negatives,
                  bool any) {
  if (positives && ds.num_positives() == 0) {
    throw MetricError("TPR is undefined on a dataset without positives");
  }
  if (negatives && ds.num_negatives() == 0) {
    throw MetricError("FPR is undefined on a dataset without negatives");
  }
  if (any && ds.empty()) {
    throw MetricError("alert rate is undefined on an empty dataset");
  }
}

double ratio(std::int64_t num, std::size_t den) {
  return static_cast<double>(num) / static_cast<double>(den);
}

double budget_of(BudgetMetric metric, const Counts& covered,
                 const LabeledDataset& ds) {
  return metric == BudgetMetric::kFpr
             ? ratio(covered.neg, ds.num_negatives())
             : ratio(covered.pos + covered.neg, ds.num_rows());
}

}  // namespace

double tpr(std::span<const Rule> rules, const LabeledDataset& ds) {
  require_rows(ds, true, false, false);
  return ratio(covered_counts(rules, ds).pos, ds.num_positives());
}

double fpr(std::span<const Rule> rules, const LabeledDataset& ds) {
  require_rows(ds, false, true, false);
  return ratio(covered_counts(rules, ds).neg, ds.num_negatives());
}

double alert_rate(std::span<const Rule> rules, const LabeledDataset& ds) {
  require_rows(ds, false, false, true);
  const Counts c = covered_counts(rules, ds);
  return ratio(c.pos + c.neg, ds.num_rows());
}

double budget_value(std::span<const Rule> rules, const LabeledDataset& ds,
                    BudgetMetric metric) {
  return metric == BudgetMetric::kFpr ? fpr(rules, ds) : alert_rate(rules, ds);
}

double rule_precision(const Rule& rule, const LabeledDataset& ds) {
  const Counts c = covered_counts(std::span<const Rule>(&rule, 1), ds);
  if (c.pos + c.neg == 0) return 0.0;
  return static_cast<double>(c.pos) / static_cast<double>(c.pos + c.neg);
}

double SelectionResult::budget_before_last() const {
  return step_trace.size() < 2 ? 0.0 : step_trace[step_trace.size() - 2].budget_value;
}

double SelectionResult::tpr_before_last() const {
  return step_trace.size() < 2 ? 0.0 : step_trace[step_trace.size() - 2].tpr;
}

std::vector<Rule> SelectionResult::randomized_rules() const {
  std::vector<Rule> out = ordered_rules;
  for (auto& r : out) r.probability = 1.0;
  if (!out.empty()) out.back().probability = last_rule_probability;
  return out;
}

SelectionResult greedy_select(const CandidateRuleSet& candidates,
                              const LabeledDataset& ds,
                              const BudgetConstraint& budget) {
  budget.validate();
  if (candidates.rules.empty()) {
    throw Error("greedy selection needs at least one candidate rule");
  }
  require_rows(ds, true, budget.metric == BudgetMetric::kFpr,
               budget.metric == BudgetMetric::kAlertRate);

  const std::size_t n = ds.num_rows();
  RowMask positives(n), negatives(n);
  for (std::size_t r = 0; r < n; ++r) (ds.label(r) ? positives : negatives).set(r);
  std::vector<RowMask> coverage;
  coverage.reserve(candidates.rules.size());
  for (const auto& rule : candidates.rules) coverage.push_back(mask_of(rule, ds));

  SelectionResult result;
  result.budget = budget;
  result.selection_set_digest = ds.digest();

  RowMask remaining(n, true);
  std::vector<bool> selected(candidates.rules.size(), false);
  Counts covered;
  double current_budget = 0.0;

  while (current_budget < budget.max_value) {
    std::optional<std::size_t> best;
    std::int64_t best_tp = 0;
    std::int64_t best_fp = 0;
    for (std::size_t c = 0; c < coverage.size(); ++c) {
      if (selected[c]) continue;
      const std::int64_t tp = RowMask::count_and(coverage[c], remaining, positives);
      const std::int64_t fp = RowMask::count_and(coverage[c], remaining, negatives);
      if (tp + fp == 0) continue;
      if (best) {
        // Exact comparison of tp/(tp+fp) against best_tp/(best_tp+best_fp).
        const std::int64_t lhs = tp * (best_tp + best_fp);
        const std::int64_t rhs = best_tp * (tp + fp);
        const bool better =
            lhs > rhs ||
            (lhs == rhs && (tp > best_tp || (tp == best_tp && fp < best_fp)));
        if (!better) continue;
      }
      best = c;
      best_tp = tp;
      best_fp = fp;
    }
    if (!best) {
      result.terminated_early = true;
      break;
    }

    SelectionStep step;
    step.candidate = *best;
    step.true_positives = best_tp;
    step.false_positives = best_fp;
    step.precision =
        static_cast<double>(best_tp) / static_cast<double>(best_tp + best_fp);
    step.remaining_rows = static_cast<std::size_t>(remaining.count());

    remaining.subtract(coverage[*best]);
    selected[*best] = true;
    covered.pos += best_tp;
    covered.neg += best_fp;
    current_budget = budget_of(budget.metric, covered, ds);

    step.tpr = ratio(covered.pos, ds.num_positives());
    step.fpr = ds.num_negatives() ? ratio(covered.neg, ds.num_negatives()) : 0.0;
    step.alert_rate = ratio(covered.pos + covered.neg, n);
    step.budget_value = current_budget;
    result.ordered_rules.push_back(candidates.rules[*best]);
    result.step_trace.push_back(step);
  }

  if (result.terminated_early) {
    warn("greedy selection exhausted the candidates at " +
         std::string(to_string(budget.metric)) + " " +
         format_double(current_budget) + " below the budget " +
         format_double(budget.max_value) + "; no randomization applied");
    result.last_rule_probability = 1.0;
  } else {
    randomize(result, budget);
  }
  return result;
}

double randomize(SelectionResult& result, const BudgetConstraint& budget) {
  if (result.terminated_early || result.step_trace.empty()) {
    warn("randomization does not apply to a selection that never reached "
         "the budget; the last rule keeps probability 1");
    result.last_rule_probability = 1.0;
    return 1.0;
  }
  const double before = result.budget_before_last();
  const double after = result.step_trace.back().budget_value;
  double rho = 1.0;
  if (after > before) {
    rho = std::clamp((budget.max_value - before) / (after - before), 0.0, 1.0);
  }
  result.last_rule_probability = rho;
  return rho;
}

double expected_tpr(const SelectionResult& result, const LabeledDataset& ds) {
  if (result.ordered_rules.empty()) return 0.0;
  std::span<const Rule> all(result.ordered_rules);
  const double full = tpr(all, ds);
  if (result.terminated_early) return full;
  const double prefix = tpr(all.first(all.size() - 1), ds);
  const double rho = result.last_rule_probability;
  return (1.0 - rho) * prefix + rho * full;
}

}  // namespace riff
