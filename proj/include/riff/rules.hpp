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

// Rules are conjunctions of threshold conditions that flag the positive
// class. Candidates are read off the root-to-leaf paths of a tree model.

#ifndef RIFF_RULES_HPP
#define RIFF_RULES_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "riff/data.hpp"
#include "riff/trees.hpp"

namespace riff {

enum class Op { kLessEqual, kGreater };

const char* to_string(Op op);
Op op_from_string(const std::string& s);

struct Condition {
  std::string feature;
  Op op = Op::kLessEqual;
  double threshold = 0.0;

  bool holds(double value) const {
    return op == Op::kLessEqual ? value <= threshold : value > threshold;
  }
  bool operator==(const Condition&) const = default;
};

struct Provenance {
  std::string model;  // "cart", "figs" or "figu"
  std::size_t tree = 0;
  std::size_t leaf = 0;
  bool operator==(const Provenance&) const = default;
};

struct TrainStats {
  std::int64_t positive_count = 0;
  std::int64_t total_count = 0;
  bool operator==(const TrainStats&) const = default;
};

struct Rule {
  std::vector<Condition> conditions;
  std::optional<Provenance> provenance;
  std::optional<TrainStats> train_stats;
  // Firing probability in a randomized rule set; 1 for ordinary rules.
  double probability = 1.0;

  bool operator==(const Rule&) const = default;
};

struct CandidateRuleSet {
  std::vector<Rule> rules;
  std::string source_model_digest;
};

// Model kind recorded in provenance for a forest mode.
const char* model_kind(ForestMode mode);

// One simplified rule per leaf of every tree, trees in order and leaves in
// depth-first left-first order. Left branches contribute "<=", right
// branches ">".
CandidateRuleSet extract_rules(const ForestModel& model);

// Keeps, per feature, the tightest "<=" (minimum threshold) and ">" (maximum
// threshold); orders conditions by feature name, ">" before "<=".
Rule simplify(const Rule& rule);

// False when some feature's ">" threshold is not below its "<=" threshold,
// i.e. the rule can cover nothing.
bool is_satisfiable(const Rule& rule);

// Keeps rules whose induction-set precision (from train_stats) is at least
// `base_rate`. Rules without stats are kept.
CandidateRuleSet filter_by_base_rate(const CandidateRuleSet& candidates,
                                     double base_rate);

// A rule bound to a dataset's column positions.
class CompiledRule {
 public:
  // Throws SchemaError naming the first feature missing from `ds`.
  CompiledRule(const Rule& rule, const LabeledDataset& ds);

  bool covers(std::span<const double> x) const {
    for (const auto& c : terms_) {
      const double v = x[c.column];
      if (c.less_equal ? !(v <= c.threshold) : !(v > c.threshold)) return false;
    }
    return true;
  }

 private:
  struct Term {
    std::size_t column;
    bool less_equal;
    double threshold;
  };
  std::vector<Term> terms_;
};

bool covers(const Rule& rule, const LabeledDataset& ds, std::size_t row);

// Per-row 0/1 coverage of one rule.
std::vector<std::uint8_t> coverage_mask(const Rule& rule,
                                        const LabeledDataset& ds);

// Row ids covered by any rule, ascending.
std::vector<RowId> cov(std::span<const Rule> rules, const LabeledDataset& ds);

// "IF amount > 104.25 AND velocity_6h <= 3.5 THEN FLAG"; "IF TRUE THEN
// FLAG" for an empty conjunction.
std::string to_text(const Rule& rule);

}  // namespace riff

#endif  // RIFF_RULES_HPP
