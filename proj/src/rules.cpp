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

#include "riff/rules.hpp"

#include <algorithm>
#include <map>

#include "riff/common.hpp"
#include "riff/io.hpp"

namespace riff {

const char* to_string(Op op) { return op == Op::kLessEqual ? "<=" : ">"; }

Op op_from_string(const std::string& s) {
  if (s == "<=") return Op::kLessEqual;
  if (s == ">") return Op::kGreater;
  throw SchemaError("unknown condition operator '" + s + "'");
}

const char* model_kind(ForestMode mode) {
  switch (mode) {
    case ForestMode::kSingle:
      return "cart";
    case ForestMode::kSum:
      return "figs";
    case ForestMode::kUnion:
      return "figu";
  }
  return "?";
}

CandidateRuleSet extract_rules(const ForestModel& model) {
  CandidateRuleSet out;
  out.source_model_digest = model_digest(model);
  const std::string kind = model_kind(model.mode);
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const Tree& tree = model.trees[t];
    if (tree.nodes.empty()) continue;
    // Depth-first walk carrying the path conditions.
    struct Frame {
      std::size_t node;
      std::vector<Condition> path;
    };
    std::vector<Frame> stack;
    stack.push_back({0, {}});
    while (!stack.empty()) {
      Frame frame = std::move(stack.back());
      stack.pop_back();
      const TreeNode& node = tree.nodes[frame.node];
      if (node.is_leaf()) {
        Rule rule;
        rule.conditions = std::move(frame.path);
        rule.provenance = Provenance{kind, t, frame.node};
        rule.train_stats = TrainStats{node.positive_count, node.total_count};
        out.rules.push_back(simplify(rule));
        continue;
      }
      const std::string& name =
          model.feature_names.at(static_cast<std::size_t>(node.feature));
      Frame right{static_cast<std::size_t>(node.right), frame.path};
      right.path.push_back({name, Op::kGreater, node.threshold});
      Frame left{static_cast<std::size_t>(node.left), std::move(frame.path)};
      left.path.push_back({name, Op::kLessEqual, node.threshold});
      stack.push_back(std::move(right));
      stack.push_back(std::move(left));
    }
  }
  return out;
}

Rule simplify(const Rule& rule) {
  struct Bounds {
    std::optional<double> greater;     // tightest lower bound (max)
    std::optional<double> less_equal;  // tightest upper bound (min)
  };
  std::map<std::string, Bounds> by_feature;
  for (const auto& c : rule.conditions) {
    Bounds& b = by_feature[c.feature];
    if (c.op == Op::kGreater) {
      b.greater = b.greater ? std::max(*b.greater, c.threshold) : c.threshold;
    } else {
      b.less_equal =
          b.less_equal ? std::min(*b.less_equal, c.threshold) : c.threshold;
    }
  }
  Rule out = rule;
  out.conditions.clear();
  for (const auto& [feature, b] : by_feature) {
    if (b.greater) out.conditions.push_back({feature, Op::kGreater, *b.greater});
    if (b.less_equal) {
      out.conditions.push_back({feature, Op::kLessEqual, *b.less_equal});
    }
  }
  return out;
}

bool is_satisfiable(const Rule& rule) {
  const Rule s = simplify(rule);
  for (std::size_t i = 0; i + 1 < s.conditions.size(); ++i) {
    const Condition& a = s.conditions[i];
    const Condition& b = s.conditions[i + 1];
    if (a.feature == b.feature && a.op == Op::kGreater &&
        b.op == Op::kLessEqual && !(a.threshold < b.threshold)) {
      return false;
    }
  }
  return true;
}

CandidateRuleSet filter_by_base_rate(const CandidateRuleSet& candidates,
                                     double base_rate) {
  CandidateRuleSet out;
  out.source_model_digest = candidates.source_model_digest;
  for (const auto& rule : candidates.rules) {
    if (rule.train_stats && rule.train_stats->total_count > 0) {
      const double precision =
          static_cast<double>(rule.train_stats->positive_count) /
          static_cast<double>(rule.train_stats->total_count);
      if (precision < base_rate) continue;
    }
    out.rules.push_back(rule);
  }
  return out;
}

CompiledRule::CompiledRule(const Rule& rule, const LabeledDataset& ds) {
  terms_.reserve(rule.conditions.size());
  for (const auto& c : rule.conditions) {
    auto column = ds.feature_index(c.feature);
    if (!column) {
      throw SchemaError("rule references unknown feature '" + c.feature + "'");
    }
    terms_.push_back({*column, c.op == Op::kLessEqual, c.threshold});
  }
}

bool covers(const Rule& rule, const LabeledDataset& ds, std::size_t row) {
  return CompiledRule(rule, ds).covers(ds.row(row));
}

std::vector<std::uint8_t> coverage_mask(const Rule& rule,
                                        const LabeledDataset& ds) {
  const CompiledRule compiled(rule, ds);
  std::vector<std::uint8_t> mask(ds.num_rows());
  for (std::size_t r = 0; r < ds.num_rows(); ++r) {
    mask[r] = compiled.covers(ds.row(r)) ? 1 : 0;
  }
  return mask;
}

std::vector<RowId> cov(std::span<const Rule> rules, const LabeledDataset& ds) {
  std::vector<CompiledRule> compiled;
  compiled.reserve(rules.size());
  for (const auto& r : rules) compiled.emplace_back(r, ds);
  std::vector<RowId> out;
  for (std::size_t r = 0; r < ds.num_rows(); ++r) {
    const auto x = ds.row(r);
    if (std::any_of(compiled.begin(), compiled.end(),
                    [&](const CompiledRule& c) { return c.covers(x); })) {
      out.push_back(ds.row_id(r));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string to_text(const Rule& rule) {
  std::string out = "IF ";
  if (rule.conditions.empty()) out += "TRUE";
  for (std::size_t i = 0; i < rule.conditions.size(); ++i) {
    const Condition& c = rule.conditions[i];
    if (i > 0) out += " AND ";
    out += c.feature;
    out += ' ';
    out += to_string(c.op);
    out += ' ';
    out += format_double(c.threshold);
  }
  out += " THEN FLAG";
  return out;
}

}  // namespace riff
