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

#include "riff/io.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

#include "riff/common.hpp"

namespace riff {

namespace {

void check_header(const Json& doc, const std::string& kind) {
  if (!doc.is_object()) throw SchemaError("expected a JSON object for " + kind);
  const std::string expected = "riff." + kind;
  if (doc.value("format", std::string()) != expected) {
    throw SchemaError("document is not a " + expected + " file");
  }
  if (doc.value("version", 0) != kFormatVersion) {
    throw SchemaError("unsupported " + expected + " version");
  }
}

// Rethrows JSON library errors (missing keys, type mismatches) as
// SchemaError.
template <typename F>
auto schema_guard(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed document: ") + e.what());
  }
}

Json header(const std::string& kind) {
  Json doc = Json::object();
  doc["format"] = "riff." + kind;
  doc["version"] = kFormatVersion;
  return doc;
}

template <typename T>
T field(const Json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError(std::string("missing field '") + key + "'");
  }
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw SchemaError(std::string("field '") + key + "' has the wrong type");
  }
}

Json node_to_json(const ForestModel& model, const Tree& tree, std::size_t id) {
  const TreeNode& n = tree.nodes[id];
  Json j = Json::object();
  j["id"] = id;
  j["positive_count"] = n.positive_count;
  j["total_count"] = n.total_count;
  j["value"] = n.value;
  if (!n.is_leaf()) {
    j["feature"] = model.feature_names.at(static_cast<std::size_t>(n.feature));
    j["threshold"] = n.threshold;
    j["gain"] = n.gain;
    j["left"] = node_to_json(model, tree, static_cast<std::size_t>(n.left));
    j["right"] = node_to_json(model, tree, static_cast<std::size_t>(n.right));
  }
  return j;
}

void node_from_json(const Json& j, const std::unordered_map<std::string, int>& index,
                    Tree& tree) {
  const auto id = field<std::size_t>(j, "id");
  if (id >= tree.nodes.size()) tree.nodes.resize(id + 1);
  TreeNode& n = tree.nodes[id];
  n.positive_count = field<std::int64_t>(j, "positive_count");
  n.total_count = field<std::int64_t>(j, "total_count");
  n.value = field<double>(j, "value");
  if (j.contains("left")) {
    const auto name = field<std::string>(j, "feature");
    auto it = index.find(name);
    if (it == index.end()) throw SchemaError("model node uses unknown feature '" + name + "'");
    n.feature = it->second;
    n.threshold = field<double>(j, "threshold");
    n.gain = j.value("gain", 0.0);
    const Json& left = j.at("left");
    const Json& right = j.at("right");
    n.left = static_cast<int>(field<std::size_t>(left, "id"));
    n.right = static_cast<int>(field<std::size_t>(right, "id"));
    node_from_json(left, index, tree);
    node_from_json(right, index, tree);
  }
}

Json rule_to_json(const Rule& rule) {
  Json r = Json::object();
  Json conds = Json::array();
  for (const auto& c : rule.conditions) {
    conds.push_back({{"feature", c.feature}, {"op", to_string(c.op)},
                     {"threshold", c.threshold}});
  }
  r["conditions"] = std::move(conds);
  if (rule.provenance) {
    r["provenance"] = {{"model", rule.provenance->model},
                       {"tree", rule.provenance->tree},
                       {"leaf", rule.provenance->leaf}};
  }
  if (rule.train_stats) {
    r["train_stats"] = {{"positive_count", rule.train_stats->positive_count},
                        {"total_count", rule.train_stats->total_count}};
  }
  if (rule.probability != 1.0) r["probability"] = rule.probability;
  return r;
}

Rule rule_from_json(const Json& r) {
  if (!r.is_object()) throw SchemaError("rule entries must be objects");
  Rule rule;
  const Json& conds = r.at("conditions");
  if (!conds.is_array()) throw SchemaError("'conditions' must be an array");
  for (const auto& c : conds) {
    Condition cond;
    cond.feature = field<std::string>(c, "feature");
    cond.op = op_from_string(field<std::string>(c, "op"));
    cond.threshold = field<double>(c, "threshold");
    rule.conditions.push_back(std::move(cond));
  }
  if (r.contains("provenance")) {
    const Json& p = r["provenance"];
    rule.provenance = Provenance{field<std::string>(p, "model"),
                                 field<std::size_t>(p, "tree"),
                                 field<std::size_t>(p, "leaf")};
  }
  if (r.contains("train_stats")) {
    const Json& s = r["train_stats"];
    rule.train_stats = TrainStats{field<std::int64_t>(s, "positive_count"),
                                  field<std::int64_t>(s, "total_count")};
  }
  rule.probability = r.value("probability", 1.0);
  return rule;
}

}  // namespace

Json model_to_json(const ForestModel& model) {
  Json doc = header("model");
  doc["mode"] = to_string(model.mode);
  doc["tau"] = model.tau;
  doc["total_splits"] = model.total_splits();
  doc["feature_names"] = model.feature_names;
  Json trees = Json::array();
  for (const auto& t : model.trees) {
    trees.push_back(t.nodes.empty() ? Json(nullptr) : node_to_json(model, t, 0));
  }
  doc["trees"] = std::move(trees);
  return doc;
}

ForestModel model_from_json(const Json& doc) {
  return schema_guard([&] {
    check_header(doc, "model");
    ForestModel model;
    model.mode = forest_mode_from_string(field<std::string>(doc, "mode"));
    model.tau = doc.value("tau", 0.5);
    model.feature_names = field<std::vector<std::string>>(doc, "feature_names");
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < model.feature_names.size(); ++i) {
      index.emplace(model.feature_names[i], static_cast<int>(i));
    }
    for (const auto& t : doc.at("trees")) {
      Tree tree;
      if (!t.is_null()) node_from_json(t, index, tree);
      model.trees.push_back(std::move(tree));
    }
    if (doc.contains("total_splits") &&
        doc["total_splits"].get<std::size_t>() != model.total_splits()) {
      throw SchemaError("model total_splits does not match its trees");
    }
    return model;
  });
}

std::string model_digest(const ForestModel& model) {
  return json_digest(model_to_json(model));
}

Json ruleset_to_json(const CandidateRuleSet& rules) {
  Json doc = header("ruleset");
  doc["source_model_digest"] = rules.source_model_digest;
  Json list = Json::array();
  for (std::size_t i = 0; i < rules.rules.size(); ++i) {
    Json r = Json::object();
    r["index"] = i;
    r.update(rule_to_json(rules.rules[i]));
    list.push_back(std::move(r));
  }
  doc["rules"] = std::move(list);
  return doc;
}

CandidateRuleSet ruleset_from_json(const Json& doc) {
  return schema_guard([&] {
    check_header(doc, "ruleset");
    CandidateRuleSet out;
    out.source_model_digest = doc.value("source_model_digest", std::string());
    const Json& list = doc.at("rules");
    if (!list.is_array()) throw SchemaError("'rules' must be an array");
    for (const auto& r : list) out.rules.push_back(rule_from_json(r));
    return out;
  });
}

std::string ruleset_to_text(const CandidateRuleSet& rules) {
  std::string out;
  for (const auto& r : rules.rules) {
    out += to_text(r);
    if (r.probability != 1.0) out += "  # fires with probability " + format_double(r.probability);
    out += '\n';
  }
  return out;
}

Json selection_to_json(const SelectionResult& result,
                       const std::string& ruleset_digest) {
  Json doc = header("selection");
  doc["ruleset_digest"] = ruleset_digest;
  doc["selection_set_digest"] = result.selection_set_digest;
  doc["budget"] = {{"metric", to_string(result.budget.metric)},
                   {"max_value", result.budget.max_value}};
  Json selected = Json::array();
  for (const auto& s : result.step_trace) selected.push_back(s.candidate);
  doc["selected"] = std::move(selected);
  doc["last_rule_probability"] = result.last_rule_probability;
  doc["terminated_early"] = result.terminated_early;
  Json trace = Json::array();
  for (const auto& s : result.step_trace) {
    trace.push_back({{"candidate", s.candidate},
                     {"true_positives", s.true_positives},
                     {"false_positives", s.false_positives},
                     {"precision", s.precision},
                     {"remaining_rows", s.remaining_rows},
                     {"tpr", s.tpr},
                     {"fpr", s.fpr},
                     {"alert_rate", s.alert_rate},
                     {"budget_value", s.budget_value}});
  }
  doc["step_trace"] = std::move(trace);
  return doc;
}

SelectionResult selection_from_json(const Json& doc,
                                    const CandidateRuleSet& candidates) {
  return schema_guard([&] {
    check_header(doc, "selection");
    SelectionResult result;
    result.selection_set_digest = doc.value("selection_set_digest", std::string());
    const Json& b = doc.at("budget");
    result.budget.metric = budget_metric_from_string(field<std::string>(b, "metric"));
    result.budget.max_value = field<double>(b, "max_value");
    result.last_rule_probability = field<double>(doc, "last_rule_probability");
    result.terminated_early = field<bool>(doc, "terminated_early");
    for (const auto& s : doc.at("step_trace")) {
      SelectionStep step;
      step.candidate = field<std::size_t>(s, "candidate");
      step.true_positives = field<std::int64_t>(s, "true_positives");
      step.false_positives = field<std::int64_t>(s, "false_positives");
      step.precision = field<double>(s, "precision");
      step.remaining_rows = field<std::size_t>(s, "remaining_rows");
      step.tpr = field<double>(s, "tpr");
      step.fpr = field<double>(s, "fpr");
      step.alert_rate = field<double>(s, "alert_rate");
      step.budget_value = field<double>(s, "budget_value");
      if (step.candidate >= candidates.rules.size()) {
        throw SchemaError("selection references candidate " +
                          std::to_string(step.candidate) +
                          " beyond the rule set");
      }
      result.ordered_rules.push_back(candidates.rules[step.candidate]);
      result.step_trace.push_back(step);
    }
    return result;
  });
}

Json report_to_json(const MetricsReport& report) {
  return Json{{"split", report.split_name},
              {"seed", report.seed},
              {"is_rule_set", report.is_rule_set},
              {"recall_at_budget", report.recall_at_budget},
              {"conservative_recall", report.conservative_recall},
              {"budget_metric_value", report.budget_metric_value},
              {"rule_count", report.rule_count},
              {"expected", report.expected}};
}

Json summary_to_json(const MetricSummary& summary) {
  return Json{{"n", summary.n},
              {"mean", summary.mean},
              {"std", summary.stddev},
              {"single_run", summary.single_run}};
}

Json aggregate_to_json(const AggregateReport& aggregate) {
  return Json{{"recall_at_budget", summary_to_json(aggregate.recall)},
              {"conservative_recall", summary_to_json(aggregate.conservative_recall)},
              {"budget_metric_value", summary_to_json(aggregate.budget_metric)},
              {"rule_count", summary_to_json(aggregate.rule_count)}};
}

std::string json_digest(const Json& doc) { return fnv1a_hex(doc.dump()); }

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace riff
