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

#include "riff/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <optional>
#include <sstream>
#include <thread>

#include "riff/common.hpp"
#include "riff/rules.hpp"

namespace riff {

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kCart:
      return "cart";
    case ModelKind::kFigs:
      return "figs";
    case ModelKind::kFigu:
      return "figu";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "cart") return ModelKind::kCart;
  if (s == "figs") return ModelKind::kFigs;
  if (s == "figu") return ModelKind::kFigu;
  throw ConfigError("unknown model kind '" + s + "'");
}

void ExperimentConfig::validate() const {
  if (dataset_path.empty()) throw ConfigError("config lacks dataset.path");
  if (csv.label_column.empty()) throw ConfigError("config lacks dataset.label_column");
  split.validate();
  if (split.mode == SplitMode::kTemporal && !csv.order_column) {
    throw ConfigError("temporal split requires dataset.order_column");
  }
  if (!(sample_ratio > 0.0 && sample_ratio <= 1.0)) {
    throw ConfigError("sample_ratio must lie in (0, 1]");
  }
  if (!(target_positive_rate > 0.0 && target_positive_rate < 1.0)) {
    throw ConfigError("target_positive_rate must lie in (0, 1)");
  }
  budget.validate();
  if (models.empty()) throw ConfigError("config lists no models");
  for (const auto& m : models) {
    if (!(m.tau >= 0.0 && m.tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
    if (m.min_leaf < 1) throw ConfigError("min_leaf must be at least 1");
  }
  if (grid.empty()) throw ConfigError("split-budget grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] < 1) throw ConfigError("grid values must be at least 1");
    if (i > 0 && grid[i] <= grid[i - 1]) {
      throw ConfigError("split-budget grid must be strictly increasing");
    }
  }
  if (seeds.empty()) throw ConfigError("config lists no seeds");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
}

namespace {

template <typename T>
T get_or(const Json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config field '") + key + "' has the wrong type");
  }
}

const Json& section(const Json& doc, const char* key) {
  static const Json kEmpty = Json::object();
  auto it = doc.find(key);
  if (it == doc.end()) return kEmpty;
  if (!it->is_object()) throw ConfigError(std::string("config '") + key + "' must be an object");
  return *it;
}

}  // namespace

ExperimentConfig config_from_json(const Json& doc,
                                  const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  ExperimentConfig c;
  const Json& ds = section(doc, "dataset");
  std::filesystem::path path = get_or<std::string>(ds, "path", "");
  if (!path.empty() && path.is_relative() && !base_dir.empty()) path = base_dir / path;
  c.dataset_path = path;
  c.csv.label_column = get_or<std::string>(ds, "label_column", "");
  if (ds.contains("order_column") && !ds["order_column"].is_null()) {
    c.csv.order_column = get_or<std::string>(ds, "order_column", "");
  }
  if (ds.contains("id_column") && !ds["id_column"].is_null()) {
    c.csv.id_column = get_or<std::string>(ds, "id_column", "");
  }
  c.csv.drop_columns = get_or<std::vector<std::string>>(ds, "drop_columns", {});
  const auto policy = get_or<std::string>(ds, "categorical_policy", "ordinal");
  if (policy == "ordinal") {
    c.csv.categorical_policy = CategoricalPolicy::kOrdinalByFrequency;
  } else if (policy == "one-hot") {
    c.csv.categorical_policy = CategoricalPolicy::kOneHot;
  } else {
    throw ConfigError("unknown categorical_policy '" + policy + "'");
  }

  const Json& sp = section(doc, "split");
  c.split.train_fraction = get_or(sp, "train", c.split.train_fraction);
  c.split.validation_fraction = get_or(sp, "validation", c.split.validation_fraction);
  c.split.test_fraction = get_or(sp, "test", c.split.test_fraction);
  const auto mode = get_or<std::string>(sp, "mode", "random");
  if (mode == "random") {
    c.split.mode = SplitMode::kRandom;
  } else if (mode == "temporal") {
    c.split.mode = SplitMode::kTemporal;
  } else {
    throw ConfigError("unknown split mode '" + mode + "'");
  }
  c.split.seed = get_or<std::uint64_t>(sp, "seed", 0);

  const Json& sm = section(doc, "sampling");
  c.sample_ratio = get_or(sm, "sample_ratio", c.sample_ratio);
  c.target_positive_rate = get_or(sm, "target_positive_rate", c.target_positive_rate);
  const auto sizing = get_or<std::string>(sm, "sizing", "per-subset");
  if (sizing == "per-subset") {
    c.sizing = SubsetSizing::kPerSubset;
  } else if (sizing == "union") {
    c.sizing = SubsetSizing::kUnion;
  } else {
    throw ConfigError("unknown sampling.sizing '" + sizing + "'");
  }
  c.resample_per_grid_value = get_or(sm, "resample_per_grid_value", false);

  const Json& b = section(doc, "budget");
  c.budget.metric = budget_metric_from_string(get_or<std::string>(b, "metric", "fpr"));
  c.budget.max_value = get_or(b, "max", c.budget.max_value);

  if (doc.contains("models")) {
    if (!doc["models"].is_array()) throw ConfigError("config 'models' must be an array");
    for (const auto& m : doc["models"]) {
      ModelConfig mc;
      if (m.is_string()) {
        mc.kind = model_kind_from_string(m.get<std::string>());
      } else {
        mc.kind = model_kind_from_string(get_or<std::string>(m, "kind", ""));
        mc.min_leaf = get_or(m, "min_leaf", mc.min_leaf);
        mc.tau = get_or(m, "tau", mc.tau);
        mc.max_trees = get_or(m, "max_trees", mc.max_trees);
      }
      c.models.push_back(mc);
    }
  } else {
    c.models = {{ModelKind::kCart}, {ModelKind::kFigs}, {ModelKind::kFigu}};
  }
  c.filter_candidates = get_or(doc, "filter_candidates", false);
  c.grid = get_or(doc, "grid", c.grid);
  c.seeds = get_or(doc, "seeds", c.seeds);
  c.out_dir = get_or<std::string>(doc, "out", c.out_dir.string());
  c.jobs = get_or(doc, "jobs", c.jobs);
  return c;
}

Json config_to_json(const ExperimentConfig& c) {
  Json ds = {{"path", c.dataset_path.string()},
             {"label_column", c.csv.label_column},
             {"order_column", c.csv.order_column ? Json(*c.csv.order_column) : Json(nullptr)},
             {"id_column", c.csv.id_column ? Json(*c.csv.id_column) : Json(nullptr)},
             {"drop_columns", c.csv.drop_columns},
             {"categorical_policy",
              c.csv.categorical_policy == CategoricalPolicy::kOneHot ? "one-hot" : "ordinal"}};
  Json models = Json::array();
  for (const auto& m : c.models) {
    models.push_back({{"kind", to_string(m.kind)},
                      {"min_leaf", m.min_leaf},
                      {"tau", m.tau},
                      {"max_trees", m.max_trees}});
  }
  return Json{
      {"dataset", std::move(ds)},
      {"split",
       {{"train", c.split.train_fraction},
        {"validation", c.split.validation_fraction},
        {"test", c.split.test_fraction},
        {"mode", c.split.mode == SplitMode::kTemporal ? "temporal" : "random"},
        {"seed", c.split.seed}}},
      {"sampling",
       {{"sample_ratio", c.sample_ratio},
        {"target_positive_rate", c.target_positive_rate},
        {"sizing", c.sizing == SubsetSizing::kUnion ? "union" : "per-subset"},
        {"resample_per_grid_value", c.resample_per_grid_value}}},
      {"budget", {{"metric", to_string(c.budget.metric)}, {"max", c.budget.max_value}}},
      {"models", std::move(models)},
      {"filter_candidates", c.filter_candidates},
      {"grid", c.grid},
      {"seeds", c.seeds},
      {"out", c.out_dir.string()},
      {"jobs", c.jobs},
  };
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  Json doc;
  try {
    doc = read_json(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return config_from_json(doc, path.parent_path());
}

std::string run_id(const ExperimentConfig& config) {
  Json doc = config_to_json(config);
  doc.erase("out");
  doc.erase("jobs");
  return json_digest(doc);
}

DatasetSplits prepare_splits(const ExperimentConfig& config) {
  const LabeledDataset ds = load_csv(config.dataset_path, config.csv);
  return split_dataset(ds, config.split);
}

InductionSelection prepare_subsets(const ExperimentConfig& config,
                                   const LabeledDataset& train,
                                   std::uint64_t seed, std::size_t grid_value) {
  const std::uint64_t s =
      config.resample_per_grid_value
          ? derive_seed(seed, "sampling/" + std::to_string(grid_value))
          : derive_seed(seed, "sampling");
  return make_induction_selection(train, config.sample_ratio,
                                  config.target_positive_rate, s, config.sizing);
}

ForestModel train_model(const ModelConfig& model, const LabeledDataset& induction,
                        std::size_t max_splits) {
  switch (model.kind) {
    case ModelKind::kCart:
      return grow_cart(induction, max_splits, model.min_leaf);
    case ModelKind::kFigs:
      return grow_figs(induction, max_splits, model.min_leaf, model.max_trees);
    case ModelKind::kFigu:
      return grow_figu(induction, max_splits, model.min_leaf, model.tau,
                       model.max_trees);
  }
  throw ModelError("unknown model kind");
}

CandidateRuleSet make_candidates(const ExperimentConfig& config,
                                 const ForestModel& model,
                                 const LabeledDataset& induction) {
  CandidateRuleSet candidates = extract_rules(model);
  if (config.filter_candidates) {
    candidates = filter_by_base_rate(candidates, induction.positive_rate());
    if (candidates.rules.empty()) {
      throw ModelError("candidate filter removed every rule");
    }
  }
  return candidates;
}

namespace {

struct Trained {
  ForestModel model;
  CandidateRuleSet candidates;
  SelectionResult selection;
};

std::string label_for(ModelKind kind) {
  std::string s = to_string(kind);
  for (auto& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  return s;
}

void run_cell(const ExperimentConfig& config, const DatasetSplits& splits,
              const std::filesystem::path& run_dir, CellResult& cell,
              const ModelConfig& mc) {
  const std::size_t num_grid = config.grid.size();
  std::optional<InductionSelection> fixed;
  if (!config.resample_per_grid_value) {
    fixed = prepare_subsets(config, splits.train, cell.seed);
  }

  std::optional<Trained> best_riff;
  std::optional<ForestModel> best_model;
  double best_riff_recall = -1.0;
  double best_model_recall = -1.0;
  for (std::size_t g = 0; g < num_grid; ++g) {
    const std::size_t splits_budget = config.grid[g];
    std::optional<InductionSelection> own;
    if (!fixed) own = prepare_subsets(config, splits.train, cell.seed, splits_budget);
    const InductionSelection& sets = fixed ? *fixed : *own;

    Trained t{train_model(mc, sets.induction, splits_budget), {}, {}};
    t.candidates = make_candidates(config, t.model, sets.induction);
    t.selection = greedy_select(t.candidates, sets.selection, config.budget);

    GridPoint point;
    point.splits = splits_budget;
    point.rule_count = t.selection.length();
    point.riff_validation_recall =
        evaluate_ruleset(t.selection, splits.validation, config.budget)
            .recall_at_budget;
    point.model_validation_recall =
        recall_at_budget(predict_all(t.model, splits.validation),
                         splits.validation.labels(), config.budget);
    cell.line_search.push_back(point);

    // Strict improvement keeps the smaller grid value on ties.
    if (point.model_validation_recall > best_model_recall) {
      best_model_recall = point.model_validation_recall;
      best_model = t.model;
      cell.baseline_splits = splits_budget;
    }
    if (point.riff_validation_recall > best_riff_recall) {
      best_riff_recall = point.riff_validation_recall;
      cell.chosen_splits = splits_budget;
      best_riff = std::move(t);
    }
  }

  // The test split is only read here.
  cell.riff_test = evaluate_ruleset(best_riff->selection, splits.test,
                                    config.budget, "test", cell.seed);
  cell.baseline_test =
      evaluate_scores(predict_all(*best_model, splits.test), splits.test,
                      config.budget, "test", cell.seed);

  const auto dir = run_dir / std::to_string(cell.seed) / to_string(mc.kind);
  cell.artifact_dir = dir;
  const Json rules_doc = ruleset_to_json(best_riff->candidates);
  write_json(dir / "model.json", model_to_json(best_riff->model));
  write_json(dir / "rules.json", rules_doc);
  write_json(dir / "selection.json",
             selection_to_json(best_riff->selection, json_digest(rules_doc)));
  CandidateRuleSet selected;
  selected.rules = best_riff->selection.randomized_rules();
  selected.source_model_digest = best_riff->candidates.source_model_digest;
  write_json(dir / "selected_rules.json", ruleset_to_json(selected));
  write_text(dir / "selected_rules.txt", ruleset_to_text(selected));

  Json line = Json::array();
  for (const auto& p : cell.line_search) {
    line.push_back({{"splits", p.splits},
                    {"riff_validation_recall", p.riff_validation_recall},
                    {"model_validation_recall", p.model_validation_recall},
                    {"rule_count", p.rule_count}});
  }
  Json report = {{"format", "riff.report"},
                 {"version", kFormatVersion},
                 {"seed", cell.seed},
                 {"model", to_string(mc.kind)},
                 {"chosen_splits", cell.chosen_splits},
                 {"line_search", std::move(line)},
                 {"riff", report_to_json(cell.riff_test)},
                 {"baseline",
                  {{"splits", cell.baseline_splits},
                   {"test", report_to_json(cell.baseline_test)}}}};
  write_json(dir / "report.json", report);
  cell.ok = true;
}

std::string timestamp_utc() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

PipelineResult run_pipeline(const ExperimentConfig& config) {
  config.validate();
  PipelineResult result;
  result.run_id = run_id(config);
  result.run_dir = config.out_dir / result.run_id;
  std::filesystem::create_directories(result.run_dir);
  write_json(result.run_dir / "config.json", config_to_json(config));

  const DatasetSplits splits = prepare_splits(config);
  write_split_manifest(splits, config.split, result.run_dir / "splits.txt");

  for (auto seed : config.seeds) {
    for (const auto& m : config.models) {
      CellResult cell;
      cell.seed = seed;
      cell.model = m.kind;
      result.cells.push_back(std::move(cell));
    }
  }

  // Cells are independent; each writes only under its own directory.
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < result.cells.size(); i = next++) {
      CellResult& cell = result.cells[i];
      const ModelConfig& mc = config.models[i % config.models.size()];
      try {
        run_cell(config, splits, result.run_dir, cell, mc);
      } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
        warn("cell seed=" + std::to_string(cell.seed) + " model=" +
             to_string(cell.model) + " failed: " + cell.error);
      }
    }
  };
  const std::size_t threads = std::min(config.jobs, result.cells.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  Json cells = Json::array();
  for (const auto& m : config.models) {
    std::vector<MetricsReport> riff_reports, baseline_reports;
    for (const auto& cell : result.cells) {
      if (cell.model != m.kind || !cell.ok) continue;
      riff_reports.push_back(cell.riff_test);
      baseline_reports.push_back(cell.baseline_test);
    }
    if (riff_reports.empty()) continue;
    result.riff[to_string(m.kind)] = aggregate_runs(riff_reports);
    result.baseline[to_string(m.kind)] = aggregate_runs(baseline_reports);
  }
  for (const auto& cell : result.cells) {
    Json c = {{"seed", cell.seed}, {"model", to_string(cell.model)}, {"ok", cell.ok}};
    if (cell.ok) {
      c["chosen_splits"] = cell.chosen_splits;
      c["riff_test_recall"] = cell.riff_test.recall_at_budget;
      c["rule_count"] = cell.riff_test.rule_count;
      c["baseline_splits"] = cell.baseline_splits;
      c["baseline_test_recall"] = cell.baseline_test.recall_at_budget;
    } else {
      c["error"] = cell.error;
    }
    cells.push_back(std::move(c));
  }
  Json aggregate = {{"format", "riff.aggregate"},
                    {"version", kFormatVersion},
                    {"run_id", result.run_id},
                    {"budget",
                     {{"metric", to_string(config.budget.metric)},
                      {"max_value", config.budget.max_value}}},
                    {"cells", std::move(cells)}};
  Json riff = Json::object();
  for (const auto& [k, v] : result.riff) riff[k] = aggregate_to_json(v);
  Json base = Json::object();
  for (const auto& [k, v] : result.baseline) base[k] = aggregate_to_json(v);
  aggregate["riff"] = std::move(riff);
  aggregate["baseline"] = std::move(base);
  write_json(result.run_dir / "aggregate.json", aggregate);
  write_text(result.run_dir / "report.txt", format_table(result, config.budget));

  std::ostringstream manifest;
  manifest << "run_id=" << result.run_id << '\n'
           << "created_utc=" << timestamp_utc() << '\n'
           << "cells=" << result.cells.size() << '\n'
           << "failed_cells="
           << std::count_if(result.cells.begin(), result.cells.end(),
                            [](const CellResult& c) { return !c.ok; })
           << '\n';
  write_text(result.run_dir / "manifest.txt", manifest.str());
  return result;
}

std::string format_table(const PipelineResult& result,
                         const BudgetConstraint& budget) {
  auto cell_text = [](const MetricSummary& s, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f +/- %.*f", precision, s.mean,
                  precision, s.stddev);
    return std::string(buf);
  };
  std::vector<std::array<std::string, 3>> rows;
  for (const auto& [kind, agg] : result.baseline) {
    (void)agg;
    const ModelKind k = model_kind_from_string(kind);
    const std::string name = label_for(k);
    rows.push_back({name, cell_text(result.baseline.at(kind).recall, 3), "-"});
    rows.push_back({name + " + RIFF", cell_text(result.riff.at(kind).recall, 3),
                    cell_text(result.riff.at(kind).rule_count, 1)});
  }
  const std::string recall_header =
      "Recall at " + format_double(budget.max_value * 100.0) + "% " +
      (budget.metric == BudgetMetric::kFpr ? "FPR" : "alert rate");
  std::array<std::string, 3> header = {"Model", recall_header, "Rule set length"};
  std::array<std::size_t, 3> width{};
  for (std::size_t c = 0; c < 3; ++c) {
    width[c] = header[c].size();
    for (const auto& r : rows) width[c] = std::max(width[c], r[c].size());
  }
  std::ostringstream out;
  auto emit = [&](const std::array<std::string, 3>& r) {
    for (std::size_t c = 0; c < 3; ++c) {
      out << r[c] << std::string(width[c] - r[c].size(), ' ');
      out << (c + 1 < 3 ? "  " : "\n");
    }
  };
  emit(header);
  emit({std::string(width[0], '-'), std::string(width[1], '-'),
        std::string(width[2], '-')});
  for (const auto& r : rows) emit(r);
  return out.str();
}

MetricsReport evaluate_external(const std::filesystem::path& rules_file,
                                const LabeledDataset& split,
                                const BudgetConstraint& budget,
                                std::string split_name) {
  const CandidateRuleSet rules = ruleset_from_json(read_json(rules_file));
  for (const auto& rule : rules.rules) {
    for (const auto& c : rule.conditions) {
      if (!split.feature_index(c.feature)) {
        throw SchemaError("rule file references feature '" + c.feature +
                          "' which the dataset does not have");
      }
    }
  }
  return evaluate_rules(rules.rules, split, budget, std::move(split_name));
}

}  // namespace riff
