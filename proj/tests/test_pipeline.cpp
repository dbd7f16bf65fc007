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


#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "riff/common.hpp"
#include "riff/io.hpp"
#include "riff/pipeline.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace riff;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "riff_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config: JSON round trip and validation") {
  const auto dir = scratch("config");
  ExperimentConfig c = test::synthetic_config(dir, 200);
  const Json doc = config_to_json(c);
  const ExperimentConfig back = config_from_json(doc);
  CHECK(config_to_json(back) == doc);
  CHECK(run_id(back) == run_id(c));
  c.out_dir = "elsewhere";
  CHECK(run_id(back) == run_id(c));
  c.grid = {10, 5};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.grid = {};
  CHECK_THROWS_AS(c.validate(), ConfigError);

  Json bad = doc;
  bad["grid"] = "ten";
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = doc;
  bad["split"]["mode"] = "sideways";
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  bad = doc;
  bad["models"] = Json::array({"xgboost"});
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
}

TEST_CASE("config: relative dataset path resolves against the config file") {
  const auto dir = scratch("relative");
  std::ofstream(dir / "c.json") << R"({"dataset": {"path": "d.csv", "label_column": "y"},
                                      "models": ["cart", {"kind": "figu", "tau": 0.4}]})";
  const auto c = load_config(dir / "c.json");
  CHECK(c.dataset_path == dir / "d.csv");
  REQUIRE(c.models.size() == 2);
  CHECK(c.models[1].tau == 0.4);
  CHECK(c.grid == std::vector<std::size_t>{10, 20, 30, 40, 50});
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
}

TEST_CASE("serialization: model, rule set and selection round trip") {
  std::mt19937_64 rng(73);
  const auto ds = test::random_dataset(rng, 200, 3, 6, 0.1);
  for (const auto& model : {grow_cart(ds, 6, 2), grow_figs(ds, 6, 2), grow_figu(ds, 6, 2)}) {
    const Json mj = model_to_json(model);
    const ForestModel back = model_from_json(mj);
    CHECK(model_to_json(back) == mj);
    CHECK(model_digest(back) == model_digest(model));
    const auto rules = extract_rules(model);
    const Json rj = ruleset_to_json(rules);
    const auto rback = ruleset_from_json(rj);
    CHECK(rback.rules == rules.rules);
    const auto sel = greedy_select(rules, ds, BudgetConstraint{BudgetMetric::kFpr, 0.1});
    const Json sj = selection_to_json(sel, json_digest(rj));
    const auto sback = selection_from_json(sj, rback);
    CHECK(sback.step_trace == sel.step_trace);
    CHECK(sback.ordered_rules == sel.ordered_rules);
    CHECK(sback.last_rule_probability == sel.last_rule_probability);
  }
}

TEST_CASE("serialization: malformed documents raise schema errors") {
  CHECK_THROWS_AS(model_from_json(Json::object()), SchemaError);
  CHECK_THROWS_AS(ruleset_from_json(Json{{"format", "riff.ruleset"}, {"version", 1}}),
                  SchemaError);
  CHECK_THROWS_AS(ruleset_from_json(Json{{"format", "riff.model"}, {"version", 1},
                                         {"rules", Json::array()}}),
                  SchemaError);
  Json bad_op = Json{{"format", "riff.ruleset"},
                     {"version", 1},
                     {"rules", Json::array({Json{{"conditions",
                                                  Json::array({Json{{"feature", "a"},
                                                                    {"op", "=="},
                                                                    {"threshold", 1}}})}}})}};
  CHECK_THROWS_AS(ruleset_from_json(bad_op), SchemaError);
}

TEST_CASE("pipeline: artifacts, tuning and external evaluation") {
  const auto dir = scratch("pipeline");
  ExperimentConfig c = test::synthetic_config(dir, 2000);
  c.jobs = 3;
  const auto result = run_pipeline(c);
  REQUIRE(result.cells.size() == 6);
  const auto splits = prepare_splits(c);
  for (const auto& cell : result.cells) {
    REQUIRE_MESSAGE(cell.ok, cell.error);
    CHECK(std::find(c.grid.begin(), c.grid.end(), cell.chosen_splits) != c.grid.end());
    CHECK(cell.line_search.size() == c.grid.size());
    for (const char* f : {"model.json", "rules.json", "selection.json", "report.json",
                          "selected_rules.json", "selected_rules.txt"}) {
      CHECK(fs::exists(cell.artifact_dir / f));
    }
    // Re-importing the exported rule set reproduces the pipeline's test metrics.
    const auto external =
        evaluate_external(cell.artifact_dir / "selected_rules.json", splits.test, c.budget);
    CHECK(external.recall_at_budget == doctest::Approx(cell.riff_test.recall_at_budget).epsilon(1e-12));
    CHECK(external.budget_metric_value ==
          doctest::Approx(cell.riff_test.budget_metric_value).epsilon(1e-12));
    CHECK(external.rule_count == cell.riff_test.rule_count);
  }
  for (const char* f : {"config.json", "splits.txt", "aggregate.json", "report.txt",
                        "manifest.txt"}) {
    CHECK(fs::exists(result.run_dir / f));
  }
  CHECK(result.riff.size() == 3);
  const std::string table = format_table(result, c.budget);
  CHECK(table.find("CART + RIFF") != std::string::npos);
  CHECK(table.find("FIGU + RIFF") != std::string::npos);
}

TEST_CASE("pipeline: a single grid value skips tuning") {
  const auto dir = scratch("single_grid");
  ExperimentConfig c = test::synthetic_config(dir, 1000);
  c.grid = {5};
  c.seeds = {3};
  c.models = {{ModelKind::kCart}};
  const auto result = run_pipeline(c);
  REQUIRE(result.cells.size() == 1);
  REQUIRE(result.cells[0].ok);
  CHECK(result.cells[0].chosen_splits == 5);
  CHECK(result.riff.at("cart").recall.single_run);
}

TEST_CASE("pipeline: candidate filtering and a missing dataset") {
  const auto dir = scratch("filtering");
  ExperimentConfig c = test::synthetic_config(dir, 1000);
  c.models = {{ModelKind::kCart}};
  c.filter_candidates = true;
  c.seeds = {0};
  const auto ok = run_pipeline(c);
  CHECK(ok.cells[0].ok);
  c.dataset_path = dir / "nope.csv";
  CHECK_THROWS_AS(run_pipeline(c), DataError);
}

TEST_CASE("external rules: hand-written file on a 20-row fixture") {
  const auto dir = scratch("external");
  std::vector<std::vector<double>> rows;
  std::vector<std::uint8_t> labels;
  for (int i = 0; i < 20; ++i) {
    rows.push_back({static_cast<double>(i), static_cast<double>(i % 3)});
    labels.push_back(i % 4 == 0 ? 1 : 0);
  }
  const auto ds = test::make_dataset(rows, labels, {"amount", "channel"});
  // Rule 1: amount <= 4 covers rows 0..4 (pos 0, 4). Rule 2: amount > 15 and
  // channel <= 0 covers 18 (neg). Positives: 0,4,8,12,16.
  std::ofstream(dir / "rules.json") << R"({"format": "riff.ruleset", "version": 1, "rules": [
      {"conditions": [{"feature": "amount", "op": "<=", "threshold": 4}]},
      {"conditions": [{"feature": "amount", "op": ">", "threshold": 15},
                      {"feature": "channel", "op": "<=", "threshold": 0}]}]})";
  const auto report =
      evaluate_external(dir / "rules.json", ds, BudgetConstraint{BudgetMetric::kFpr, 0.2});
  CHECK(report.recall_at_budget == doctest::Approx(2.0 / 5.0));
  CHECK(report.budget_metric_value == doctest::Approx(4.0 / 15.0));
  CHECK(report.rule_count == 2);

  std::ofstream(dir / "empty.json") << R"({"format": "riff.ruleset", "version": 1, "rules": []})";
  const auto empty =
      evaluate_external(dir / "empty.json", ds, BudgetConstraint{BudgetMetric::kFpr, 0.2});
  CHECK(empty.recall_at_budget == 0.0);
  CHECK(empty.budget_metric_value == 0.0);

  std::ofstream(dir / "bad.json") << R"({"format": "riff.ruleset", "version": 1, "rules": [
      {"conditions": [{"feature": "velocity", "op": ">", "threshold": 1}]}]})";
  try {
    evaluate_external(dir / "bad.json", ds, BudgetConstraint{});
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("velocity") != std::string::npos);
  }
}
