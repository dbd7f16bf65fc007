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

// riff: command-line driver.
//
// Exit codes: 0 success, 1 config/schema error, 2 data error, 3 internal.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "riff/common.hpp"
#include "riff/data.hpp"
#include "riff/eval.hpp"
#include "riff/io.hpp"
#include "riff/pipeline.hpp"
#include "riff/rules.hpp"
#include "riff/selection.hpp"
#include "riff/trees.hpp"

namespace {

namespace fs = std::filesystem;
using riff::ExperimentConfig;
using riff::Json;

constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitInternal = 3;

struct Overrides {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string model;
  std::string budget_metric;
  std::optional<double> budget_max;
  std::vector<std::size_t> grid;
  std::optional<double> tau;
  std::string out;
  std::optional<std::size_t> jobs;
};

void add_common(CLI::App* app, Overrides& o, bool require_config = true) {
  auto* c = app->add_option("--config", o.config, "Experiment config (JSON)");
  if (require_config) c->required();
  app->add_option("--seed", o.seeds, "Seed (repeatable)");
  app->add_option("--model", o.model, "Model kind")
      ->check(CLI::IsMember({"cart", "figs", "figu"}));
  app->add_option("--budget-metric", o.budget_metric, "Budget metric")
      ->check(CLI::IsMember({"fpr", "alert-rate"}));
  app->add_option("--budget-max", o.budget_max, "Budget maximum");
  app->add_option("--grid", o.grid, "Split-budget grid, e.g. 10,20,30")
      ->delimiter(',');
  app->add_option("--tau", o.tau, "FIGU precision threshold");
  app->add_option("--out", o.out, "Output directory or file");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = riff::load_config(o.config);
  if (!o.seeds.empty()) c.seeds = o.seeds;
  if (!o.model.empty()) {
    const auto kind = riff::model_kind_from_string(o.model);
    riff::ModelConfig m;
    for (const auto& existing : c.models) {
      if (existing.kind == kind) m = existing;
    }
    m.kind = kind;
    c.models = {m};
  }
  if (!o.budget_metric.empty()) {
    c.budget.metric = riff::budget_metric_from_string(o.budget_metric);
  }
  if (o.budget_max) c.budget.max_value = *o.budget_max;
  if (!o.grid.empty()) c.grid = o.grid;
  if (o.tau) {
    for (auto& m : c.models) m.tau = *o.tau;
  }
  if (!o.out.empty()) c.out_dir = o.out;
  if (o.jobs) c.jobs = *o.jobs;
  c.validate();
  return c;
}

std::uint64_t single_seed(const ExperimentConfig& c) { return c.seeds.front(); }

riff::LabeledDataset pick_split(const ExperimentConfig& c,
                                const std::string& name) {
  riff::DatasetSplits splits = riff::prepare_splits(c);
  if (name == "train") return std::move(splits.train);
  if (name == "validation") return std::move(splits.validation);
  if (name == "test") return std::move(splits.test);
  auto sets = riff::prepare_subsets(c, splits.train, single_seed(c),
                                    c.resample_per_grid_value ? c.grid.front() : 0);
  if (name == "induction") return std::move(sets.induction);
  if (name == "selection") return std::move(sets.selection);
  throw riff::ConfigError("unknown split '" + name + "'");
}

void emit(const Json& doc, const std::string& out) {
  if (out.empty()) {
    std::cout << doc.dump(2) << '\n';
  } else {
    riff::write_json(out, doc);
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Rule induction from decision trees under an FPR or alert-rate budget"};
  app.require_subcommand(1);

  Overrides o;

  auto* split = app.add_subcommand("split", "Split the dataset and write CSVs");
  add_common(split, o);

  auto* train = app.add_subcommand(
      "train", "Grow a model on the induction set of one seed");
  add_common(train, o);
  std::size_t splits_budget = 0;
  train->add_option("--splits", splits_budget,
                    "Total split budget (defaults to the first grid value)");

  auto* extract = app.add_subcommand("extract", "Extract candidate rules from a model");
  std::string model_file;
  extract->add_option("--model-file", model_file, "model.json")->required();
  extract->add_option("--out", o.out, "Output rules.json");

  auto* select = app.add_subcommand(
      "select", "Greedy rule selection on the selection set of one seed");
  add_common(select, o);
  std::string rules_file;
  select->add_option("--rules", rules_file, "Candidate rules.json")->required();

  auto* evaluate = app.add_subcommand(
      "evaluate", "Evaluate a rule file, a selection or external scores on a split");
  add_common(evaluate, o);
  std::string selection_file, scores_file, split_name = "test";
  evaluate->add_option("--rules", rules_file, "Rule-set file");
  evaluate->add_option("--selection", selection_file,
                       "selection.json indexing --rules");
  evaluate->add_option("--scores", scores_file, "External scores CSV (row_id,score)");
  evaluate->add_option("--split", split_name, "train|validation|test|induction|selection");

  auto* run_cmd = app.add_subcommand("run", "Run the full experiment protocol");
  add_common(run_cmd, o);
  run_cmd->add_option("--jobs", o.jobs, "Parallel (seed, model) cells");

  auto* export_rules =
      app.add_subcommand("export-rules", "Print a rule file in readable form");
  export_rules->add_option("--rules", rules_file, "Rule-set file")->required();
  export_rules->add_option("--out", o.out, "Output text file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (*split) {
    const ExperimentConfig c = resolve(o);
    const fs::path dir = o.out.empty() ? fs::path("splits") : fs::path(o.out);
    fs::create_directories(dir);
    const riff::DatasetSplits s = riff::prepare_splits(c);
    riff::write_csv(s.train, dir / "train.csv");
    riff::write_csv(s.validation, dir / "validation.csv");
    riff::write_csv(s.test, dir / "test.csv");
    riff::write_split_manifest(s, c.split, dir / "manifest.txt");
    std::cout << "train=" << s.train.num_rows()
              << " validation=" << s.validation.num_rows()
              << " test=" << s.test.num_rows() << '\n';
  } else if (*train) {
    const ExperimentConfig c = resolve(o);
    const auto s = riff::prepare_splits(c);
    const auto budget = splits_budget ? splits_budget : c.grid.front();
    const auto sets = riff::prepare_subsets(c, s.train, single_seed(c), budget);
    const auto model = riff::train_model(c.models.front(), sets.induction, budget);
    emit(riff::model_to_json(model), o.out);
  } else if (*extract) {
    const auto model = riff::model_from_json(riff::read_json(model_file));
    emit(riff::ruleset_to_json(riff::extract_rules(model)), o.out);
  } else if (*select) {
    const ExperimentConfig c = resolve(o);
    const Json rules_doc = riff::read_json(rules_file);
    const auto candidates = riff::ruleset_from_json(rules_doc);
    const auto s = riff::prepare_splits(c);
    const auto sets = riff::prepare_subsets(c, s.train, single_seed(c),
                                            c.resample_per_grid_value ? c.grid.front() : 0);
    const auto result = riff::greedy_select(candidates, sets.selection, c.budget);
    emit(riff::selection_to_json(result, riff::json_digest(rules_doc)), o.out);
  } else if (*evaluate) {
    const ExperimentConfig c = resolve(o);
    const riff::LabeledDataset ds = pick_split(c, split_name);
    riff::MetricsReport report;
    if (!scores_file.empty()) {
      const auto scores = riff::load_scores(scores_file, ds);
      report = riff::evaluate_scores(scores, ds, c.budget, split_name);
    } else if (!selection_file.empty()) {
      if (rules_file.empty()) throw riff::ConfigError("--selection needs --rules");
      const auto candidates = riff::ruleset_from_json(riff::read_json(rules_file));
      const auto result =
          riff::selection_from_json(riff::read_json(selection_file), candidates);
      report = riff::evaluate_ruleset(result, ds, c.budget, split_name);
    } else if (!rules_file.empty()) {
      report = riff::evaluate_external(rules_file, ds, c.budget, split_name);
    } else {
      throw riff::ConfigError("evaluate needs --rules, --selection or --scores");
    }
    emit(riff::report_to_json(report), o.out);
  } else if (*run_cmd) {
    const ExperimentConfig c = resolve(o);
    const auto result = riff::run_pipeline(c);
    std::cout << "run " << result.run_id << " -> " << result.run_dir.string() << "\n\n"
              << riff::format_table(result, c.budget);
    for (const auto& cell : result.cells) {
      if (!cell.ok) {
        std::cerr << "cell seed=" << cell.seed << " model=" << riff::to_string(cell.model)
                  << " failed: " << cell.error << '\n';
      }
    }
  } else if (*export_rules) {
    const auto rules = riff::ruleset_from_json(riff::read_json(rules_file));
    const std::string text = riff::ruleset_to_text(rules);
    if (o.out.empty()) {
      std::cout << text;
    } else {
      riff::write_text(o.out, text);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const riff::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const riff::SchemaError& e) {
    std::cerr << "schema error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const riff::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
