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

// End-to-end experiment protocol: split, rebalance, grow trees over a grid of
// split budgets, extract and select rules, tune the budget on validation and
// report on test, for every (seed, model) cell.

#ifndef RIFF_PIPELINE_HPP
#define RIFF_PIPELINE_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "riff/data.hpp"
#include "riff/eval.hpp"
#include "riff/io.hpp"
#include "riff/selection.hpp"
#include "riff/trees.hpp"

namespace riff {

enum class ModelKind { kCart, kFigs, kFigu };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct ModelConfig {
  ModelKind kind = ModelKind::kCart;
  std::size_t min_leaf = 5;
  double tau = 0.5;            // figu only
  std::size_t max_trees = 0;   // figs/figu; 0 = unbounded
};

struct ExperimentConfig {
  std::filesystem::path dataset_path;
  CsvOptions csv;
  SplitSpec split;
  double sample_ratio = 0.1;
  double target_positive_rate = 0.3;
  SubsetSizing sizing = SubsetSizing::kPerSubset;
  // Draw fresh induction/selection subsets for every grid value instead of
  // once per seed.
  bool resample_per_grid_value = false;
  // Drop candidates whose induction precision is below the induction base
  // rate.
  bool filter_candidates = false;
  BudgetConstraint budget;
  std::vector<ModelConfig> models;
  std::vector<std::size_t> grid = {10, 20, 30, 40, 50};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::filesystem::path out_dir = "runs";
  std::size_t jobs = 1;

  // Throws ConfigError.
  void validate() const;
};

// JSON config; every field except dataset.path and dataset.label_column
// has a default. Relative dataset paths resolve against `base_dir`.
ExperimentConfig config_from_json(const Json& doc,
                                  const std::filesystem::path& base_dir = {});
Json config_to_json(const ExperimentConfig& config);
ExperimentConfig load_config(const std::filesystem::path& path);

// Content hash of the parts of the config that affect results.
std::string run_id(const ExperimentConfig& config);

// Loads the dataset and splits it.
DatasetSplits prepare_splits(const ExperimentConfig& config);

// Induction/selection subsets for a seed (and grid value when resampling
// per grid value).
InductionSelection prepare_subsets(const ExperimentConfig& config,
                                   const LabeledDataset& train,
                                   std::uint64_t seed,
                                   std::size_t grid_value = 0);

ForestModel train_model(const ModelConfig& model, const LabeledDataset& induction,
                        std::size_t max_splits);

// Candidates from `model`, optionally filtered by the induction base rate.
CandidateRuleSet make_candidates(const ExperimentConfig& config,
                                 const ForestModel& model,
                                 const LabeledDataset& induction);

struct GridPoint {
  std::size_t splits = 0;
  double riff_validation_recall = 0.0;
  double model_validation_recall = 0.0;
  std::size_t rule_count = 0;
};

struct CellResult {
  std::uint64_t seed = 0;
  ModelKind model = ModelKind::kCart;
  bool ok = false;
  std::string error;
  std::vector<GridPoint> line_search;
  std::size_t chosen_splits = 0;
  MetricsReport riff_test;
  std::size_t baseline_splits = 0;
  MetricsReport baseline_test;
  std::filesystem::path artifact_dir;
};

struct PipelineResult {
  std::string run_id;
  std::filesystem::path run_dir;
  std::vector<CellResult> cells;
  // Keyed by model kind name.
  std::map<std::string, AggregateReport> riff;
  std::map<std::string, AggregateReport> baseline;
};

// Runs every (seed, model) cell, writing artifacts under
// <out_dir>/<run_id>/<seed>/<model>/. A failing cell records its error and
// the others proceed.
PipelineResult run_pipeline(const ExperimentConfig& config);

// Plain-text table of mean +/- std recall and rule count per model.
std::string format_table(const PipelineResult& result,
                         const BudgetConstraint& budget);

// Metrics of a rule-set file (for instance expert rules) on a split.
// Throws SchemaError naming a feature the split lacks.
MetricsReport evaluate_external(const std::filesystem::path& rules_file,
                                const LabeledDataset& split,
                                const BudgetConstraint& budget,
                                std::string split_name = {});

}  // namespace riff

#endif  // RIFF_PIPELINE_HPP
