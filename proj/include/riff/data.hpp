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

// Tabular datasets with binary labels: CSV ingestion, train/validation/test
// splitting and the rebalanced subsets used for rule induction and
// selection.

#ifndef RIFF_DATA_HPP
#define RIFF_DATA_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace riff {

using RowId = std::int64_t;

// Immutable dense feature matrix (row-major) with 0/1 labels. Every row
// carries a stable id assigned at load time; subsets keep the ids of their
// source rows.
class LabeledDataset {
 public:
  LabeledDataset() = default;

  // Validates the invariants and throws DataError/SchemaError on violation.
  // Empty `row_ids` means 0..n-1.
  LabeledDataset(std::vector<std::string> feature_names,
                 std::vector<double> features,
                 std::vector<std::uint8_t> labels,
                 std::vector<RowId> row_ids = {},
                 std::optional<std::vector<double>> order_key = std::nullopt);

  std::size_t num_rows() const { return labels_.size(); }
  std::size_t num_features() const { return feature_names_.size(); }
  bool empty() const { return labels_.empty(); }

  double value(std::size_t row, std::size_t feature) const {
    return features_[row * num_features() + feature];
  }
  std::span<const double> row(std::size_t r) const {
    return {features_.data() + r * num_features(), num_features()};
  }
  int label(std::size_t r) const { return labels_[r]; }
  RowId row_id(std::size_t r) const { return row_ids_[r]; }

  const std::vector<std::string>& feature_names() const {
    return feature_names_;
  }
  const std::vector<std::uint8_t>& labels() const { return labels_; }
  const std::vector<RowId>& row_ids() const { return row_ids_; }
  const std::optional<std::vector<double>>& order_key() const {
    return order_key_;
  }

  std::optional<std::size_t> feature_index(const std::string& name) const;

  std::size_t num_positives() const { return num_positives_; }
  std::size_t num_negatives() const { return num_rows() - num_positives_; }
  double positive_rate() const;

  // New dataset made of the rows at `positions`, in the given order.
  LabeledDataset select_rows(std::span<const std::size_t> positions) const;

  // Digest of (row ids, labels); identifies a selection set in artifacts.
  std::string digest() const;

 private:
  std::vector<std::string> feature_names_;
  std::vector<double> features_;
  std::vector<std::uint8_t> labels_;
  std::vector<RowId> row_ids_;
  std::optional<std::vector<double>> order_key_;
  std::unordered_map<std::string, std::size_t> name_index_;
  std::size_t num_positives_ = 0;
};

enum class CategoricalPolicy {
  // Categories mapped to 0..k-1 by descending frequency, ties broken
  // lexicographically.
  kOrdinalByFrequency,
  // One 0/1 column per category, named "<column>=<category>".
  kOneHot,
};

struct CsvOptions {
  std::string label_column;
  std::optional<std::string> order_column;
  // When set, row ids are read from this column instead of being assigned.
  std::optional<std::string> id_column;
  std::vector<std::string> drop_columns;
  CategoricalPolicy categorical_policy = CategoricalPolicy::kOrdinalByFrequency;
};

// Missing cells ("", NA, NaN, null, ?) become one below the column minimum.
LabeledDataset load_csv(const std::filesystem::path& path,
                        const CsvOptions& options);

// Writes features, the label (column "label") and the row id (column
// "row_id"), so the file reloads with id_column = "row_id".
void write_csv(const LabeledDataset& ds, const std::filesystem::path& path);

enum class SplitMode { kTemporal, kRandom };

struct SplitSpec {
  double train_fraction = 0.6;
  double validation_fraction = 0.2;
  double test_fraction = 0.2;
  SplitMode mode = SplitMode::kRandom;
  std::uint64_t seed = 0;

  // Throws ConfigError when fractions are out of range or do not sum to 1.
  void validate() const;
};

struct DatasetSplits {
  LabeledDataset train;
  LabeledDataset validation;
  LabeledDataset test;
};

// Temporal mode stable-sorts by the order key and assigns the earliest rows
// to train; random mode shuffles by seed and slices.
DatasetSplits split_dataset(const LabeledDataset& ds, const SplitSpec& spec);

// Sidecar manifest ("key=value" lines) for persisted splits.
void write_split_manifest(const DatasetSplits& splits, const SplitSpec& spec,
                          const std::filesystem::path& path);

// Rebalanced random subset of about round(sample_ratio * |ds|) rows with
// round(target_positive_rate * n) positives. When positives (or negatives)
// run short the subset shrinks, keeping the target rate, and a warning is
// emitted. Rows keep their relative order from `ds`.
LabeledDataset subsample(const LabeledDataset& ds, double sample_ratio,
                         double target_positive_rate, std::uint64_t seed);

enum class SubsetSizing {
  // Each of the two subsets receives sample_ratio of the train rows.
  kPerSubset,
  // The two subsets together receive sample_ratio of the train rows.
  kUnion,
};

struct InductionSelection {
  LabeledDataset induction;
  LabeledDataset selection;
};

// Two disjoint rebalanced subsets of `train`. When positives are scarce they
// are split evenly between the two subsets and both shrink.
InductionSelection make_induction_selection(
    const LabeledDataset& train, double sample_ratio,
    double target_positive_rate, std::uint64_t seed,
    SubsetSizing sizing = SubsetSizing::kPerSubset);

}  // namespace riff

#endif  // RIFF_DATA_HPP
