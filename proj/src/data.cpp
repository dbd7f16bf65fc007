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

#include "riff/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "riff/common.hpp"

namespace riff {

LabeledDataset::LabeledDataset(std::vector<std::string> feature_names,
                               std::vector<double> features,
                               std::vector<std::uint8_t> labels,
                               std::vector<RowId> row_ids,
                               std::optional<std::vector<double>> order_key)
    : feature_names_(std::move(feature_names)),
      features_(std::move(features)),
      labels_(std::move(labels)),
      row_ids_(std::move(row_ids)),
      order_key_(std::move(order_key)) {
  const std::size_t n = labels_.size();
  if (features_.size() != n * feature_names_.size()) {
    throw DataError("feature matrix has " + std::to_string(features_.size()) +
                    " cells, expected " + std::to_string(n) + " x " +
                    std::to_string(feature_names_.size()));
  }
  for (std::size_t i = 0; i < feature_names_.size(); ++i) {
    if (!name_index_.emplace(feature_names_[i], i).second) {
      throw SchemaError("duplicate feature name '" + feature_names_[i] + "'");
    }
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (labels_[r] > 1) {
      throw DataError("label at row " + std::to_string(r) + " is not 0/1");
    }
    num_positives_ += labels_[r];
  }
  for (double v : features_) {
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
  if (row_ids_.empty()) {
    row_ids_.resize(n);
    std::iota(row_ids_.begin(), row_ids_.end(), RowId{0});
  } else if (row_ids_.size() != n) {
    throw DataError("row id count does not match row count");
  }
  if (order_key_ && order_key_->size() != n) {
    throw DataError("order key length does not match row count");
  }
}

std::optional<std::size_t> LabeledDataset::feature_index(
    const std::string& name) const {
  auto it = name_index_.find(name);
  if (it == name_index_.end()) return std::nullopt;
  return it->second;
}

double LabeledDataset::positive_rate() const {
  return empty() ? 0.0
                 : static_cast<double>(num_positives_) /
                       static_cast<double>(num_rows());
}

LabeledDataset LabeledDataset::select_rows(
    std::span<const std::size_t> positions) const {
  const std::size_t f = num_features();
  std::vector<double> features;
  features.reserve(positions.size() * f);
  std::vector<std::uint8_t> labels;
  labels.reserve(positions.size());
  std::vector<RowId> ids;
  ids.reserve(positions.size());
  std::optional<std::vector<double>> order;
  if (order_key_) order.emplace().reserve(positions.size());
  for (std::size_t p : positions) {
    auto r = row(p);
    features.insert(features.end(), r.begin(), r.end());
    labels.push_back(labels_[p]);
    ids.push_back(row_ids_[p]);
    if (order) order->push_back((*order_key_)[p]);
  }
  return LabeledDataset(feature_names_, std::move(features), std::move(labels),
                        std::move(ids), std::move(order));
}

std::string LabeledDataset::digest() const {
  std::string bytes;
  bytes.reserve(num_rows() * 10);
  for (std::size_t r = 0; r < num_rows(); ++r) {
    bytes += std::to_string(row_ids_[r]);
    bytes += labels_[r] ? ":1;" : ":0;";
  }
  return fnv1a_hex(bytes);
}

// ---------------------------------------------------------------------------
// CSV ingestion

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

// Splits one record; handles quoted fields with "" escapes. Returns false at
// end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
  fields.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  std::string field;
  bool quoted = false;
  bool was_quoted = false;
  for (std::size_t i = 0;; ++i) {
    if (i == line.size()) {
      if (quoted) {
        // Quoted field spanning lines.
        std::string next;
        if (!std::getline(in, next)) throw DataError("unterminated quote in CSV");
        field += '\n';
        line = std::move(next);
        i = static_cast<std::size_t>(-1);
        continue;
      }
      break;
    }
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
      was_quoted = true;
    } else if (c == ',') {
      fields.push_back(was_quoted ? field : std::string(trim(field)));
      field.clear();
      was_quoted = false;
    } else {
      field += c;
    }
  }
  fields.push_back(was_quoted ? field : std::string(trim(field)));
  return true;
}

bool is_missing(std::string_view s) {
  static const std::set<std::string_view> kMissing = {
      "", "NA", "N/A", "NaN", "nan", "NAN", "null", "NULL", "None", "?"};
  return kMissing.contains(s);
}

std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

struct RawColumn {
  std::string name;
  std::vector<std::string> cells;
};

// Encodes one raw column into one or more numeric columns.
void encode_column(const RawColumn& col, CategoricalPolicy policy,
                   std::vector<std::string>& names,
                   std::vector<std::vector<double>>& columns) {
  const std::size_t n = col.cells.size();
  bool numeric = true;
  for (const auto& cell : col.cells) {
    if (!is_missing(cell) && !parse_double(cell)) {
      numeric = false;
      break;
    }
  }

  std::vector<double> values(n, 0.0);
  std::vector<bool> missing(n, false);
  if (numeric) {
    for (std::size_t r = 0; r < n; ++r) {
      if (is_missing(col.cells[r])) {
        missing[r] = true;
      } else {
        values[r] = *parse_double(col.cells[r]);
      }
    }
  } else {
    std::map<std::string, std::size_t> counts;
    for (const auto& cell : col.cells) {
      if (!is_missing(cell)) ++counts[cell];
    }
    std::vector<std::pair<std::string, std::size_t>> order(counts.begin(),
                                                           counts.end());
    // std::map iteration is lexicographic, so a stable sort on frequency
    // leaves ties in lexicographic order.
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (policy == CategoricalPolicy::kOneHot) {
      for (const auto& [category, count] : order) {
        std::vector<double> indicator(n, 0.0);
        for (std::size_t r = 0; r < n; ++r) {
          if (col.cells[r] == category) indicator[r] = 1.0;
        }
        names.push_back(col.name + "=" + category);
        columns.push_back(std::move(indicator));
      }
      return;
    }
    std::map<std::string, double> code;
    for (std::size_t i = 0; i < order.size(); ++i) {
      code[order[i].first] = static_cast<double>(i);
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (is_missing(col.cells[r])) {
        missing[r] = true;
      } else {
        values[r] = code[col.cells[r]];
      }
    }
  }

  if (std::find(missing.begin(), missing.end(), true) != missing.end()) {
    double min_value = 0.0;
    bool any = false;
    for (std::size_t r = 0; r < n; ++r) {
      if (missing[r]) continue;
      min_value = any ? std::min(min_value, values[r]) : values[r];
      any = true;
    }
    const double sentinel = min_value - 1.0;
    for (std::size_t r = 0; r < n; ++r) {
      if (missing[r]) values[r] = sentinel;
    }
  }
  names.push_back(col.name);
  columns.push_back(std::move(values));
}

}  // namespace

LabeledDataset load_csv(const std::filesystem::path& path,
                        const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");

  std::vector<std::string> header;
  if (!read_record(in, header)) {
    throw SchemaError("'" + path.string() + "' has no header row");
  }
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) {
    header[0].erase(0, 3);
  }
  std::unordered_map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!position.emplace(header[i], i).second) {
      throw SchemaError("duplicate column '" + header[i] + "'");
    }
  }
  auto require = [&](const std::string& name) {
    auto it = position.find(name);
    if (it == position.end()) throw SchemaError("missing column '" + name + "'");
    return it->second;
  };
  const std::size_t label_pos = require(options.label_column);
  std::optional<std::size_t> order_pos;
  if (options.order_column) order_pos = require(*options.order_column);
  std::optional<std::size_t> id_pos;
  if (options.id_column) id_pos = require(*options.id_column);
  std::set<std::size_t> skip = {label_pos};
  if (order_pos) skip.insert(*order_pos);
  if (id_pos) skip.insert(*id_pos);
  for (const auto& name : options.drop_columns) skip.insert(require(name));

  std::vector<RawColumn> raw;
  std::vector<std::size_t> raw_pos;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (skip.contains(i)) continue;
    raw.push_back({header[i], {}});
    raw_pos.push_back(i);
  }

  std::vector<std::uint8_t> labels;
  std::vector<double> order;
  std::vector<RowId> ids;
  std::vector<std::string> fields;
  std::size_t data_row = 0;
  while (read_record(in, fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != header.size()) {
      throw DataError("row " + std::to_string(data_row) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(header.size()));
    }
    auto label = parse_double(fields[label_pos]);
    if (!label || (*label != 0.0 && *label != 1.0)) {
      throw DataError("unparseable label '" + fields[label_pos] + "' at row " +
                      std::to_string(data_row));
    }
    labels.push_back(*label == 1.0 ? 1 : 0);
    if (order_pos) {
      auto key = parse_double(fields[*order_pos]);
      if (!key) {
        throw DataError("unparseable order key at row " +
                        std::to_string(data_row));
      }
      order.push_back(*key);
    }
    if (id_pos) {
      RowId id = 0;
      const auto& s = fields[*id_pos];
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), id);
      if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw DataError("unparseable row id at row " + std::to_string(data_row));
      }
      ids.push_back(id);
    }
    for (std::size_t c = 0; c < raw.size(); ++c) {
      raw[c].cells.push_back(std::move(fields[raw_pos[c]]));
    }
    ++data_row;
  }

  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  for (const auto& col : raw) {
    encode_column(col, options.categorical_policy, names, columns);
  }
  const std::size_t n = labels.size();
  std::vector<double> features(n * columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    for (std::size_t r = 0; r < n; ++r) {
      features[r * columns.size() + c] = columns[c][r];
    }
  }
  if (id_pos) {
    std::set<RowId> seen(ids.begin(), ids.end());
    if (seen.size() != ids.size()) throw DataError("duplicate row ids");
  }
  std::optional<std::vector<double>> order_key;
  if (order_pos) order_key = std::move(order);
  return LabeledDataset(std::move(names), std::move(features),
                        std::move(labels), std::move(ids),
                        std::move(order_key));
}

void write_csv(const LabeledDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  out << "row_id";
  for (const auto& name : ds.feature_names()) out << ',' << quote(name);
  out << ",label\n";
  for (std::size_t r = 0; r < ds.num_rows(); ++r) {
    out << ds.row_id(r);
    for (double v : ds.row(r)) out << ',' << format_double(v);
    out << ',' << ds.label(r) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Splitting

void SplitSpec::validate() const {
  for (double f : {train_fraction, validation_fraction, test_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) {
      throw ConfigError("split fractions must lie in [0, 1]");
    }
  }
  if (std::abs(train_fraction + validation_fraction + test_fraction - 1.0) >
      1e-9) {
    throw ConfigError("split fractions must sum to 1");
  }
}

namespace {

std::vector<std::size_t> shuffled_positions(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    std::swap(idx[i - 1], idx[uniform_below(rng, i)]);
  }
  return idx;
}

}  // namespace

DatasetSplits split_dataset(const LabeledDataset& ds, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = ds.num_rows();
  std::vector<std::size_t> order;
  if (spec.mode == SplitMode::kTemporal) {
    if (!ds.order_key()) {
      throw ConfigError("temporal split requires an order column");
    }
    order.resize(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& key = *ds.order_key();
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return key[a] < key[b]; });
  } else {
    order = shuffled_positions(n, derive_seed(spec.seed, "split"));
  }
  const double dn = static_cast<double>(n);
  const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * dn));
  const auto n_train_val = std::min(
      n, static_cast<std::size_t>(std::llround(
             (spec.train_fraction + spec.validation_fraction) * dn)));
  std::span<const std::size_t> all(order);
  return DatasetSplits{
      ds.select_rows(all.subspan(0, std::min(n_train, n))),
      ds.select_rows(all.subspan(std::min(n_train, n),
                                 n_train_val - std::min(n_train, n_train_val))),
      ds.select_rows(all.subspan(n_train_val)),
  };
}

void write_split_manifest(const DatasetSplits& splits, const SplitSpec& spec,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "mode=" << (spec.mode == SplitMode::kTemporal ? "temporal" : "random")
      << '\n'
      << "seed=" << spec.seed << '\n'
      << "train_fraction=" << format_double(spec.train_fraction) << '\n'
      << "validation_fraction=" << format_double(spec.validation_fraction)
      << '\n'
      << "test_fraction=" << format_double(spec.test_fraction) << '\n'
      << "train_rows=" << splits.train.num_rows() << '\n'
      << "validation_rows=" << splits.validation.num_rows() << '\n'
      << "test_rows=" << splits.test.num_rows() << '\n'
      << "train_positives=" << splits.train.num_positives() << '\n'
      << "validation_positives=" << splits.validation.num_positives() << '\n'
      << "test_positives=" << splits.test.num_positives() << '\n';
}

// ---------------------------------------------------------------------------
// Rebalanced sampling

namespace {

void check_sampling_args(double sample_ratio, double target_positive_rate) {
  if (!(sample_ratio > 0.0 && sample_ratio <= 1.0)) {
    throw ConfigError("sample ratio must lie in (0, 1]");
  }
  if (!(target_positive_rate > 0.0 && target_positive_rate < 1.0)) {
    throw ConfigError("target positive rate must lie in (0, 1)");
  }
}

struct SampleSize {
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

std::size_t round_to_size(double x) {
  return static_cast<std::size_t>(std::llround(std::max(0.0, x)));
}

// Plans a subset of `target_rows` rows at `rate`, shrinking (at the same
// rate) to fit the available positives and negatives.
SampleSize plan_sample(std::size_t target_rows, double rate,
                       std::size_t pos_available, std::size_t neg_available,
                       const char* what) {
  SampleSize s;
  s.positives = round_to_size(rate * static_cast<double>(target_rows));
  s.negatives = target_rows - std::min(target_rows, s.positives);
  if (s.positives > pos_available) {
    const std::size_t n = round_to_size(static_cast<double>(pos_available) / rate);
    warn(std::string(what) + ": only " + std::to_string(pos_available) +
         " positives available for " + std::to_string(s.positives) +
         " requested; shrinking subset from " + std::to_string(target_rows) +
         " to " + std::to_string(n) + " rows");
    s.positives = pos_available;
    s.negatives = n - pos_available;
  }
  if (s.negatives > neg_available) {
    const std::size_t n =
        round_to_size(static_cast<double>(neg_available) / (1.0 - rate));
    warn(std::string(what) + ": only " + std::to_string(neg_available) +
         " negatives available for " + std::to_string(s.negatives) +
         " requested; shrinking subset to " + std::to_string(n) + " rows");
    s.negatives = neg_available;
    s.positives = std::min(s.positives, n - std::min(n, neg_available));
  }
  if (s.positives == 0) {
    throw DataError(std::string(what) + ": no positives available to sample");
  }
  return s;
}

struct ClassPools {
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
};

// Row positions per class, each shuffled independently.
ClassPools shuffled_pools(const LabeledDataset& ds, std::uint64_t seed) {
  ClassPools pools;
  for (std::size_t r = 0; r < ds.num_rows(); ++r) {
    (ds.label(r) ? pools.positives : pools.negatives).push_back(r);
  }
  auto shuffle = [](std::vector<std::size_t>& v, std::uint64_t s) {
    Rng rng(s);
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_below(rng, i)]);
    }
  };
  shuffle(pools.positives, derive_seed(seed, "positives"));
  shuffle(pools.negatives, derive_seed(seed, "negatives"));
  return pools;
}

LabeledDataset take(const LabeledDataset& ds, const ClassPools& pools,
                    std::size_t pos_offset, std::size_t neg_offset,
                    const SampleSize& size) {
  std::vector<std::size_t> rows;
  rows.reserve(size.positives + size.negatives);
  rows.insert(rows.end(), pools.positives.begin() + pos_offset,
              pools.positives.begin() + pos_offset + size.positives);
  rows.insert(rows.end(), pools.negatives.begin() + neg_offset,
              pools.negatives.begin() + neg_offset + size.negatives);
  std::sort(rows.begin(), rows.end());
  return ds.select_rows(rows);
}

}  // namespace

LabeledDataset subsample(const LabeledDataset& ds, double sample_ratio,
                         double target_positive_rate, std::uint64_t seed) {
  check_sampling_args(sample_ratio, target_positive_rate);
  const std::size_t target =
      round_to_size(sample_ratio * static_cast<double>(ds.num_rows()));
  const SampleSize size =
      plan_sample(target, target_positive_rate, ds.num_positives(),
                  ds.num_negatives(), "subsample");
  return take(ds, shuffled_pools(ds, seed), 0, 0, size);
}

InductionSelection make_induction_selection(const LabeledDataset& train,
                                            double sample_ratio,
                                            double target_positive_rate,
                                            std::uint64_t seed,
                                            SubsetSizing sizing) {
  check_sampling_args(sample_ratio, target_positive_rate);
  double rows = sample_ratio * static_cast<double>(train.num_rows());
  if (sizing == SubsetSizing::kUnion) rows /= 2.0;
  // Each subset may draw at most half of each class so the two stay
  // disjoint and equally sized.
  const SampleSize size = plan_sample(
      round_to_size(rows), target_positive_rate, train.num_positives() / 2,
      train.num_negatives() / 2, "induction/selection sampling");
  const ClassPools pools =
      shuffled_pools(train, derive_seed(seed, "induction_selection"));
  return InductionSelection{
      take(train, pools, 0, 0, size),
      take(train, pools, size.positives, size.negatives, size),
  };
}

}  // namespace riff
