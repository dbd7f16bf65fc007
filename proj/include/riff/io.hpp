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

// Versioned JSON documents for models, rule sets, selections and reports.
// Every document carries {"format": "riff.<kind>", "version": 1}.

#ifndef RIFF_IO_HPP
#define RIFF_IO_HPP

#include <filesystem>
#include <span>
#include <string>

#include "json.hpp"
#include "riff/eval.hpp"
#include "riff/rules.hpp"
#include "riff/selection.hpp"
#include "riff/trees.hpp"

namespace riff {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

// Nodes are nested objects naming their feature, so the document does not
// depend on column order.
Json model_to_json(const ForestModel& model);
ForestModel model_from_json(const Json& doc);
std::string model_digest(const ForestModel& model);

Json ruleset_to_json(const CandidateRuleSet& rules);
CandidateRuleSet ruleset_from_json(const Json& doc);
// One rule per line in the "IF ... THEN FLAG" form.
std::string ruleset_to_text(const CandidateRuleSet& rules);

// Selected rules reference the rule-set file by candidate index.
Json selection_to_json(const SelectionResult& result,
                       const std::string& ruleset_digest);
// Rebuilds a selection from its document and the candidate set it indexes.
SelectionResult selection_from_json(const Json& doc,
                                    const CandidateRuleSet& candidates);

Json report_to_json(const MetricsReport& report);
Json summary_to_json(const MetricSummary& summary);
Json aggregate_to_json(const AggregateReport& aggregate);

// Digest of a document's canonical dump.
std::string json_digest(const Json& doc);

Json read_json(const std::filesystem::path& path);
// Pretty-printed with a trailing newline; byte-stable for equal documents.
void write_json(const std::filesystem::path& path, const Json& doc);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace riff

#endif  // RIFF_IO_HPP
