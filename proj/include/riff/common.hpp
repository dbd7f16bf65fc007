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

// Shared error types, warning sink, seeding and digest helpers.

#ifndef RIFF_COMMON_HPP
#define RIFF_COMMON_HPP

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace riff {

// Error hierarchy. The CLI maps these onto process exit codes:
// ConfigError/SchemaError -> 1, DataError -> 2, anything else -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

// Warnings are routed through a replaceable sink (stderr by default) so
// callers and tests can capture them.
using WarningSink = std::function<void(std::string_view)>;

void warn(std::string_view message);

// Installs `sink` and returns the previous one. Passing an empty function
// restores the stderr sink.
WarningSink set_warning_sink(WarningSink sink);

// RAII capture of warnings into a string list, used by tests and the CLI.
class ScopedWarningCapture {
 public:
  explicit ScopedWarningCapture(std::vector<std::string>* out);
  ~ScopedWarningCapture();
  ScopedWarningCapture(const ScopedWarningCapture&) = delete;
  ScopedWarningCapture& operator=(const ScopedWarningCapture&) = delete;

 private:
  WarningSink previous_;
};

// Deterministic per-stage seed from a master seed and a stage name.
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage);

using Rng = std::mt19937_64;

// Uniform integer in [0, bound). Implemented locally so that sampling is
// identical across standard library implementations.
std::uint64_t uniform_below(Rng& rng, std::uint64_t bound);

// 64-bit FNV-1a, rendered as 16 lowercase hex characters.
std::string fnv1a_hex(std::string_view bytes);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

}  // namespace riff

#endif  // RIFF_COMMON_HPP
