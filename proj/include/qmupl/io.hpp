// Copyright 2026 The qmupl Authors
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

#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "qmupl/collapse.hpp"
#include "qmupl/params.hpp"

namespace qmupl {

/// Contents of a configuration file:
///
///   {
///     "preset": "reference" | "desk",          (optional base values)
///     "physical":   {"m": ..., "m0": ..., "lambda0": ..., "hbar": ...,
///                    "kappa": ..., "T": ..., "t0": ...},
///     "thresholds": {"a": ..., "b": ..., "multiplier": ...}
///   }
///
/// Every section and field is optional; unknown keys are errors.
struct Config {
  PhysicalParams physical;
  CollapseThresholds thresholds;
};

/// Parses configuration text. All problems are collected and reported in a
/// single Error(Config).
Config parse_config(const std::string& text);
Config load_config(const std::string& path);
std::string config_to_json(const Config& cfg);

/// Column descriptor "name[unit]".
struct Column {
  std::string name;
  std::string unit;
};

/// Columns of a Gaussian trajectory dump; with `kinematics` the weight gap,
/// sum coordinates and reconstructed peaks are appended. Units are replaced
/// by "reduced" for dimensionless runs.
std::vector<Column> trajectory_columns(bool kinematics, bool dimensionless);

/// Comma-separated text table with a header row and full-precision values.
class DelimitedWriter {
 public:
  DelimitedWriter(const std::string& path, std::vector<Column> columns);
  ~DelimitedWriter();
  DelimitedWriter(const DelimitedWriter&) = delete;
  DelimitedWriter& operator=(const DelimitedWriter&) = delete;

  void comment(const std::string& text);
  void row(const std::vector<double>& values);
  /// Appends a marker line stating that the file is incomplete.
  void mark_partial(const std::string& reason);
  void close();

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::size_t width_;
  std::FILE* file_ = nullptr;
};

/// Writes `text` to `path`, throwing Error(Io) on failure.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace qmupl
