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

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qmupl/collapse.hpp"
#include "qmupl/grid.hpp"
#include "qmupl/params.hpp"

namespace qmupl {

enum class Experiment {
  AnalyticReport,
  Eigenstate,
  Superposition,
  ReducedGamma,
  GridOracle,
  Compare,
};

std::optional<Experiment> parse_experiment(std::string_view name);
std::string_view experiment_name(Experiment e);

enum class GridMode { Eigenstate, Superposition, Linear, Free };

/// Everything a run needs. Values are set by key through `set`, which is what
/// the C API and the command line use; keys are listed in `option_keys()`.
struct RunSpec {
  Experiment experiment = Experiment::AnalyticReport;

  // Physical inputs: preset, then config file, then per-field overrides.
  std::string preset;  // "reference", "desk" or empty for the experiment default
  std::string config_path;
  std::vector<std::pair<std::string, double>> physical_overrides;
  std::optional<double> a, b, multiplier;

  // Initial spin state: |c+|^2 or the weight gap directly.
  std::optional<double> p_plus;
  std::optional<double> gamma0;
  int sign = 1;  // eigenstate branch

  std::optional<std::uint64_t> n_paths;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;

  std::optional<double> dt;  // 1e-4 for grid runs, 1e-3 otherwise
  double ds = 1e-3;
  std::optional<double> t_end;
  double window = 0.0;
  bool bridge = true;
  bool corrections = true;
  std::uint64_t max_steps = 0;

  std::size_t grid_n = 1024;
  double x_min = -24.0;
  double x_max = 24.0;
  GridMode grid_mode = GridMode::Eigenstate;
  Scheme scheme = Scheme::SplitStep;

  std::size_t n_checkpoints = 100;
  std::vector<double> checkpoint_times;
  double delta = 1e-7;  // interval width for the Chebyshev outlier bound

  std::string summary_path;
  std::string dump_path;
  std::uint64_t dump_paths = 1;
  std::string snapshot_path;

  /// Sets one option from its text form. Malformed values are recorded and
  /// reported together by `validate`.
  void set(std::string_view key, std::string_view value);

  /// All problems with the spec (empty when valid).
  std::vector<std::string> problems() const;

  /// Time step, with the per-experiment default applied.
  double time_step() const;

  /// Throws Error(Config) listing every problem.
  void validate() const;

  static const std::vector<std::string_view>& option_keys();

 private:
  std::vector<std::string> parse_problems_;
};

bool requires_seed(Experiment e);

struct ResolvedInputs {
  PhysicalParams params;
  CollapseThresholds thresholds;
};

/// Applies preset, configuration file and overrides in that order.
ResolvedInputs resolve_inputs(const RunSpec& spec);

struct RunResult {
  std::string summary_json;
  bool passed = false;
  std::vector<std::string> failures;
};

/// Executes the experiment, writes the requested files and returns the
/// summary. Output is a deterministic function of the spec.
RunResult run(const RunSpec& spec);

}  // namespace qmupl
