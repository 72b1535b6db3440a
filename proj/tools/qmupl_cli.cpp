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

// Command-line front end. Every flag maps one-to-one onto a run option of
// the C API; the summary record is printed on stdout.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qmupl/qmupl.h"

namespace {

struct Flag {
  const char* key;
  const char* names;
  const char* help;
};

// Options shared by all subcommands.
const Flag kCommon[] = {
    {"preset", "--preset", "Base parameter set: reference or desk"},
    {"config", "--config", "JSON configuration file (sections physical, thresholds)"},
    {"m", "--m", "Pointer mass"},
    {"m0", "--m0", "Reference nucleon mass"},
    {"lambda0", "--lambda0", "Base collapse rate"},
    {"hbar", "--hbar", "Reduced Planck constant"},
    {"kappa", "--kappa", "Coupling; hbar*kappa is the pointer speed"},
    {"T", "--T", "Measurement duration"},
    {"t0", "--t0", "Measurement start"},
    {"a", "--a", "Suppression level of the weight gap"},
    {"b", "--b", "Confirmation level of the weight gap"},
    {"multiplier", "--multiplier", "Safety factor on the hitting-time spread"},
    {"p_plus", "--p_plus,--p-plus", "Initial |c+|^2"},
    {"gamma0", "--gamma0,--Gamma0", "Initial weight gap ln|c+/c-|"},
    {"summary", "--summary", "Write the summary record to this file"},
    {"delta", "--delta", "Interval width for the Chebyshev outlier bound"},
};

const Flag kMonteCarlo[] = {
    {"n_paths", "--n_paths,--n-paths", "Number of trajectories"},
    {"workers", "--workers", "Worker threads"},
    {"dt", "--dt", "Physical time step"},
    {"t_end", "--t_end,--t-end", "Final time"},
    {"checkpoints", "--checkpoints", "Number of log-spaced checkpoints"},
    {"checkpoint_times", "--checkpoint_times,--checkpoint-times", "Comma-separated checkpoint times"},
    {"dump", "--dump", "Trajectory (or moment) dump file"},
    {"dump_paths", "--dump_paths,--dump-paths", "Trajectories included in the dump"},
    {"sign", "--sign", "Spin branch of the eigenstate: +1 or -1"},
};

const Flag kReduced[] = {
    {"ds", "--ds", "Reduced time step (<= 1e-3)"},
    {"window", "--window", "Post-hit observation window in s-time"},
    {"bridge", "--bridge", "Brownian-bridge crossing detection (true/false)"},
    {"max_steps", "--max_steps,--max-steps", "Step budget (0: 100 E[S]/ds)"},
};

const Flag kGrid[] = {
    {"grid_n", "--grid_n,--grid-n", "Lattice points"},
    {"x_min", "--x_min,--x-min", "Lattice start"},
    {"x_max", "--x_max,--x-max", "Lattice end"},
    {"grid_mode", "--grid_mode,--grid-mode", "eigenstate, superposition, linear or free"},
    {"scheme", "--scheme", "split-step or finite-difference"},
    {"snapshot", "--snapshot", "Write the final lattice state of path 0"},
};

struct Command {
  const char* name;
  const char* help;
  bool monte_carlo;
  bool reduced;
  bool grid;
};

const Command kCommands[] = {
    {"analytic-report", "Closed-form constants and bounds", false, false, false},
    {"eigenstate", "Monte Carlo of a spin eigenstate pointer", true, false, false},
    {"superposition", "Monte Carlo of the two-component state with kinematics", true, false, false},
    {"reduced-gamma", "Monte Carlo of the reduced weight gap", true, true, false},
    {"grid-oracle", "Lattice solver runs", true, false, true},
    {"compare", "Gaussian ansatz against the lattice solver", true, false, true},
};

struct Bound {
  std::string key;
  CLI::Option* option;
  std::string value;
};

void add_flags(CLI::App* app, const Flag* begin, const Flag* end, std::vector<Bound>& out) {
  for (const Flag* f = begin; f != end; ++f) out.push_back({f->key, nullptr, {}});
  std::size_t i = out.size() - static_cast<std::size_t>(end - begin);
  for (const Flag* f = begin; f != end; ++f, ++i) {
    out[i].option = app->add_option(f->names, out[i].value, f->help);
  }
}

int execute(const Command& cmd, const std::vector<Bound>& flags) {
  qmupl_run* run = nullptr;
  if (qmupl_run_create(cmd.name, &run) != QMUPL_OK) {
    std::fprintf(stderr, "error: %s\n", qmupl_last_error());
    return 2;
  }
  for (const auto& b : flags) {
    if (b.option->count() > 0) qmupl_run_set(run, b.key.c_str(), b.value.c_str());
  }
  qmupl_result* result = nullptr;
  const qmupl_status st = qmupl_run_execute(run, &result);
  int code = 0;
  if (result != nullptr) std::fputs(qmupl_result_json(result), stdout);
  if (st == QMUPL_ERR_INVARIANT) {
    std::fprintf(stderr, "%s\n", qmupl_last_error());
    code = 1;
  } else if (st != QMUPL_OK) {
    std::fprintf(stderr, "error (%s): %s\n", qmupl_status_string(st), qmupl_last_error());
    code = 2;
  }
  qmupl_result_destroy(result);
  qmupl_run_destroy(run);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pointer measurement under position localization"};
  app.set_version_flag("--version", qmupl_version());
  app.require_subcommand(1);

  std::map<std::string, std::vector<Bound>> flags;
  for (const Command& cmd : kCommands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    auto& fl = flags[cmd.name];
    fl.reserve(64);
    add_flags(sub, std::begin(kCommon), std::end(kCommon), fl);
    if (cmd.monte_carlo) {
      add_flags(sub, std::begin(kMonteCarlo), std::end(kMonteCarlo), fl);
      fl.push_back({"seed", nullptr, {}});
      fl.back().option = sub->add_option("--seed", fl.back().value, "Root seed")->required();
    }
    if (cmd.reduced) add_flags(sub, std::begin(kReduced), std::end(kReduced), fl);
    if (cmd.grid) add_flags(sub, std::begin(kGrid), std::end(kGrid), fl);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and --version exit 0; usage errors share the error exit code.
    return app.exit(e) == 0 ? 0 : 2;
  }

  for (const Command& cmd : kCommands) {
    if (app.got_subcommand(cmd.name)) return execute(cmd, flags[cmd.name]);
  }
  return 2;
}
