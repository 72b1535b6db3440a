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

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "qmupl/error.hpp"
#include "qmupl/io.hpp"
#include "qmupl/run.hpp"

using namespace qmupl;
using Json = nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunSpec spec_for(const char* experiment) {
  RunSpec s;
  s.set("experiment", experiment);
  return s;
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
    return e.what();
  }
  FAIL("expected a configuration error");
  return {};
}

}  // namespace

TEST_CASE("config parsing") {
  const Config c = parse_config(R"({"preset": "desk", "physical": {"kappa": 12, "T": 1},
                                    "thresholds": {"a": 3, "b": 5}})");
  CHECK(c.physical.hbar == 1.0);
  CHECK(c.physical.kappa == 12.0);
  CHECK(c.physical.T == 1.0);
  CHECK(c.thresholds.a == 3.0);
  CHECK(c.thresholds.b == 5.0);
  CHECK(c.thresholds.multiplier == 1e5);

  const Config d = parse_config("{}");
  CHECK(d.physical.m == PhysicalParams::reference().m);

  const Config r = parse_config(config_to_json(c));
  CHECK(r.physical.kappa == c.physical.kappa);
  CHECK(r.physical.m0 == c.physical.m0);
  CHECK(r.thresholds.b == c.thresholds.b);
}

TEST_CASE("config errors are listed together") {
  const std::string msg =
      config_error(R"({"physical": {"mass": 1, "m": -1}, "extra": {}, "thresholds": {"c": 1}})");
  CHECK(msg.find("mass") != std::string::npos);
  CHECK(msg.find("extra") != std::string::npos);
  CHECK(msg.find("thresholds.c") != std::string::npos);
  CHECK(msg.find("'m'") != std::string::npos);
  CHECK(config_error("{not json").find("parse") != std::string::npos);
  CHECK(config_error(R"({"preset": "moon"})").find("preset") != std::string::npos);
  CHECK(config_error(R"({"physical": {"m": "heavy"}})").find("physical.m") != std::string::npos);
  CHECK(config_error(R"({"thresholds": {"a": 60}})").find("b > a") != std::string::npos);
  try {
    load_config("/nonexistent/qmupl.json");
    FAIL("expected an I/O error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}

TEST_CASE("trajectory columns carry units") {
  const auto si = trajectory_columns(false, false);
  REQUIRE(si.size() == 7);
  CHECK(si[0].name == "t");
  CHECK(si[0].unit == "s");
  CHECK(si[1].unit == "m");
  CHECK(si[5].unit == "1/m^2");
  const auto kin = trajectory_columns(true, true);
  REQUIRE(kin.size() == 12);
  CHECK(kin[7].name == "Gamma");
  CHECK(kin[11].name == "x_minus");
  CHECK(kin[1].unit == "reduced");
}

TEST_CASE("delimited writer") {
  const std::string path = "writer_test.csv";
  {
    DelimitedWriter w(path, {{"t", "s"}, {"x", "m"}});
    w.comment("hello");
    w.row({0.1, 1.0 / 3.0});
    CHECK_THROWS_AS(w.row({1.0}), Error);
    w.mark_partial("stopped");
    w.close();
  }
  const std::string text = slurp(path);
  CHECK(text.rfind("t[s],x[m]\n", 0) == 0);
  CHECK(text.find("# hello") != std::string::npos);
  CHECK(text.find("0.33333333333333331") != std::string::npos);
  CHECK(text.find("# PARTIAL OUTPUT: stopped") != std::string::npos);
  std::remove(path.c_str());
  CHECK_THROWS_AS(DelimitedWriter("/nonexistent/x.csv", {{"t", "s"}}), Error);
}

TEST_CASE("run spec validation is exhaustive") {
  RunSpec s = spec_for("reduced-gamma");
  s.set("n_paths", "many");
  s.set("bogus", "1");
  s.set("p_plus", "1.5");
  s.set("ds", "0.01");
  const auto problems = s.problems();
  CHECK(problems.size() >= 5);
  std::string all;
  for (const auto& p : problems) all += p + "\n";
  CHECK(all.find("seed") != std::string::npos);
  CHECK(all.find("n_paths") != std::string::npos);
  CHECK(all.find("bogus") != std::string::npos);
  CHECK(all.find("p_plus") != std::string::npos);
  CHECK(all.find("ds") != std::string::npos);
  CHECK_THROWS_AS(s.validate(), Error);

  RunSpec a = spec_for("analytic-report");
  CHECK(a.problems().empty());
  CHECK_FALSE(requires_seed(Experiment::AnalyticReport));
  for (auto e : {Experiment::Eigenstate, Experiment::Superposition, Experiment::ReducedGamma,
                 Experiment::GridOracle, Experiment::Compare}) {
    CHECK(requires_seed(e));
  }
  RunSpec bad = spec_for("teleport");
  CHECK_FALSE(bad.problems().empty());
  CHECK(parse_experiment("grid-oracle") == Experiment::GridOracle);
  CHECK(experiment_name(Experiment::Compare) == "compare");
  CHECK(RunSpec::option_keys().size() > 30);
}

TEST_CASE("input resolution order: preset, config file, overrides") {
  const std::string path = "resolve_test.json";
  {
    std::ofstream out(path);
    out << R"({"preset": "desk", "physical": {"kappa": 7, "T": 2}, "thresholds": {"a": 2, "b": 4}})";
  }
  RunSpec s = spec_for("superposition");
  s.set("config", path);
  s.set("T", "3");
  s.set("seed", "1");
  const ResolvedInputs in = resolve_inputs(s);
  CHECK(in.params.kappa == 7.0);
  CHECK(in.params.T == 3.0);
  CHECK(in.thresholds.b == 4.0);
  std::remove(path.c_str());

  CHECK(resolve_inputs(spec_for("analytic-report")).params.m == PhysicalParams::reference().m);
  RunSpec e = spec_for("eigenstate");
  e.set("seed", "1");
  CHECK(resolve_inputs(e).params.hbar == 1.0);
}

TEST_CASE("analytic report values") {
  const RunResult r = run(spec_for("analytic-report"));
  CHECK(r.passed);
  const Json j = Json::parse(r.summary_json);
  CHECK(j["derived"]["omega"].get<double>() == doctest::Approx(5.0e-5).epsilon(0.02));
  CHECK(j["collapse"]["T_C"].get<double>() == doctest::Approx(1.5e-4).epsilon(0.03));
  CHECK(j["pointer"]["chebyshev_bound"].get<double>() == doctest::Approx(4.2e-17).epsilon(0.05));
  CHECK(j["stability"]["bound_deficit"].get<double>() == doctest::Approx(9.3e-14).epsilon(0.01));
  CHECK(j["posterior"]["epsilon"].get<double>() == doctest::Approx(6.3e-16).epsilon(0.01));
  CHECK(j["collapse"]["s_T_cubic"].get<double>() == doctest::Approx(2.0e17).epsilon(0.02));
}

TEST_CASE("reduced-gamma summary record and determinism") {
  RunSpec s = spec_for("reduced-gamma");
  s.set("seed", "12345");
  s.set("n_paths", "200");
  s.set("b", "3");
  s.set("a", "1");
  s.set("p_plus", "0.7");
  const RunResult r1 = run(s);
  const RunResult r2 = run(s);
  CHECK(r1.summary_json == r2.summary_json);
  s.set("workers", "3");
  CHECK(run(s).summary_json == r1.summary_json);
  s.set("seed", "12346");
  CHECK(run(s).summary_json != r1.summary_json);

  const Json j = Json::parse(r1.summary_json);
  for (const char* k : {"n_paths", "seed", "b", "a", "Gamma0", "P_plus_hat", "SE", "mean_Sbar",
                        "var_Sbar", "T_C"}) {
    CHECK_MESSAGE(j.contains(k), k);
  }
  CHECK(j["n_paths"] == 200);
  CHECK(j["seed"] == 12345);
  CHECK(r1.passed);
}

TEST_CASE("single-trajectory runs are byte-identical") {
  for (const char* e : {"eigenstate", "superposition", "reduced-gamma"}) {
    RunSpec s = spec_for(e);
    s.set("seed", "9");
    s.set("n_paths", "1");
    s.set("b", "3");
    s.set("a", "1");
    s.set("dump", std::string(e) + "_dump.csv");
    const RunResult r1 = run(s);
    const std::string d1 = slurp(std::string(e) + "_dump.csv");
    const RunResult r2 = run(s);
    const std::string d2 = slurp(std::string(e) + "_dump.csv");
    CHECK(r1.summary_json == r2.summary_json);
    CHECK(d1 == d2);
    CHECK_FALSE(d1.empty());
    std::remove((std::string(e) + "_dump.csv").c_str());
  }
}

TEST_CASE("summary and dump files") {
  RunSpec s = spec_for("eigenstate");
  s.set("seed", "4");
  s.set("n_paths", "50");
  s.set("summary", "eig_summary.json");
  s.set("dump", "eig_dump.csv");
  const RunResult r = run(s);
  CHECK(slurp("eig_summary.json") == r.summary_json);
  const std::string dump = slurp("eig_dump.csv");
  CHECK(dump.rfind("t[reduced],xbar[reduced]", 0) == 0);
  std::remove("eig_summary.json");
  std::remove("eig_dump.csv");
}

TEST_CASE("a failing grid run leaves a marked partial file") {
  RunSpec s = spec_for("grid-oracle");
  s.set("seed", "1");
  s.set("n_paths", "1");
  s.set("grid_n", "128");
  s.set("x_min", "-8");
  s.set("x_max", "8");
  s.set("kappa", "8");
  s.set("dt", "1e-3");
  s.set("dump", "leak_moments.csv");
  try {
    run(s);
    FAIL("expected a boundary leak");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BoundaryLeak);
  }
  const std::string text = slurp("leak_moments.csv");
  CHECK(text.find("# PARTIAL OUTPUT:") != std::string::npos);
  std::remove("leak_moments.csv");
}

TEST_CASE("small ensembles skip statistical checks") {
  RunSpec s = spec_for("eigenstate");
  s.set("seed", "1");
  s.set("n_paths", "3");
  const RunResult r = run(s);
  CHECK(r.passed);
  const Json j = Json::parse(r.summary_json);
  CHECK(j["statistical_checks_skipped"].size() >= 2);
}
