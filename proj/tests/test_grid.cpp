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

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "qmupl/collapse.hpp"
#include "qmupl/ensemble.hpp"
#include "qmupl/error.hpp"
#include "qmupl/grid.hpp"
#include "qmupl/stats.hpp"

using namespace qmupl;

namespace {

OracleConfig small_config(double dt = 1e-3, std::size_t n = 128, double half_width = 12.0) {
  OracleConfig cfg;
  cfg.dt = dt;
  cfg.lattice = {-half_width, half_width, n};
  cfg.params = PhysicalParams::desk(2.0, 1.0);
  return cfg;
}

// Free Schrodinger evolution of exp(-a0 x^2 + i k0 x) with hbar/m = hm.
Complex free_gaussian(double x, double t, Complex a0, double k0, double hm) {
  const Complex d = 1.0 + Complex{0.0, 2.0 * hm * t} * a0;
  const double y = x - hm * k0 * t;
  return std::exp(-a0 * y * y / d + Complex{0.0, k0 * x - 0.5 * hm * k0 * k0 * t}) / std::sqrt(d);
}

double max_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double m = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
  return m;
}

}  // namespace

TEST_CASE("configuration validation") {
  OracleConfig cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  cfg.lattice.n = 15;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = small_config();
  cfg.scheme = Scheme::FiniteDifference;
  cfg.dt = 0.1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.dt = 1e-3;
  CHECK_NOTHROW(cfg.validate());
  cfg.lattice.x_max = cfg.lattice.x_min;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("split-step kinetic propagation is exact for a free Gaussian") {
  OracleConfig cfg = small_config(1e-3, 1024, 24.0);
  cfg.params.kappa = 0.0;
  cfg.params.lambda0 = 1e-16;  // collapse switched off to double precision
  GridSolver solver(cfg);
  const double hm = cfg.params.hbar / cfg.params.m;
  const Complex a0{1.0, 0.0};
  const double k0 = 0.8;
  GaussianParams g;
  g.alpha = a0;
  g.kbar = k0;
  GridState gs = make_grid_eigenstate(cfg.lattice, g, +1);
  const double n0 = grid_norm_sq(gs);
  double worst_norm = 0.0;
  for (int i = 0; i < 1000; ++i) {
    solver.step_linear(gs, 0.0);
    worst_norm = std::max(worst_norm, std::abs(gs.norm_sq / n0 - 1.0));
  }
  std::vector<Complex> exact(cfg.lattice.n);
  double peak = 0.0;
  for (std::size_t j = 0; j < cfg.lattice.n; ++j) {
    exact[j] = free_gaussian(cfg.lattice.x(j), gs.t, a0, k0, hm);
    peak = std::max(peak, std::abs(exact[j]));
  }
  CHECK(gs.t == doctest::Approx(1.0));
  CHECK(max_diff(gs.psi_plus, exact) / peak < 1e-6);
  CHECK(worst_norm < 1e-9);
  for (const Complex& c : gs.psi_minus) CHECK(c == Complex{});
}

TEST_CASE("finite differences converge to the split-step solution") {
  auto run = [](std::size_t n, Scheme scheme) {
    OracleConfig cfg;
    cfg.dt = 1e-3;
    cfg.lattice = {-16.0, 16.0, n};
    cfg.params = PhysicalParams::desk(2.0, 1.0);
    cfg.scheme = scheme;
    GridSolver solver(cfg);
    GridState gs = make_grid_eigenstate(cfg.lattice, stationary_gaussian(0.0, 0.5, solver.model().dc), +1);
    for (int i = 0; i < 500; ++i) solver.step_nonlinear(gs, 0.0);
    return gs;
  };
  const GridState ref = run(256, Scheme::SplitStep);
  const GridState fd = run(256, Scheme::FiniteDifference);
  const double e1 = max_diff(ref.psi_plus, fd.psi_plus);
  const GridState ref2 = run(512, Scheme::SplitStep);
  const GridState fd2 = run(512, Scheme::FiniteDifference);
  const double e2 = max_diff(ref2.psi_plus, fd2.psi_plus);
  CHECK(e1 < 1e-2);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.2));
}

TEST_CASE("branch weights, weight gap and mean position") {
  const Lattice lat{-12.0, 12.0, 256};
  const DerivedConstants dc = derive_constants(PhysicalParams::desk());
  GaussianParams p = stationary_gaussian(1.0, 0.0, dc);
  GaussianParams m = stationary_gaussian(-1.0, 0.0, dc);
  p.gamma += 1.0;
  m.gamma -= 1.0;  // w+ / w- = e^4
  OracleConfig cfg = small_config(1e-3, 256);
  GridSolver solver(cfg);
  const GridState gs = make_grid_state(lat, p, m);
  const GridMoments mo = solver.measure_moments(gs);
  CHECK(mo.gamma_hat == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(mo.mean_q == doctest::Approx(quantum_mean_position(1.0, -1.0, p.gamma, m.gamma)).epsilon(1e-12));
  CHECK(mo.mean_q == doctest::Approx(std::tanh(2.0)).epsilon(1e-12));
  const auto [wp, wm] = branch_weights(gs);
  CHECK(wp / wm == doctest::Approx(std::exp(4.0)));

  const GridState sym = make_grid_state(lat, stationary_gaussian(1.0, 0.0, dc), stationary_gaussian(-1.0, 0.0, dc));
  const GridMoments ms = solver.measure_moments(sym);
  CHECK(std::abs(ms.mean_q) < 1e-14);
  CHECK(std::abs(ms.gamma_hat) < 1e-14);

  const GridState eig = make_grid_eigenstate(lat, stationary_gaussian(0.3, 0.4, dc), -1);
  const GridMoments me = solver.measure_moments(eig);
  CHECK(me.gamma_hat == -INFINITY);
  CHECK(me.mean_q == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(me.mean_p == doctest::Approx(0.4).epsilon(1e-10));
  CHECK(me.var_q == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(weight_gap_estimate(1.0, 0.0) == INFINITY);
  CHECK(weight_gap_estimate(1e-301, 1.0) == -INFINITY);
}

TEST_CASE("nonlinear step: normalization and unrenormalized norm") {
  const OracleConfig base = small_config(1e-2);
  const DerivedConstants dc = derive_constants(base.params);
  GaussianParams p = stationary_gaussian(0.8, 0.0, dc);
  GaussianParams m = stationary_gaussian(-0.5, 0.2, dc);
  p.gamma += 0.5 * std::log(0.3);
  m.gamma += 0.5 * std::log(0.7);
  const GridState start = make_grid_state(base.lattice, p, m);
  REQUIRE(grid_norm_sq(start) == doctest::Approx(1.0).epsilon(1e-12));
  auto probe = [&](double dt) {
    OracleConfig cfg = base;
    cfg.dt = dt;
    GridSolver solver(cfg);
    // E[N'] over dW = sqrt(dt) z by trapezoidal quadrature of the normal density.
    const int nodes = 801;
    const double zmax = 8.0, h = 2.0 * zmax / (nodes - 1);
    double mean = 0.0, second = 0.0;
    GridState gs = start;
    for (int i = 0; i < nodes; ++i) {
      const double z = -zmax + i * h;
      const double w = h * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
      gs = start;
      const double n = solver.step_nonlinear(gs, std::sqrt(dt) * z);
      CHECK(grid_norm_sq(gs) == doctest::Approx(1.0).epsilon(1e-9));
      mean += w * n;
      second += w * (n - 1.0) * (n - 1.0);
    }
    return std::pair{mean - 1.0, std::sqrt(second)};
  };
  const auto [d1, r1] = probe(1e-2);
  const auto [d2, r2] = probe(5e-3);
  CHECK(std::abs(d1) < 1e-10);
  CHECK(std::abs(d2) < 1e-10);
  // Pathwise defect is first order and zero-mean, so the norm drift per step is O(dt^2).
  CHECK(r1 / r2 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("boundary leak is fatal") {
  OracleConfig cfg = small_config();
  GridSolver solver(cfg);
  const DerivedConstants dc = derive_constants(cfg.params);
  const GridState ok = make_grid_eigenstate(cfg.lattice, stationary_gaussian(0.0, 0.0, dc), +1);
  CHECK_NOTHROW(solver.check_boundary(ok));
  const GridState bad = make_grid_eigenstate(cfg.lattice, stationary_gaussian(11.0, 0.0, dc), +1);
  try {
    solver.check_boundary(bad);
    FAIL("expected a boundary leak");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BoundaryLeak);
  }
}

TEST_CASE("snapshot format") {
  const Lattice lat{-4.0, 4.0, 16};
  const DerivedConstants dc = derive_constants(PhysicalParams::desk());
  const GridState gs = make_grid_eigenstate(lat, stationary_gaussian(0.0, 0.0, dc), +1);
  const std::string path = "grid_snapshot_test.csv";
  write_snapshot(path, gs);
  std::ifstream in(path);
  std::string header, columns, row;
  std::getline(in, header);
  std::getline(in, columns);
  CHECK(header.rfind("# lattice x_min=", 0) == 0);
  CHECK(header.find("n=16") != std::string::npos);
  CHECK(columns == "x,re_psi_plus,im_psi_plus,re_psi_minus,im_psi_minus");
  int rows = 0;
  while (std::getline(in, row)) ++rows;
  CHECK(rows == 16);
  std::remove(path.c_str());
  CHECK_THROWS_AS(write_snapshot("/nonexistent-dir/x.csv", gs), Error);
}

TEST_CASE("linear norm is a martingale and reweighting recovers the physical law") {
  const OracleConfig cfg = small_config(2e-3, 128, 12.0);
  const DerivedConstants dc = derive_constants(cfg.params);
  const SpinCoefficients c = SpinCoefficients::from_probability(0.6);
  const GaussianParams g = stationary_gaussian(0.0, 0.0, dc);
  GaussianParams gp = g, gm = g;
  gp.gamma += 0.5 * std::log(0.6);
  gm.gamma += 0.5 * std::log(0.4);
  const GridState start = make_grid_state(cfg.lattice, gp, gm);
  const int steps = 150;
  struct Lin {
    double norm = 0.0, q = 0.0;
  };
  const std::uint64_t n = 10000;
  const auto lin = run_paths(EnsembleOptions{n, 31, 1}, [&](std::uint64_t, TrajectoryRng& rng) {
    GridSolver solver(cfg);
    GridState gs = start;
    for (int i = 0; i < steps; ++i) solver.step_linear(gs, rng.increment(cfg.dt));
    return Lin{gs.norm_sq, solver.measure_moments(gs).mean_q};
  });
  const auto phys = run_paths(EnsembleOptions{n, 32, 1}, [&](std::uint64_t, TrajectoryRng& rng) {
    GridSolver solver(cfg);
    GridState gs = start;
    for (int i = 0; i < steps; ++i) solver.step_nonlinear(gs, rng.increment(cfg.dt));
    return solver.measure_moments(gs).mean_q;
  });
  RunningStats norm;
  std::vector<double> q, w;
  for (const auto& l : lin) {
    norm.add(l.norm);
    q.push_back(l.q);
    w.push_back(l.norm);
  }
  CHECK(std::abs(norm.mean() - 1.0) < 3.0 * norm.standard_error());
  const KsResult ks = ks_two_sample_weighted(q, w, phys);
  CHECK(ks.p_value > 0.01);
  // Without the weights the laws differ.
  CHECK(ks_two_sample(q, phys).p_value < 1e-3);
}
