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
#include <vector>

#include "qmupl/collapse.hpp"
#include "qmupl/ensemble.hpp"
#include "qmupl/kinematics.hpp"
#include "qmupl/stats.hpp"

using namespace qmupl;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::vector<double> distance_table(const Model& model, double dt, std::size_t n) {
  std::vector<double> xs(n + 1);
  for (std::size_t i = 0; i <= n; ++i) xs[i] = distance_closed_form(i * dt, model).X;
  return xs;
}

}  // namespace

TEST_CASE("sum-coordinate steps") {
  const DerivedConstants dc = derive_constants(PhysicalParams::desk());
  SumCoords z;
  for (int i = 0; i < 100; ++i) z = step_sum_coords(z, 0.0, 1.0, 1e-3, 0.0, dc);
  CHECK(z.Xtilde == 0.0);
  CHECK(z.Ktilde == 0.0);

  const SumCoords s{0.2, -0.1};
  for (double dW : {0.0, 0.03, -0.07}) {
    const SumCoords a = step_sum_coords(s, 40.0, 0.8, 1e-3, dW, dc);
    const SumCoords b = step_aux_linear(+1, s, 0.8, 1e-3, dW, dc);
    CHECK(a.Xtilde == b.Xtilde);
    CHECK(a.Ktilde == b.Ktilde);
    const SumCoords c = step_sum_coords(s, -40.0, 0.8, 1e-3, dW, dc);
    const SumCoords d = step_aux_linear(-1, s, 0.8, 1e-3, dW, dc);
    CHECK(c.Xtilde == d.Xtilde);
    CHECK(c.Ktilde == d.Ktilde);
  }
  const SumCoords e = step_sum_coords(s, 0.3, 0.8, 1e-3, 0.01, dc);
  const double hm = 1.0;
  CHECK(e.Xtilde == doctest::Approx(0.2 + hm * -0.1 * 1e-3 + dc.omega * 0.8 * std::tanh(0.3) * 1e-3 +
                                    2.0 * std::sqrt(dc.omega) * dc.sigma_q * 0.01));
  CHECK(e.Ktilde == doctest::Approx(-0.1 + 2.0 * dc.lambda * 0.8 * std::tanh(0.3) * 1e-3 +
                                    2.0 * std::sqrt(dc.lambda) * 0.01));
}

TEST_CASE("analytic auxiliary statistics at reference scale") {
  const Model model(PhysicalParams::reference());
  const double tc = collapse_time(model.params, CollapseThresholds{}).value;
  CHECK(rel(aux_mean(tc, +1, model), 5.9e-15) < 0.05);
  CHECK(rel(aux_mean(tc, -1, model), -5.9e-15) < 0.05);
  CHECK(rel(aux_variance(tc, model.dc), 6.5e-35) < 0.05);
  CHECK(aux_mean(0.0, +1, model) == 0.0);
  for (double t : {1e-6, 1e-4, 1e-2, 1.0, 3.0}) {
    CHECK(aux_variance(t, model.dc) == 4.0 * peak_variance(t, model.dc));
  }
  for (double t : {1e-4, 1e-2, 0.5}) {
    const double second = model.hbar_kappa() * model.dc.omega * t * t / 2.0;
    CHECK(rel(aux_mean(t, +1, model), second) < 2.0 * model.dc.omega * t);
  }
  const DriftBounds db = post_collapse_drift_bounds(tc, tc, model, 35.0);
  CHECK(rel(db.X_gap, 1.2e-14) < 0.05);
  CHECK(rel(db.K_gap, 2.8e12) < 0.05);
  const DriftPolynomial p = post_collapse_drift_polynomial(tc, model, 35.0);
  CHECK(rel(p.c0, 1.2e-14) < 0.05);
  CHECK(rel(p.c1, 2.9e-19) < 0.05);
  CHECK(rel(p.c2, 5.0e-42) < 0.05);
  const DriftBounds later = post_collapse_drift_bounds(tc + 2.0, tc, model, 35.0);
  CHECK(later.X_gap == doctest::Approx(p.c0 + 2.0 * p.c1 + 4.0 * p.c2));
}

TEST_CASE("peak reconstruction") {
  const PeakPair a = reconstruct_peaks(1.524e-6, SumCoords{0.0, 0.0});
  CHECK(rel(a.x_plus, 7.7e-7) < 0.02);
  CHECK(rel(a.x_minus, -7.7e-7) < 0.02);
  const PeakPair z = reconstruct_peaks(0.0, SumCoords{});
  CHECK(z.x_plus == 0.0);
  CHECK(z.x_minus == 0.0);
  const double X = 0.37, Xt = -0.11;
  const PeakPair p = reconstruct_peaks(X, SumCoords{Xt, 0.0});
  CHECK(p.x_plus - p.x_minus == doctest::Approx(X).epsilon(1e-15));
  CHECK(p.x_plus + p.x_minus == doctest::Approx(Xt).epsilon(1e-15));
  CHECK(p.x_plus == (X + Xt) / 2.0);

  const Model model(PhysicalParams::reference());
  const double T = model.params.T;
  const PeakPair post = reconstruct_peaks(distance_closed_form(T, model).X,
                                          SumCoords{aux_mean(T, +1, model), 0.0});
  CHECK(rel(post.x_plus, 0.005) < 0.01);
}

TEST_CASE("shared-noise bracketing and post-collapse bounds") {
  const Model model(PhysicalParams::desk(12.0, 1.0));
  const DerivedConstants& dc = model.dc;
  const double dt = 1e-3, a = 3.0, b = 5.0;
  const std::size_t n = 10000;  // t up to 10 T
  const std::vector<double> X = distance_table(model, dt, n);
  struct PathResult {
    std::uint64_t violations = 0, bound_violations = 0, checked = 0, bracket_steps = 0;
    bool plus = false, held = false;
    double x_plus_T = 0.0;
    double gap_bound_T = 0.0;
  };
  const double g0 = SpinCoefficients::from_probability(0.7).gamma0();
  const auto rs = run_paths(EnsembleOptions{2000, 8, 1}, [&](std::uint64_t, TrajectoryRng& rng) {
    PathResult r;
    double g = g0;
    SumCoords s, up, lo;
    double t_hit = -1.0;
    bool above = true;
    bool x_nonneg = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double dW = rng.increment(dt);
      const double x = X[i];
      const double gn = gamma_step_physical(g, x, dt, dW, dc);
      s = step_sum_coords(s, g, x, dt, dW, dc);
      up = step_aux_linear(+1, up, x, dt, dW, dc);
      lo = step_aux_linear(-1, lo, x, dt, dW, dc);
      g = gn;
      const double t = (i + 1) * dt;
      // Bracketing needs X >= 0 over the whole history.
      x_nonneg = x_nonneg && x >= 0.0;
      if (x_nonneg) {
        ++r.bracket_steps;
        if (!(lo.Xtilde <= s.Xtilde && s.Xtilde <= up.Xtilde)) ++r.violations;
        if (!(lo.Ktilde <= s.Ktilde && s.Ktilde <= up.Ktilde)) ++r.violations;
      }
      if (t_hit < 0.0 && std::abs(g) >= b) {
        t_hit = t;
        r.plus = g > 0.0;
      }
      if (t_hit >= 0.0 && r.plus && above) {
        if (g < a) {
          above = false;
        } else {
          const DriftBounds db = post_collapse_drift_bounds(t, t_hit, model, a);
          ++r.checked;
          if (up.Xtilde - s.Xtilde > db.X_gap || up.Ktilde - s.Ktilde > db.K_gap) ++r.bound_violations;
          if (i + 1 == 1000) {
            r.x_plus_T = reconstruct_peaks(X[i + 1], s).x_plus;
            r.gap_bound_T = db.X_gap;
          }
        }
      }
    }
    r.held = r.plus && above && t_hit >= 0.0 && t_hit <= 1.0;
    return r;
  });
  std::uint64_t violations = 0, bound_violations = 0, checked = 0, held = 0, inside = 0;
  std::uint64_t bracket_steps = 0;
  const double sd = std::sqrt(aux_variance(1.0, dc));
  for (const auto& r : rs) {
    violations += r.violations;
    bracket_steps += r.bracket_steps;
    bound_violations += r.bound_violations;
    checked += r.checked;
    if (r.held) {
      ++held;
      if (std::abs(r.x_plus_T - 0.5 * model.hbar_kappa()) <= r.gap_bound_T / 2.0 + 1.5 * sd) ++inside;
    }
  }
  CHECK(violations == 0);
  CHECK(bracket_steps > 2000u * 2000u);
  CHECK(checked > 100000);
  CHECK(bound_violations == 0);
  REQUIRE(held > 100);
  CHECK(static_cast<double>(inside) >= 0.99 * static_cast<double>(held));
}

TEST_CASE("auxiliary Monte Carlo matches the analytic mean and variance") {
  const Model model(PhysicalParams::desk(10.0, 1.0));
  const double dt = 1e-3;
  const std::size_t n = 300;  // omega t = 0.3
  const double t = n * dt;
  const std::vector<double> X = distance_table(model, dt, n);
  const auto rs = run_paths(EnsembleOptions{10000, 21, 1}, [&](std::uint64_t, TrajectoryRng& rng) {
    SumCoords up, lo;
    for (std::size_t i = 0; i < n; ++i) {
      const double dW = rng.increment(dt);
      up = step_aux_linear(+1, up, X[i], dt, dW, model.dc);
      lo = step_aux_linear(-1, lo, X[i], dt, dW, model.dc);
    }
    return std::array<double, 2>{up.Xtilde, lo.Xtilde};
  });
  RunningStats up, lo;
  for (const auto& r : rs) {
    up.add(r[0]);
    lo.add(r[1]);
  }
  CHECK(std::abs(up.mean() - aux_mean(t, +1, model)) < 3.0 * up.standard_error());
  CHECK(std::abs(lo.mean() - aux_mean(t, -1, model)) < 3.0 * lo.standard_error());
  CHECK(rel(up.variance(), aux_variance(t, model.dc)) < 0.05);
  CHECK(rel(lo.variance(), aux_variance(t, model.dc)) < 0.05);
}
