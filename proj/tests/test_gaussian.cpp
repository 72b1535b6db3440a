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

#include <array>
#include <cmath>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "qmupl/ensemble.hpp"
#include "qmupl/error.hpp"
#include "qmupl/gaussian.hpp"
#include "qmupl/stats.hpp"

using namespace qmupl;

namespace {

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Test-side RK4 for d(alpha)/dt = lambda - 2 i (hbar/m) alpha^2.
Complex alpha_rk4(Complex a, double t, double lambda, double hm, int n) {
  const Complex two_i_hm{0.0, 2.0 * hm};
  auto f = [&](Complex z) { return lambda - two_i_hm * z * z; };
  const double h = t / n;
  for (int i = 0; i < n; ++i) {
    const Complex k1 = f(a);
    const Complex k2 = f(a + 0.5 * h * k1);
    const Complex k3 = f(a + 0.5 * h * k2);
    const Complex k4 = f(a + h * k3);
    a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return a;
}

// Deterministic distance system: X' = (hbar/m) K - omega X + hbar kappa Delta, K' = -2 lambda X.
using State = std::array<double, 2>;

State distance_ode(double t_end, const Model& model) {
  namespace ode = boost::numeric::odeint;
  const double hm = model.hbar_over_m();
  const double w = model.dc.omega;
  const double lam = model.dc.lambda;
  const double hk = model.hbar_kappa();
  const double t0 = model.params.t0;
  const double t1 = model.measurement_end();
  State s{0.0, 0.0};
  auto integrate = [&](double a, double b, double drive) {
    if (b <= a) return;
    auto rhs = [&](const State& y, State& dy, double) {
      dy[0] = hm * y[1] - w * y[0] + hk * drive;
      dy[1] = -2.0 * lam * y[0];
    };
    auto stepper = ode::make_controlled(1e-14, 1e-14, ode::runge_kutta_dopri5<State>());
    ode::integrate_adaptive(stepper, rhs, s, a, b, (b - a) * 1e-4);
  };
  integrate(0.0, std::min(t_end, t0), 0.0);
  integrate(t0, std::min(t_end, t1), 1.0);
  integrate(t1, t_end, 0.0);
  return s;
}

// Exact covariance of the discrete (xbar, kbar) recursion at stationary alpha.
double discrete_position_variance(double t, int n, const Model& model) {
  const double dt = t / n;
  const double hm = model.hbar_over_m();
  const double sl = model.sqrt_lambda();
  const double cx = 2.0 * sl * model.dc.sigma_q * model.dc.sigma_q;
  const double ck = sl;
  double vxx = 0.0, vxk = 0.0, vkk = 0.0;
  for (int i = 0; i < n; ++i) {
    const double nxx = vxx + 2.0 * hm * dt * vxk + hm * hm * dt * dt * vkk + cx * cx * dt;
    const double nxk = vxk + hm * dt * vkk + cx * ck * dt;
    const double nkk = vkk + ck * ck * dt;
    vxx = nxx;
    vxk = nxk;
    vkk = nkk;
  }
  return vxx;
}

}  // namespace

TEST_CASE("stationary width is a fixed point") {
  const DerivedConstants dc = derive_constants(PhysicalParams::reference());
  const Complex as = stationary_alpha(dc);
  CHECK(as.real() == -as.imag());
  CHECK(as.real() == doctest::Approx(0.25 / (dc.sigma_q * dc.sigma_q)));
  for (double t : {0.0, 1e-3, 1.0, 1e4}) {
    CHECK(alpha_closed_form(t, as, dc) == as);
  }
  const Complex a0 = 3.0 * as;
  CHECK(alpha_closed_form(0.0, a0, dc) == a0);
}

TEST_CASE("width closed form matches an RK4 integration") {
  const PhysicalParams p = PhysicalParams::desk();
  const DerivedConstants dc = derive_constants(p);
  const double hm = p.hbar / p.m;
  const Complex a0 = Complex{2.0, -0.5} / (4.0 * dc.sigma_q * dc.sigma_q);
  for (double wt : {0.05, 0.3, 1.0, 3.0}) {
    const double t = wt / dc.omega;
    const Complex cf = alpha_closed_form(t, a0, dc);
    const Complex rk = alpha_rk4(a0, t, dc.lambda, hm, 20000);
    CHECK(std::abs(cf - rk) / std::abs(rk) < 1e-8);
  }
  // Relaxes to the stationary value.
  CHECK(std::abs(alpha_closed_form(40.0, a0, dc) - stationary_alpha(dc)) < 1e-12);
  // Continuity in t.
  const Complex c1 = alpha_closed_form(0.3, a0, dc);
  const Complex c2 = alpha_closed_form(0.3 + 1e-9, a0, dc);
  CHECK(std::abs(c1 - c2) < 1e-8);
  // Stationary start under RK stays put.
  const Complex as = stationary_alpha(dc);
  CHECK(std::abs(alpha_rk4(as, 1.0, dc.lambda, hm, 2000) - as) / std::abs(as) < 1e-8);
}

TEST_CASE("width closed form rejects invalid input") {
  const DerivedConstants dc = derive_constants(PhysicalParams::desk());
  CHECK_THROWS_AS(alpha_closed_form(1.0, Complex{0.0, 1.0}, dc), Error);
  CHECK_THROWS_AS(alpha_closed_form(1.0, Complex{-1.0, 0.0}, dc), Error);
  CHECK_THROWS_AS(alpha_closed_form(-1.0, stationary_alpha(dc), dc), Error);
}

TEST_CASE("profiles are T-normalized") {
  const DeltaProfile r = DeltaProfile::rectangular(0.5, 2.0);
  CHECK(r(0.4) == 0.0);
  CHECK(r(1.0) == 1.0);
  CHECK(r(2.6) == 0.0);
  CHECK(r.integral(10.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.integral(1.5) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.integral(0.0) == 0.0);

  std::vector<double> ts, vs;
  for (int i = 0; i <= 200; ++i) {
    const double t = 0.5 + 2.0 * i / 200.0;
    ts.push_back(t);
    vs.push_back(std::sin(M_PI * (t - 0.5) / 2.0));
  }
  const DeltaProfile s = DeltaProfile::sampled(ts, vs, 0.5, 2.0);
  CHECK(std::abs(s.integral(2.5) / 2.0 - 1.0) < 1e-9);
  CHECK(std::abs(s.integral(100.0) / 2.0 - 1.0) < 1e-9);
  CHECK(s(0.0) == 0.0);
  CHECK(s.integral(1.5) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("peak statistics at reference scale") {
  const Model model(PhysicalParams::reference());
  const DeltaProfile prof = DeltaProfile::for_model(model);
  CHECK(peak_mean_position(1.0, +1, prof, model) == doctest::Approx(0.005).epsilon(0.02));
  CHECK(peak_mean_position(5.0, -1, prof, model) == doctest::Approx(-0.005).epsilon(0.02));
  CHECK(peak_mean_position(0.5, +1, prof, model) == doctest::Approx(0.0025).epsilon(0.02));
  CHECK(peak_mean_position(0.0, +1, prof, model) == 0.0);
  CHECK(rel(peak_variance(1.0, model.dc), 1.1e-31) < 0.05);
  CHECK(peak_variance(0.0, model.dc) == 0.0);
  CHECK(rel(chebyshev_outlier_bound(1e-7, 1.0, model.dc), 4.2e-17) < 0.05);
  CHECK(rel(chebyshev_outlier_bound(1e-6, 1.0, model.dc), 4.2e-19) < 0.05);
  CHECK(chebyshev_outlier_bound(1e300, 1.0, model.dc) < 1e-300);
  double prev = 0.0;
  for (double t = 0.0; t < 1e6; t = 2.0 * t + 1.0) {
    const double v = peak_variance(t, model.dc);
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("zero-noise eigenstate follows the profile exactly") {
  const Model model(PhysicalParams::desk(4.0, 2.0));
  const DeltaProfile prof = DeltaProfile::for_model(model);
  GaussianParams g = stationary_gaussian(0.0, 0.0, model.dc);
  const double dt = 1e-3;
  for (int n = 0; n < 3000; ++n) {
    const double t = n * dt;
    g = step_eigenstate(g, +1, t, dt, 0.0, prof, model);
    const double expect = peak_mean_position(t + dt, +1, prof, model);
    if (std::abs(g.xbar - expect) > 1e-9 * std::max(1.0, std::abs(expect))) {
      FAIL("xbar deviates at step " << n);
    }
    CHECK(g.kbar == 0.0);
  }
  CHECK(g.xbar == doctest::Approx(4.0).epsilon(1e-9));

  PhysicalParams p0 = PhysicalParams::desk();
  p0.kappa = 0.0;
  const Model free(p0);
  GaussianParams h = stationary_gaussian(0.7, 0.0, free.dc);
  h = step_eigenstate(h, +1, 0.0, 1e-3, 0.0, DeltaProfile::for_model(free), free);
  CHECK(h.xbar == 0.7);
  CHECK_THROWS_AS(step_eigenstate(h, +1, 0.0, 1e-3, NAN, DeltaProfile::for_model(free), free),
                  Error);
}

TEST_CASE("eigenstate step is the expected linear map") {
  const Model model(PhysicalParams::desk());
  const DeltaProfile prof = DeltaProfile::for_model(model);
  const GaussianParams g0 = stationary_gaussian(0.3, -0.2, model.dc);
  const double dt = 1e-3;
  const GaussianParams a = step_eigenstate(g0, -1, 0.5, dt, 0.0, prof, model);
  const GaussianParams b = step_eigenstate(g0, -1, 0.5, dt, 1.0, prof, model);
  const double sl = model.sqrt_lambda();
  const double sq2 = model.dc.sigma_q * model.dc.sigma_q;
  CHECK(b.xbar - a.xbar == doctest::Approx(2.0 * sl * sq2));
  CHECK(b.kbar - a.kbar == doctest::Approx(sl));
  CHECK(a.xbar == doctest::Approx(0.3 - 0.2 * dt - 0.5 * model.hbar_kappa() * dt));
  // Diffusion coefficients sigma_q sqrt(omega) and sigma_p sqrt(omega) / (sqrt(2) hbar).
  CHECK(2.0 * sl * sq2 == doctest::Approx(model.dc.sigma_q * std::sqrt(model.dc.omega)));
  CHECK(sl == doctest::Approx(model.dc.sigma_p * std::sqrt(model.dc.omega) /
                              (std::sqrt(2.0) * model.params.hbar)));
}

TEST_CASE("norm corrections at the stationary width") {
  const Model model(PhysicalParams::desk());
  const GaussianParams g = stationary_gaussian(0.0, 0.0, model.dc);
  const double dt = 1e-3;
  const GaussianParams on = advance_component(g, +1, dt, 0.0, 0.0, model, true);
  const GaussianParams off = advance_component(g, +1, dt, 0.0, 0.0, model, false);
  const double lsq = model.dc.lambda * model.dc.sigma_q * model.dc.sigma_q;
  CHECK((on.gamma - off.gamma) / dt == doctest::Approx(lsq));
  CHECK((on.theta - off.theta) / dt == doctest::Approx(-lsq));

  // Free step adds the Milstein terms on top of the drift.
  const double brace = 0.03;
  const GaussianParams fs = free_particle_step(g, dt, brace, Measure::Physical, model, true);
  const GaussianParams em = advance_component(g, +1, dt, brace, 0.0, model, true);
  const double c = lsq * (brace * brace - dt);
  CHECK(fs.gamma - em.gamma == doctest::Approx(c));
  CHECK(fs.theta - em.theta == doctest::Approx(-c));
  CHECK(fs.xbar == em.xbar);

  // Linear measure shifts the increment by -2 sqrt(lambda) xbar dt.
  const GaussianParams g1 = stationary_gaussian(0.4, 0.0, model.dc);
  const GaussianParams lin = free_particle_step(g1, dt, brace, Measure::Linear, model, true);
  const GaussianParams phys = free_particle_step(
      g1, dt, brace - 2.0 * model.sqrt_lambda() * 0.4 * dt, Measure::Physical, model, true);
  CHECK(lin.gamma == phys.gamma);
  CHECK(lin.xbar == phys.xbar);
}

TEST_CASE("norm bookkeeping without collapse noise") {
  const Model model(PhysicalParams::desk());
  GaussianParams g = stationary_gaussian(0.0, 0.0, model.dc);
  g.alpha = Complex{0.7, 0.2};
  const double dt = 1e-4;
  const GaussianParams o = advance_component(g, +1, dt, 0.0, 0.0, model, false);
  CHECK((o.gamma - g.gamma) / dt == doctest::Approx(model.hbar_over_m() * 0.2));
}

TEST_CASE("distance closed form matches the ODE system") {
  for (const PhysicalParams& p :
       {PhysicalParams::desk(4.0, 1.0), PhysicalParams::desk(10.0, 0.3), PhysicalParams::reference()}) {
    const Model model(p);
    const double t_max = 5.0 * model.measurement_end();
    double worst_x = 0.0, worst_k = 0.0;
    for (int i = 1; i <= 50; ++i) {
      const double t = t_max * i / 50.0;
      const Distance d = distance_closed_form(t, model);
      const State s = distance_ode(t, model);
      worst_x = std::max(worst_x, rel(d.X, s[0]));
      worst_k = std::max(worst_k, rel(d.K, s[1]));
    }
    CHECK(worst_x < 1e-6);
    CHECK(worst_k < 1e-6);
    const Distance z = distance_closed_form(0.0, model);
    CHECK(z.X == 0.0);
    CHECK(z.K == 0.0);
  }
}

TEST_CASE("distance at reference scale") {
  const Model model(PhysicalParams::reference());
  const double T = model.params.T;
  const double wT = model.dc.omega * T;
  const Distance d = distance_closed_form(T, model);
  CHECK(std::abs(d.X / 0.01 - 1.0) < 2.0 * wT);
  CHECK(d.X < distance_first_order(T, model));
  for (double t : {1e-3, 0.1, 0.5, 1.0}) {
    const double x = distance_closed_form(t, model).X;
    CHECK(rel(x, model.hbar_kappa() * t) < model.dc.omega * t);
    CHECK(distance_deficit(t, model) == doctest::Approx(distance_first_order(t, model) - x)
                                            .epsilon(1e-9));
  }
  // The integral helper integrates X.
  const double h = 1e-3;
  double acc = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double a = i * h, b = a + h;
    acc += h / 6.0 *
           (distance_closed_form(a, model).X + 4.0 * distance_closed_form(0.5 * (a + b), model).X +
            distance_closed_form(b, model).X);
  }
  CHECK(rel(distance_integral(1.0, model), acc) < 1e-9);
}

TEST_CASE("Gaussian amplitude and norm") {
  const DerivedConstants dc = derive_constants(PhysicalParams::desk());
  const GaussianParams g = stationary_gaussian(0.3, 0.5, dc);
  CHECK(gaussian_norm_sq(g) == doctest::Approx(1.0).epsilon(1e-14));
  double s = 0.0;
  const double dx = 0.01;
  for (int j = -2000; j <= 2000; ++j) s += std::norm(gaussian_amplitude(g, j * dx)) * dx;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("weak error of the position variance is first order") {
  const Model model(PhysicalParams::desk());
  const double t = 1.0;
  const double exact = peak_variance(t, model.dc);
  const double e1 = std::abs(discrete_position_variance(t, 50, model) - exact);
  const double e2 = std::abs(discrete_position_variance(t, 100, model) - exact);
  const double e4 = std::abs(discrete_position_variance(t, 200, model) - exact);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.05));
  CHECK(e2 / e4 == doctest::Approx(2.0).epsilon(0.05));
  CHECK(discrete_position_variance(t, 100000, model) == doctest::Approx(exact).epsilon(1e-4));
}

TEST_CASE("eigenstate ensemble: moments and standard-error scaling") {
  const Model model(PhysicalParams::desk());
  const DeltaProfile prof = DeltaProfile::for_model(model);
  const double dt = 1e-2;
  const int steps = 50;
  auto path = [&](std::uint64_t, TrajectoryRng& rng) {
    GaussianParams g = stationary_gaussian(0.0, 0.0, model.dc);
    for (int n = 0; n < steps; ++n) g = step_eigenstate(g, +1, n * dt, dt, rng.increment(dt), prof, model);
    return std::array<double, 2>{g.xbar, g.kbar};
  };
  const double t = steps * dt;
  std::vector<double> log_n, log_se;
  for (std::uint64_t n : {100u, 1000u, 10000u, 100000u}) {
    const auto rs = run_paths(EnsembleOptions{n, 2024 + n, 1}, path);
    RunningStats q, k;
    for (const auto& r : rs) {
      q.add(r[0]);
      k.add(r[1]);
    }
    log_n.push_back(std::log(static_cast<double>(n)));
    log_se.push_back(std::log(q.standard_error()));
    if (n == 10000u) {
      CHECK(std::abs(k.mean()) < 3.0 * k.standard_error());
      CHECK(std::abs(q.mean() - peak_mean_position(t, +1, prof, model)) < 3.0 * q.standard_error());
      CHECK(rel(q.variance(), peak_variance(t, model.dc)) < 0.05);
    }
  }
  CHECK(fit_slope(log_n, log_se) == doctest::Approx(-0.5).epsilon(0.1));
}
