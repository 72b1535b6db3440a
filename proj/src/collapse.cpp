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

#include "qmupl/collapse.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

namespace qmupl {

SpinCoefficients SpinCoefficients::from_probability(double p_plus) {
  if (!(p_plus >= 0.0 && p_plus <= 1.0)) {
    fail(ErrorCode::Domain, "|c+|^2 must lie in [0, 1]");
  }
  return {Complex{std::sqrt(p_plus), 0.0}, Complex{std::sqrt(1.0 - p_plus), 0.0}};
}

void SpinCoefficients::validate() const {
  const double n = std::norm(c_plus) + std::norm(c_minus);
  if (!(std::abs(n - 1.0) <= 1e-12)) {
    fail(ErrorCode::Domain, "spin coefficients are not normalized");
  }
}

double SpinCoefficients::gamma0() const {
  validate();
  const double ap = std::abs(c_plus);
  const double am = std::abs(c_minus);
  if (!(ap > 1e-150) || !(am > 1e-150)) {
    fail(ErrorCode::Domain, "weight gap undefined for a spin eigenstate");
  }
  return std::log(ap) - std::log(am);
}

void CollapseThresholds::validate() const {
  if (!(a > 0.0) || !(b > a) || !std::isfinite(b)) {
    fail(ErrorCode::Domain, "thresholds need b > a > 0");
  }
  if (!(multiplier >= 0.0) || !std::isfinite(multiplier)) {
    fail(ErrorCode::Domain, "safety multiplier must be finite and non-negative");
  }
}

void ReducedOptions::validate() const {
  if (!(ds > 0.0) || ds > 1e-3) fail(ErrorCode::Domain, "reduced step needs 0 < ds <= 1e-3");
  if (!(window >= 0.0) || !std::isfinite(window)) {
    fail(ErrorCode::Domain, "post-hit window must be finite and non-negative");
  }
}

double quantum_mean_position(double x_plus, double x_minus, double gamma_plus,
                             double gamma_minus) {
  const double d = gamma_plus - gamma_minus;
  const double lo = std::min(x_plus, x_minus);
  const double hi = std::max(x_plus, x_minus);
  double q;
  if (d >= 0.0) {
    const double w_minus = 1.0 / (1.0 + std::exp(2.0 * d));
    q = x_plus - (x_plus - x_minus) * w_minus;
  } else {
    const double w_plus = 1.0 / (1.0 + std::exp(-2.0 * d));
    q = x_minus + (x_plus - x_minus) * w_plus;
  }
  return std::clamp(q, lo, hi);
}

double gamma_step_physical(double gamma, double X, double dt, double dW,
                           const DerivedConstants& dc) {
  if (!(dt > 0.0)) fail(ErrorCode::Domain, "gamma_step_physical needs dt > 0");
  const double g = gamma + dc.lambda * X * X * std::tanh(gamma) * dt +
                   std::sqrt(dc.lambda) * X * dW;
  require_finite(g, "weight gap");
  return g;
}

TimeChange time_change(double t, const Model& model) {
  if (!(t >= 0.0)) fail(ErrorCode::Domain, "time_change needs t >= 0");
  using boost::math::quadrature::gauss_kronrod;
  const double t0 = model.params.t0;
  const double t1 = model.measurement_end();
  auto f = [&](double u) {
    const double X = distance_closed_form(u, model).X;
    return model.dc.lambda * X * X;
  };
  double s = 0.0;
  const double breaks[] = {t0, t1};
  double from = 0.0;
  for (double br : breaks) {
    const double to = std::min(t, br);
    if (to > from) s += gauss_kronrod<double, 31>::integrate(f, from, to, 15, 1e-13);
    from = std::max(from, to);
  }
  if (t > from) s += gauss_kronrod<double, 31>::integrate(f, from, t, 15, 1e-13);

  TimeChange tc;
  tc.s = s;
  const double w = std::clamp(t - t0, 0.0, model.params.T);
  tc.s_cubic = effective_time_constant(model.params) * w * w * w;
  tc.cubic_valid = t <= t1;
  return tc;
}

double inverse_time_change_cubic(double s, const Model& model) {
  if (!(s >= 0.0)) fail(ErrorCode::Domain, "s must be non-negative");
  return model.params.t0 + std::cbrt(s / effective_time_constant(model.params));
}

double inverse_time_change(double s, const Model& model) {
  if (!(s >= 0.0)) fail(ErrorCode::Domain, "s must be non-negative");
  if (s == 0.0) return 0.0;
  const double t_max = model.params.t0 + 10.0 * model.params.T;
  if (time_change(t_max, model).s < s) {
    fail(ErrorCode::Domain, "s-time not reached within 10 T");
  }
  auto g = [&](double t) { return time_change(t, model).s - s; };
  double hi = std::min(2.0 * inverse_time_change_cubic(s, model), t_max);
  while (g(hi) < 0.0) hi = std::min(2.0 * hi, t_max);
  boost::uintmax_t iters = 200;
  auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-14 * std::abs(b); };
  const auto r = boost::math::tools::toms748_solve(g, 0.0, hi, -s, g(hi), tol, iters);
  return 0.5 * (r.first + r.second);
}

HittingStats hitting_time_stats(double gamma0, double b) {
  if (!(b > 0.0) || !(std::abs(gamma0) <= b)) {
    fail(ErrorCode::Domain, "hitting_time_stats needs |gamma0| <= b, b > 0");
  }
  auto F = [](double x) {
    const double th = std::tanh(x);
    const double sech = 1.0 / std::cosh(x);
    return x * th - x * x * sech * sech;
  };
  const double g = std::abs(gamma0);
  return {b * std::tanh(b) - g * std::tanh(g), F(b) - F(g)};
}

CollapseProbability collapse_probability(double gamma0, double b) {
  if (!(b > 0.0) || !(std::abs(gamma0) <= b)) {
    fail(ErrorCode::Domain, "collapse_probability needs |gamma0| <= b, b > 0");
  }
  const double tb = std::tanh(b);
  const double tg = std::tanh(gamma0);
  CollapseProbability p;
  if (gamma0 >= 0.0) {
    p.p_minus = (tb - tg) / (2.0 * tb);
    p.p_plus = 1.0 - p.p_minus;
  } else {
    p.p_plus = (tb + tg) / (2.0 * tb);
    p.p_minus = 1.0 - p.p_plus;
  }
  return p;
}

CollapseTime collapse_time(const PhysicalParams& p, const CollapseThresholds& th,
                           double gamma0) {
  p.validate();
  th.validate();
  if (!(p.kappa > 0.0)) fail(ErrorCode::Domain, "collapse time needs kappa > 0");
  const HittingStats hs = hitting_time_stats(gamma0, th.b);
  const double s = hs.mean + th.multiplier * std::sqrt(hs.variance);
  CollapseTime ct;
  ct.value = std::cbrt(s / effective_time_constant(p));
  ct.exceeds_T = ct.value > p.T;
  return ct;
}

double one_minus_tanh(double x) {
  if (x < 0.0) return 1.0 - std::tanh(x);
  const double e = std::exp(-2.0 * x);
  return 2.0 * e / (1.0 + e);
}

StabilityBound stability_probability(double a, double b) {
  if (!(a > 0.0) || !(b >= a)) fail(ErrorCode::Domain, "stability bound needs b >= a > 0");
  const double e1 = one_minus_tanh(b);
  const double e2 = one_minus_tanh(b - a);
  StabilityBound sb;
  sb.deficit = (e1 + e2 - e1 * e2) / (2.0 - e2);
  sb.bound = (1.0 + std::tanh(b)) * std::tanh(b - a) / (1.0 + std::tanh(b - a));
  return sb;
}

StabilityBound exact_stability_probability(double a, double b) {
  if (!(a > 0.0) || !(b >= a)) fail(ErrorCode::Domain, "stability bound needs b >= a > 0");
  StabilityBound sb;
  sb.deficit = one_minus_tanh(b) / one_minus_tanh(a);
  sb.bound = 1.0 - sb.deficit;
  return sb;
}

TwoComponentState make_superposition(const SpinCoefficients& c, const DerivedConstants& dc) {
  c.validate();
  TwoComponentState s;
  s.plus = stationary_gaussian(0.0, 0.0, dc);
  s.minus = s.plus;
  s.plus.gamma += std::log(std::abs(c.c_plus));
  s.plus.theta += std::arg(c.c_plus);
  s.minus.gamma += std::log(std::abs(c.c_minus));
  s.minus.theta += std::arg(c.c_minus);
  return s;
}

TwoComponentState step_superposition(const TwoComponentState& s, double t, double dt,
                                     double dW, const DeltaProfile& profile,
                                     const Model& model) {
  require_finite(dW, "noise increment");
  const double q =
      quantum_mean_position(s.plus.xbar, s.minus.xbar, s.plus.gamma, s.minus.gamma);
  const double di = profile.integral(t, t + dt);
  const double c = 2.0 * model.sqrt_lambda() * dt;
  TwoComponentState out;
  out.plus = advance_component(s.plus, +1, dt, dW + c * (q - s.plus.xbar), di, model);
  out.minus = advance_component(s.minus, -1, dt, dW + c * (q - s.minus.xbar), di, model);
  return out;
}

PosteriorState posterior_state(double gamma, const TwoComponentState& components) {
  require_finite(gamma, "weight gap");
  PosteriorState ps;
  ps.dominant = gamma > 0.0 ? 1 : (gamma < 0.0 ? -1 : 0);
  ps.epsilon = std::exp(-std::abs(gamma));
  const double e2 = ps.epsilon * ps.epsilon;
  ps.suppressed_weight = e2 / (1.0 + e2);
  ps.quality = 1.0 / (1.0 + e2);

  ps.state = components;
  const double lp = 2.0 * components.plus.gamma +
                    0.5 * std::log(std::numbers::pi / (2.0 * components.plus.alpha.real()));
  const double lm = 2.0 * components.minus.gamma +
                    0.5 * std::log(std::numbers::pi / (2.0 * components.minus.alpha.real()));
  const double hi = std::max(lp, lm);
  const double log_total = hi + std::log(std::exp(lp - hi) + std::exp(lm - hi));
  ps.state.plus.gamma -= 0.5 * log_total;
  ps.state.minus.gamma -= 0.5 * log_total;
  return ps;
}

}  // namespace qmupl
