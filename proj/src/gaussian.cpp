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

#include "qmupl/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "qmupl/error.hpp"

namespace qmupl {

namespace {

constexpr Complex kOneMinusI{1.0, -1.0};

// Taylor coefficients of exp(-w) sin(w): Im((-1 + i)^n) / n!.
double damped_sine_coefficient(int n) {
  Complex p{1.0, 0.0};
  double fact = 1.0;
  for (int k = 1; k <= n; ++k) {
    p *= Complex{-1.0, 1.0};
    fact *= k;
  }
  return p.imag() / fact;
}

const std::vector<double>& damped_sine_series() {
  static const std::vector<double> c = [] {
    std::vector<double> v(41, 0.0);
    for (int n = 1; n <= 40; ++n) v[n] = damped_sine_coefficient(n);
    return v;
  }();
  return c;
}

constexpr double kSeriesCut = 0.5;

// u - exp(-u) sin u
double deficit_shape(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= kSeriesCut) return u - std::exp(-u) * std::sin(u);
  const auto& c = damped_sine_series();
  double sum = 0.0, pw = u;
  for (int n = 2; n <= 40; ++n) {
    pw *= u;
    const double term = c[n] * pw;
    sum -= term;
    if (std::abs(term) < 1e-18 * std::abs(sum) && c[n] != 0.0) break;
  }
  return sum;
}

// 1 - exp(-u)(cos u + sin u) = 2 int_0^u exp(-w) sin w dw
double integral_shape(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= kSeriesCut) return 1.0 - std::exp(-u) * (std::cos(u) + std::sin(u));
  const auto& c = damped_sine_series();
  double sum = 0.0, pw = u;
  for (int n = 1; n <= 40; ++n) {
    pw *= u;
    const double term = 2.0 * c[n] * pw / (n + 1);
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum) && c[n] != 0.0) break;
  }
  return sum;
}

// Responses to a unit step of the drive switched on at tau = 0.
struct StepResponse {
  double X, deficit, integral;
};

StepResponse step_response(double tau, const Model& model) {
  if (tau <= 0.0) return {0.0, 0.0, 0.0};
  const double w = model.dc.omega;
  const double v = model.hbar_kappa();
  const double u = 0.5 * w * tau;
  return {2.0 * v / w * std::exp(-u) * std::sin(u), 2.0 * v / w * deficit_shape(u),
          2.0 * v / (w * w) * integral_shape(u)};
}

}  // namespace

DeltaProfile DeltaProfile::rectangular(double t0, double duration) {
  if (!(duration > 0.0) || !(t0 >= 0.0)) {
    fail(ErrorCode::Domain, "profile needs duration > 0 and t0 >= 0");
  }
  DeltaProfile p;
  p.shape_ = Shape::Rectangular;
  p.t0_ = t0;
  p.duration_ = duration;
  return p;
}

DeltaProfile DeltaProfile::for_model(const Model& model) {
  return rectangular(model.params.t0, model.params.T);
}

DeltaProfile DeltaProfile::sampled(std::vector<double> times, std::vector<double> values,
                                   double t0, double duration) {
  if (!(duration > 0.0) || !(t0 >= 0.0)) {
    fail(ErrorCode::Domain, "profile needs duration > 0 and t0 >= 0");
  }
  if (times.size() < 2 || times.size() != values.size()) {
    fail(ErrorCode::Domain, "sampled profile needs >= 2 matching samples");
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (values[i] < 0.0 || !std::isfinite(values[i])) {
      fail(ErrorCode::Domain, "profile values must be finite and non-negative");
    }
    if (i > 0 && !(times[i] > times[i - 1])) {
      fail(ErrorCode::Domain, "profile sample times must be strictly increasing");
    }
  }
  if (times.front() < t0 || times.back() > t0 + duration) {
    fail(ErrorCode::Domain, "profile samples must lie inside the measurement window");
  }
  DeltaProfile p;
  p.shape_ = Shape::Sampled;
  p.t0_ = t0;
  p.duration_ = duration;
  std::vector<double> cum(times.size(), 0.0);
  for (std::size_t i = 1; i < times.size(); ++i) {
    cum[i] = cum[i - 1] + 0.5 * (values[i] + values[i - 1]) * (times[i] - times[i - 1]);
  }
  if (!(cum.back() > 0.0)) fail(ErrorCode::Domain, "profile integral must be positive");
  const double scale = duration / cum.back();
  for (auto& v : values) v *= scale;
  for (auto& c : cum) c *= scale;
  p.times_ = std::move(times);
  p.values_ = std::move(values);
  p.cumulative_ = std::move(cum);
  return p;
}

double DeltaProfile::operator()(double t) const {
  if (shape_ == Shape::Rectangular) {
    return (t >= t0_ && t <= t0_ + duration_) ? 1.0 : 0.0;
  }
  if (t < times_.front() || t > times_.back()) return 0.0;
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.end()) return values_.back();
  const std::size_t i = static_cast<std::size_t>(it - times_.begin());
  const double f = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
  return values_[i - 1] + f * (values_[i] - values_[i - 1]);
}

double DeltaProfile::integral(double t) const {
  if (shape_ == Shape::Rectangular) {
    return std::clamp(t - t0_, 0.0, duration_);
  }
  if (t <= times_.front()) return 0.0;
  if (t >= times_.back()) return cumulative_.back();
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times_.begin());
  const double h = t - times_[i - 1];
  const double slope = (values_[i] - values_[i - 1]) / (times_[i] - times_[i - 1]);
  return cumulative_[i - 1] + values_[i - 1] * h + 0.5 * slope * h * h;
}

Complex stationary_alpha(const DerivedConstants& dc) {
  return kOneMinusI / (4.0 * dc.sigma_q * dc.sigma_q);
}

Complex alpha_closed_form(double t, Complex alpha0, const DerivedConstants& dc) {
  if (!(alpha0.real() > 0.0)) {
    fail(ErrorCode::Domain, "alpha0 must have a positive real part");
  }
  if (t < 0.0) fail(ErrorCode::Domain, "alpha_closed_form needs t >= 0");
  const Complex as = stationary_alpha(dc);
  const Complex z0 = alpha0 / as;
  if (z0 == Complex{1.0, 0.0} || t == 0.0) return alpha0;
  const Complex tau = std::tanh(Complex{0.5 * dc.omega * t, 0.5 * dc.omega * t});
  const Complex den = 1.0 + z0 * tau;
  const Complex a = as * (tau + z0) / den;
  if (std::abs(den) < 1e-300 || !std::isfinite(a.real()) || !std::isfinite(a.imag())) {
    fail(ErrorCode::Domain, "alpha0 lies on the singular set of the width map");
  }
  return a;
}

GaussianParams advance_component(const GaussianParams& gp, int sign, double dt, double brace,
                                 double delta_integral, const Model& model,
                                 bool norm_corrections) {
  const double lambda = model.dc.lambda;
  const double sl = model.sqrt_lambda();
  const double hm = model.hbar_over_m();
  const double hv = 0.5 * model.hbar_kappa() * static_cast<double>(sign);
  const double ar = gp.alpha.real();
  const double ai = gp.alpha.imag();
  const double x = gp.xbar;
  const double k = gp.kbar;

  GaussianParams out = gp;
  out.xbar = x + hm * k * dt + hv * delta_integral + sl / (2.0 * ar) * brace;
  out.kbar = k - sl * (ai / ar) * brace;

  double gamma_drift = lambda * x * x + hm * ai;
  double theta_drift = -0.5 * hm * k * k - hm * ar;
  if (norm_corrections) {
    gamma_drift += lambda / (4.0 * ar);
    theta_drift += lambda * ai / (4.0 * ar * ar);
  }
  out.gamma = gp.gamma + gamma_drift * dt + sl * x * brace;
  out.theta = gp.theta + theta_drift * dt - hv * k * delta_integral + sl * (ai / ar) * x * brace;

  if (gp.alpha != stationary_alpha(model.dc)) {
    out.alpha = alpha_closed_form(dt, gp.alpha, model.dc);
  }
  require_finite(out.xbar, "xbar");
  require_finite(out.kbar, "kbar");
  require_finite(out.gamma, "gamma");
  require_finite(out.theta, "theta");
  return out;
}

GaussianParams step_eigenstate(const GaussianParams& gp, int sign, double t, double dt,
                               double dW, const DeltaProfile& profile, const Model& model) {
  require_finite(dW, "noise increment");
  return advance_component(gp, sign, dt, dW, profile.integral(t, t + dt), model);
}

GaussianParams step_linear_component(const GaussianParams& gp, int sign, double t, double dt,
                                     double dxi, const DeltaProfile& profile,
                                     const Model& model) {
  require_finite(dxi, "noise increment");
  const double brace = dxi - 2.0 * model.sqrt_lambda() * gp.xbar * dt;
  return advance_component(gp, sign, dt, brace, profile.integral(t, t + dt), model);
}

GaussianParams free_particle_step(const GaussianParams& gp, double dt, double increment,
                                  Measure measure, const Model& model,
                                  bool norm_corrections) {
  require_finite(increment, "noise increment");
  const double brace = measure == Measure::Physical
                           ? increment
                           : increment - 2.0 * model.sqrt_lambda() * gp.xbar * dt;
  GaussianParams out = advance_component(gp, +1, dt, brace, 0.0, model, norm_corrections);
  // Milstein terms from the xbar dependence of the gamma and theta noise.
  const double ar = gp.alpha.real();
  const double c = 0.25 * model.dc.lambda / ar * (brace * brace - dt);
  out.gamma += c;
  out.theta += c * gp.alpha.imag() / ar;
  return out;
}

double peak_mean_position(double t, int sign, const DeltaProfile& profile, const Model& model) {
  return static_cast<double>(sign) * 0.5 * model.hbar_kappa() * profile.integral(t);
}

double peak_variance(double t, const DerivedConstants& dc) {
  const double w = dc.omega * t;
  return dc.sigma_q * dc.sigma_q * (w + 0.5 * w * w + w * w * w / 12.0);
}

double chebyshev_outlier_bound(double delta, double t, const DerivedConstants& dc) {
  if (!(delta > 0.0)) fail(ErrorCode::Domain, "Chebyshev interval width must be positive");
  return 4.0 * peak_variance(t, dc) / (delta * delta);
}

Distance distance_closed_form(double t, const Model& model) {
  const double tau = t - model.params.t0;
  const StepResponse on = step_response(tau, model);
  const StepResponse off = step_response(tau - model.params.T, model);
  return {on.X - off.X, -2.0 * model.dc.lambda * (on.integral - off.integral)};
}

double distance_first_order(double t, const Model& model) {
  return model.hbar_kappa() * std::clamp(t - model.params.t0, 0.0, model.params.T);
}

double distance_deficit(double t, const Model& model) {
  const double tau = t - model.params.t0;
  return step_response(tau, model).deficit - step_response(tau - model.params.T, model).deficit;
}

double distance_integral(double t, const Model& model) {
  const double tau = t - model.params.t0;
  return step_response(tau, model).integral -
         step_response(tau - model.params.T, model).integral;
}

double gaussian_norm_sq(const GaussianParams& gp) {
  return std::exp(2.0 * gp.gamma) * std::sqrt(std::numbers::pi / (2.0 * gp.alpha.real()));
}

Complex gaussian_amplitude(const GaussianParams& gp, double x) {
  const double y = x - gp.xbar;
  const Complex e = -gp.alpha * (y * y) + Complex{gp.gamma, gp.kbar * x + gp.theta};
  return std::exp(e);
}

GaussianParams stationary_gaussian(double xbar, double kbar, const DerivedConstants& dc) {
  GaussianParams gp;
  gp.alpha = stationary_alpha(dc);
  gp.xbar = xbar;
  gp.kbar = kbar;
  gp.gamma = -0.25 * std::log(2.0 * std::numbers::pi * dc.sigma_q * dc.sigma_q);
  gp.theta = 0.0;
  return gp;
}

}  // namespace qmupl
