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

#include <complex>
#include <vector>

#include "qmupl/params.hpp"

namespace qmupl {

using Complex = std::complex<double>;

/// One Gaussian component
///   phi(x) = exp(-alpha (x - xbar)^2 + i kbar x + gamma + i theta).
struct GaussianParams {
  Complex alpha{1.0, 0.0};
  double xbar = 0.0;
  double kbar = 0.0;
  double gamma = 0.0;
  double theta = 0.0;
};

/// Non-negative switching function of the interaction, normalized so that its
/// integral over [t0, t0 + T] equals T and zero outside that window.
class DeltaProfile {
 public:
  enum class Shape { Rectangular, Sampled };

  static DeltaProfile rectangular(double t0, double duration);
  static DeltaProfile for_model(const Model& model);

  /// Piecewise-linear profile through (times[i], values[i]); the samples must
  /// lie inside [t0, t0 + duration]. The trapezoidal integral is rescaled to
  /// `duration`.
  static DeltaProfile sampled(std::vector<double> times, std::vector<double> values,
                              double t0, double duration);

  double operator()(double t) const;
  /// Integral of the profile from t0 to t.
  double integral(double t) const;
  double integral(double a, double b) const { return integral(b) - integral(a); }

  Shape shape() const { return shape_; }
  double t0() const { return t0_; }
  double duration() const { return duration_; }

 private:
  DeltaProfile() = default;

  Shape shape_ = Shape::Rectangular;
  double t0_ = 0.0;
  double duration_ = 1.0;
  std::vector<double> times_;
  std::vector<double> values_;
  std::vector<double> cumulative_;  // integral up to times_[i]
};

/// Fixed point (1 - i) / (4 sigma_q^2) of the width equation.
Complex stationary_alpha(const DerivedConstants& dc);

/// Closed-form width alpha_t = alpha_s tanh(omega t / (1 - i) + c0), written
/// as a Moebius map of tanh(omega t / (1 - i)) so that the stationary point
/// is reproduced exactly. Throws Error(Domain) if Re(alpha0) <= 0 or the map
/// is singular at t.
Complex alpha_closed_form(double t, Complex alpha0, const DerivedConstants& dc);

/// Advances one component over [t, t + dt] by Euler-Maruyama on the
/// parameter equations, where `brace` is the innovation multiplying the
/// noise coefficients: d(xi) - 2 sqrt(lambda) xbar dt under the linear
/// measure, dW for an eigenstate under the physical measure. `sign` selects
/// the spin branch of the interaction; `delta_integral` is the integral of
/// the switching function over the step. With `norm_corrections` false the
/// lambda / (4 alpha_R) and lambda alpha_I / (4 alpha_R^2) terms are dropped
/// from the gamma and theta drifts.
GaussianParams advance_component(const GaussianParams& gp, int sign, double dt,
                                 double brace, double delta_integral, const Model& model,
                                 bool norm_corrections = true);

/// Physical-measure step of a spin eigenstate (one shared increment dW).
GaussianParams step_eigenstate(const GaussianParams& gp, int sign, double t, double dt,
                               double dW, const DeltaProfile& profile, const Model& model);

/// Linear-measure step driven by the increment d(xi).
GaussianParams step_linear_component(const GaussianParams& gp, int sign, double t,
                                     double dt, double dxi, const DeltaProfile& profile,
                                     const Model& model);

enum class Measure { Physical, Linear };

/// Free-particle step (no interaction). `increment` is dW under the
/// physical measure or d(xi) under the linear one.
GaussianParams free_particle_step(const GaussianParams& gp, double dt, double increment,
                                  Measure measure, const Model& model,
                                  bool norm_corrections = true);

/// Mean peak position of an eigenstate: +-(hbar kappa / 2) int_0^t Delta.
double peak_mean_position(double t, int sign, const DeltaProfile& profile,
                          const Model& model);

/// Variance of the peak position at stationary width:
/// sigma_q^2 [w + w^2/2 + w^3/12], w = omega t.
double peak_variance(double t, const DerivedConstants& dc);

/// Chebyshev bound on |<q>_t - E<q>_t| >= delta/2: 4 V(t) / delta^2.
double chebyshev_outlier_bound(double delta, double t, const DerivedConstants& dc);

/// Distance between the peaks of the two components.
struct Distance {
  double X = 0.0;  // position separation
  double K = 0.0;  // wavenumber separation
};

/// Exact deterministic distance for the rectangular profile (X_0 = K_0 = 0).
Distance distance_closed_form(double t, const Model& model);

/// First-order approximation hbar kappa * min(t - t0, T) (clamped at 0).
double distance_first_order(double t, const Model& model);

/// hbar kappa int_0^t Delta - X_t, evaluated without cancellation.
double distance_deficit(double t, const Model& model);

/// int_0^t X dt'.
double distance_integral(double t, const Model& model);

/// Squared L2 norm e^{2 gamma} sqrt(pi / (2 Re alpha)).
double gaussian_norm_sq(const GaussianParams& gp);

/// Value of the component at x.
Complex gaussian_amplitude(const GaussianParams& gp, double x);

/// Parameters of the normalized, zero-phase Gaussian centred at xbar with
/// stationary width.
GaussianParams stationary_gaussian(double xbar, double kbar, const DerivedConstants& dc);

}  // namespace qmupl
