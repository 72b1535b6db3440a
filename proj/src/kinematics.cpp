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

#include "qmupl/kinematics.hpp"

#include <cmath>

#include "qmupl/collapse.hpp"
#include "qmupl/error.hpp"
#include "qmupl/gaussian.hpp"

namespace qmupl {

namespace {

// Shared by the nonlinear and auxiliary systems so that, for X >= 0, the
// rounded result is monotone in `th` and in the incoming coordinates.
SumCoords advance(const SumCoords& sc, double th, double X, double dt, double dW,
                  const DerivedConstants& dc) {
  const double hm = dc.omega * dc.sigma_q * dc.sigma_q;
  const double nx = 2.0 * std::sqrt(dc.omega) * dc.sigma_q;
  const double nk = 2.0 * std::sqrt(dc.lambda);
  SumCoords out;
  out.Xtilde = ((sc.Xtilde + hm * sc.Ktilde * dt) + dc.omega * X * th * dt) + nx * dW;
  out.Ktilde = (sc.Ktilde + 2.0 * dc.lambda * X * th * dt) + nk * dW;
  require_finite(out.Xtilde, "Xtilde");
  require_finite(out.Ktilde, "Ktilde");
  return out;
}

}  // namespace

SumCoords step_sum_coords(const SumCoords& sc, double gamma, double X, double dt, double dW,
                          const DerivedConstants& dc) {
  if (!(dt > 0.0)) fail(ErrorCode::Domain, "step_sum_coords needs dt > 0");
  return advance(sc, std::tanh(gamma), X, dt, dW, dc);
}

SumCoords step_aux_linear(int sign, const SumCoords& sc, double X, double dt, double dW,
                          const DerivedConstants& dc) {
  if (sign != 1 && sign != -1) fail(ErrorCode::Domain, "auxiliary sign must be +1 or -1");
  if (!(dt > 0.0)) fail(ErrorCode::Domain, "step_aux_linear needs dt > 0");
  return advance(sc, static_cast<double>(sign), X, dt, dW, dc);
}

double aux_mean(double t, int sign, const Model& model) {
  return static_cast<double>(sign) * distance_deficit(t, model);
}

double aux_variance(double t, const DerivedConstants& dc) {
  return 4.0 * peak_variance(t, dc);
}

PeakPair reconstruct_peaks(double X, const SumCoords& sc) {
  return {0.5 * (X + sc.Xtilde), -0.5 * (X - sc.Xtilde)};
}

DriftPolynomial post_collapse_drift_polynomial(double T_C, const Model& model, double a) {
  if (!(T_C >= 0.0) || !(a > 0.0)) fail(ErrorCode::Domain, "drift bounds need T_C >= 0, a > 0");
  const double lambda = model.dc.lambda;
  const double v = model.hbar_kappa();
  const double hm = model.hbar_over_m();
  const double deficit = one_minus_tanh(a);
  const double ell = v * model.params.T;
  const double k0 = 2.0 * lambda * v * T_C * T_C;
  DriftPolynomial p;
  // X~ gap at T_C: the omega X (1 - tanh) drift plus the K~ gap fed through hbar/m.
  p.c0 = v * model.dc.omega * T_C * T_C + hm * k0 * T_C / 3.0;
  p.c1 = hm * k0 + model.dc.omega * deficit * ell;
  p.c2 = hm * lambda * deficit * ell;
  return p;
}

DriftBounds post_collapse_drift_bounds(double t, double T_C, const Model& model, double a) {
  if (!(t >= T_C)) fail(ErrorCode::Domain, "drift bounds need t >= T_C");
  const DriftPolynomial p = post_collapse_drift_polynomial(T_C, model, a);
  const double u = t - T_C;
  const double lambda = model.dc.lambda;
  const double v = model.hbar_kappa();
  DriftBounds b;
  b.K_gap = 2.0 * lambda * v * T_C * T_C +
            2.0 * lambda * one_minus_tanh(a) * v * model.params.T * u;
  b.X_gap = p.c0 + p.c1 * u + p.c2 * u * u;
  return b;
}

}  // namespace qmupl
