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

#include "qmupl/params.hpp"

namespace qmupl {

/// Sum coordinates X~ = x+ + x- and K~ = k+ + k-.
struct SumCoords {
  double Xtilde = 0.0;
  double Ktilde = 0.0;
};

struct PeakPair {
  double x_plus = 0.0;
  double x_minus = 0.0;
};

/// One Euler-Maruyama step of the sum coordinates, driven by the same
/// increment dW as the weight gap.
SumCoords step_sum_coords(const SumCoords& sc, double gamma, double X, double dt, double dW,
                          const DerivedConstants& dc);

/// Auxiliary linear system with tanh(Gamma) replaced by `sign` (+1 or -1).
SumCoords step_aux_linear(int sign, const SumCoords& sc, double X, double dt, double dW,
                          const DerivedConstants& dc);

/// Mean of the auxiliary X~ for the rectangular profile:
/// sign * (hbar kappa int_0^t Delta - X_t).
double aux_mean(double t, int sign, const Model& model);

/// 4 sigma_q^2 [w + w^2/2 + w^3/12], w = omega t.
double aux_variance(double t, const DerivedConstants& dc);

PeakPair reconstruct_peaks(double X, const SumCoords& sc);

/// Upper bounds on K~+ - K~ and X~+ - X~ for the + outcome.
struct DriftBounds {
  double K_gap = 0.0;
  double X_gap = 0.0;
};

/// Bound polynomial X_gap(t) = c0 + c1 (t - T_C) + c2 (t - T_C)^2.
struct DriftPolynomial {
  double c0 = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
};

/// Times are measured from the start of the interaction.
/// Bound chain for t >= T_C, valid while Gamma stays above `a`. Up to T_C
/// the estimates K_gap <= 2 lambda hbar kappa T_C^2 and
/// X_gap <= hbar kappa omega T_C^2 + (2/3)(hbar/m) lambda hbar kappa T_C^3 hold
/// with tanh Gamma >= -1 and X <= hbar kappa t; after T_C
/// the deficit 1 - tanh Gamma <= 1 - tanh a and X <= l = hbar kappa T are used.
/// This is an estimate built from upper bounds, not a sharp value.
DriftBounds post_collapse_drift_bounds(double t, double T_C, const Model& model, double a);

DriftPolynomial post_collapse_drift_polynomial(double T_C, const Model& model, double a);

}  // namespace qmupl
