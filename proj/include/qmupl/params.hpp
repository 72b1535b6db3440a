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

#include <array>
#include <cmath>
#include <string>
#include <string_view>

namespace qmupl {

/// Reduced Planck constant in J s.
inline constexpr double kHbarSI = 1.0545718e-34;

/// Physical inputs of the pointer + spin measurement model.
///
/// All values are in SI units unless the set is dimensionless (hbar = 1); the
/// equations are unit-agnostic, so any consistent system works. `kappa` is
/// the coupling such that `hbar * kappa` is the pointer drift speed. A zero
/// `kappa` describes a free particle.
struct PhysicalParams {
  double m = 1e-3;                 // pointer mass
  double m0 = 1.67e-27;            // reference nucleon mass
  double lambda0 = 1e-2;           // base collapse rate
  double hbar = kHbarSI;
  double kappa = 0.01 / kHbarSI;   // hbar * kappa = 1 cm/s
  double T = 1.0;                  // measurement duration
  double t0 = 0.0;                 // measurement start

  /// One-gram pointer, hbar*kappa = 1 cm/s, T = 1 s.
  static PhysicalParams reference() { return {}; }

  /// Dimensionless set with hbar = m = 1 and lambda = 1/4, so that
  /// omega = 1 and sigma_q = 1. Used for Monte Carlo and grid runs.
  static PhysicalParams desk(double hbar_kappa = 4.0, double duration = 4.0);

  double hbar_kappa() const { return hbar * kappa; }

  /// Throws Error(Domain) naming the first offending field.
  void validate() const;
};

/// Field names accepted in configuration files, in declaration order.
inline constexpr std::array<std::string_view, 7> kPhysicalFieldNames = {
    "m", "m0", "lambda0", "hbar", "kappa", "T", "t0"};

/// Returns a reference to the named field; throws Error(Config) if unknown.
double& field(PhysicalParams& p, std::string_view name);
double field(const PhysicalParams& p, std::string_view name);

struct DerivedConstants {
  double lambda = 0.0;   // effective collapse rate
  double omega = 0.0;    // damping frequency
  double sigma_q = 0.0;  // asymptotic position spread
  double sigma_p = 0.0;  // asymptotic momentum spread
};

DerivedConstants derive_constants(const PhysicalParams& p);

/// Coefficient c with s_t = c t^3 during the measurement window:
/// lambda (hbar kappa)^2 / 3.
double effective_time_constant(const PhysicalParams& p);

/// Parameters bundled with their derived constants. Every dynamics routine
/// takes one of these; it is an immutable value once constructed.
struct Model {
  PhysicalParams params;
  DerivedConstants dc;

  explicit Model(const PhysicalParams& p = PhysicalParams::reference());

  double hbar_over_m() const { return params.hbar / params.m; }
  double hbar_kappa() const { return params.hbar_kappa(); }
  double sqrt_lambda() const { return std::sqrt(dc.lambda); }
  double measurement_end() const { return params.t0 + params.T; }
};

/// Unit system for length, time and mass. `natural()` picks sigma_q, 1/omega
/// and m, in which hbar = m = omega = sigma_q = 1 and lambda = 1/4.
struct ReducedUnits {
  double length_scale = 1.0;
  double time_scale = 1.0;
  double mass_scale = 1.0;
  bool dimensionless = false;

  static ReducedUnits natural(const PhysicalParams& p);

  PhysicalParams to_reduced(const PhysicalParams& p) const;
  PhysicalParams from_reduced(const PhysicalParams& r) const;

  DerivedConstants to_reduced(const DerivedConstants& dc) const;
  DerivedConstants from_reduced(const DerivedConstants& dc) const;

  double length_to_reduced(double x) const { return x / length_scale; }
  double length_from_reduced(double x) const { return x * length_scale; }
  double time_to_reduced(double t) const { return t / time_scale; }
  double time_from_reduced(double t) const { return t * time_scale; }

  void validate() const;
};

}  // namespace qmupl
