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

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>

#include "qmupl/error.hpp"
#include "qmupl/gaussian.hpp"
#include "qmupl/params.hpp"

namespace qmupl {

struct SpinCoefficients {
  Complex c_plus{1.0, 0.0};
  Complex c_minus{0.0, 0.0};

  /// Real coefficients sqrt(p), sqrt(1 - p).
  static SpinCoefficients from_probability(double p_plus);

  double p_plus() const { return std::norm(c_plus); }

  /// Throws Error(Domain) unless |c+|^2 + |c-|^2 = 1 to 1e-12.
  void validate() const;

  /// ln|c+ / c-|; throws Error(Domain) if either modulus is below 1e-150.
  double gamma0() const;
};

struct CollapseThresholds {
  double a = 35.0;           // suppression level
  double b = 50.0;           // confirmation level
  double multiplier = 1e5;   // safety factor on the hitting-time spread

  void validate() const;
};

/// Result of one reduced weight-gap trajectory.
struct CollapseOutcome {
  int sign = 0;        // +1 or -1; 0 when the step budget ran out
  bool hit = false;
  double s_hit = std::numeric_limits<double>::quiet_NaN();
  double t_hit = std::numeric_limits<double>::quiet_NaN();  // set by callers that map s to t
  double gamma_at_hit = std::numeric_limits<double>::quiet_NaN();
  /// Minimum of sign * Gamma over the post-hit window, hit point included.
  double post_min = std::numeric_limits<double>::quiet_NaN();
  bool returned = false;        // post_min fell below the suppression level
  double observed_window = 0.0; // s-length actually simulated after the hit
  std::uint64_t steps = 0;
};

struct ReducedOptions {
  double ds = 1e-3;
  /// Detect crossings between grid points with the Brownian-bridge
  /// probability exp(-2 (b - G_n)(b - G_{n+1}) / ds).
  bool bridge = true;
  /// s-length of the post-hit window; 0 disables it. The window stops early
  /// once the chance of ever dropping below the current minimum is < 1e-16.
  double window = 0.0;
  /// Step budget before a no-hit result; 0 selects 100 E[S] / ds.
  std::uint64_t max_steps = 0;

  void validate() const;
};

/// Weighted mean of the two peak positions with weights e^{2 gamma}.
double quantum_mean_position(double x_plus, double x_minus, double gamma_plus,
                             double gamma_minus);

/// One Euler-Maruyama step of the weight gap in physical time.
double gamma_step_physical(double gamma, double X, double dt, double dW,
                           const DerivedConstants& dc);

struct TimeChange {
  double s = 0.0;        // lambda int_0^t X^2 by quadrature
  double s_cubic = 0.0;  // lambda (hbar kappa)^2 (t - t0)^3 / 3
  bool cubic_valid = true;
};

TimeChange time_change(double t, const Model& model);

/// Inverse of the cubic approximation: t0 + cbrt(3 s / (lambda (hbar kappa)^2)).
double inverse_time_change_cubic(double s, const Model& model);

/// Root of time_change(t).s = s; falls back to the cubic inverse as the
/// initial bracket. Throws Error(Domain) if s is not reached by 10 T.
double inverse_time_change(double s, const Model& model);

/// tanh with the saturated branch taken explicitly; bit-identical to std::tanh.
inline double reduced_tanh(double g) {
  constexpr double kSaturated = 19.5;
  return std::abs(g) > kSaturated ? std::copysign(1.0, g) : std::tanh(g);
}

struct HittingStats {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean b tanh b - G0 tanh G0 and variance F(b) - F(G0) of the first exit
/// time of dG = tanh G ds + dW from (-b, b).
HittingStats hitting_time_stats(double gamma0, double b);

struct CollapseProbability {
  double p_plus = 0.5;
  double p_minus = 0.5;
};

CollapseProbability collapse_probability(double gamma0, double b);

struct CollapseTime {
  double value = 0.0;     // measured from the start of the interaction
  bool exceeds_T = false; // collapse slower than the measurement
};

CollapseTime collapse_time(const PhysicalParams& p, const CollapseThresholds& th,
                           double gamma0 = 0.0);

struct StabilityBound {
  double bound = 0.0;    // lower bound on Q+
  double deficit = 1.0;  // 1 - bound, computed without cancellation
};

/// (1 + tanh b) tanh(b - a) / (1 + tanh(b - a)); requires b >= a > 0.
StabilityBound stability_probability(double a, double b);

/// Exact probability of never returning below a after starting at b:
/// 1 - (1 - tanh b) / (1 - tanh a).
StabilityBound exact_stability_probability(double a, double b);

/// 1 - tanh x without cancellation.
double one_minus_tanh(double x);

/// The two spin-correlated components Psi = |+> phi+ + |-> phi-, with the
/// spin coefficients absorbed into gamma and theta.
struct TwoComponentState {
  GaussianParams plus;
  GaussianParams minus;

  double weight_gap() const { return plus.gamma - minus.gamma; }
  double distance() const { return plus.xbar - minus.xbar; }
};

/// Normalized stationary components at the origin weighted by c+-.
TwoComponentState make_superposition(const SpinCoefficients& c, const DerivedConstants& dc);

/// Physical-measure step with one increment dW shared by both components.
TwoComponentState step_superposition(const TwoComponentState& s, double t, double dt,
                                     double dW, const DeltaProfile& profile,
                                     const Model& model);

struct PosteriorState {
  TwoComponentState state;     // renormalized to unit total norm
  int dominant = 0;            // sign of Gamma (0 when Gamma = 0)
  double epsilon = 1.0;        // e^{-|Gamma|}
  double suppressed_weight = 0.5;
  double quality = 0.5;        // 1 - suppressed_weight
};

PosteriorState posterior_state(double gamma, const TwoComponentState& components);

/// Reduced weight gap dG = tanh G ds + dW run to the first exit from (-b, b),
/// optionally followed by a post-hit window. `noise` supplies normal() and
/// uniform().
template <class Noise>
CollapseOutcome simulate_gamma_reduced(double gamma0, const CollapseThresholds& th,
                                       const ReducedOptions& opt, Noise& noise) {
  th.validate();
  opt.validate();
  require_finite(gamma0, "initial weight gap");
  constexpr double kBridgeCut = 40.0;
  const double b = th.b;
  const double ds = opt.ds;
  const double sq = std::sqrt(ds);
  const double kb = 2.0 / ds;

  CollapseOutcome out;
  double g = gamma0;
  if (std::abs(gamma0) >= b) {
    out.hit = true;
    out.sign = gamma0 >= 0.0 ? 1 : -1;
    out.s_hit = 0.0;
  } else {
    std::uint64_t budget = opt.max_steps;
    if (budget == 0) {
      const double mean = hitting_time_stats(gamma0, b).mean;
      budget = static_cast<std::uint64_t>(std::ceil(std::max(100.0 * mean / ds, 1000.0)));
    }
    std::uint64_t n = 0;
    for (;;) {
      if (n >= budget) {
        out.steps = n;
        out.gamma_at_hit = g;
        return out;
      }
      const double gn = g + reduced_tanh(g) * ds + sq * noise.normal();
      ++n;
      if (gn >= b || gn <= -b) {
        out.sign = gn > 0.0 ? 1 : -1;
        g = gn;
        break;
      }
      if (opt.bridge) {
        const double side = (g + gn >= 0.0) ? 1.0 : -1.0;
        const double e = kb * (b - side * g) * (b - side * gn);
        if (e < kBridgeCut && noise.uniform() < std::exp(-e)) {
          out.sign = side > 0.0 ? 1 : -1;
          g = gn;
          break;
        }
      }
      g = gn;
    }
    out.hit = true;
    out.steps = n;
    out.s_hit = static_cast<double>(n) * ds;
  }
  out.gamma_at_hit = g;

  if (opt.window > 0.0) {
    const double sgn = static_cast<double>(out.sign);
    const double a = th.a;
    double y = sgn * g;
    double m = y;
    const auto n_window = static_cast<std::uint64_t>(std::ceil(opt.window / ds));
    std::uint64_t j = 0;
    for (; j < n_window; ++j) {
      if (y - m > 18.0 && one_minus_tanh(y) < 1e-16 * one_minus_tanh(m)) break;
      const double yn = y + reduced_tanh(y) * ds + sgn * sq * noise.normal();
      if (opt.bridge) {
        const double e = kb * (y - m) * (yn - m);
        if (e < kBridgeCut) {
          const double d = y - yn;
          const double u = noise.uniform();
          const double z = 0.5 * (y + yn - std::sqrt(d * d - 2.0 * ds * std::log1p(-u)));
          m = std::min(m, z);
        }
      }
      m = std::min(m, yn);
      y = yn;
    }
    out.post_min = m;
    out.returned = m < a;
    out.observed_window = static_cast<double>(j) * ds;
    out.steps += j;
  }
  return out;
}

/// Reduced weight gap without absorption, integrated to s_end.
template <class Noise>
double evolve_gamma_reduced(double gamma0, double s_end, double ds, Noise& noise) {
  if (!(ds > 0.0) || !(s_end >= 0.0)) fail(ErrorCode::Domain, "need ds > 0 and s_end >= 0");
  const auto n = static_cast<std::uint64_t>(std::llround(s_end / ds));
  const double h = n > 0 ? s_end / static_cast<double>(n) : 0.0;
  const double sq = std::sqrt(h);
  double g = gamma0;
  for (std::uint64_t i = 0; i < n; ++i) g += reduced_tanh(g) * h + sq * noise.normal();
  require_finite(g, "weight gap");
  return g;
}

/// Physical-time weight gap driven by the deterministic distance X_t.
template <class Noise>
double evolve_gamma_physical(double gamma0, double t_end, double dt, const Model& model,
                             Noise& noise) {
  if (!(dt > 0.0) || !(t_end >= 0.0)) fail(ErrorCode::Domain, "need dt > 0 and t_end >= 0");
  const auto n = static_cast<std::uint64_t>(std::llround(t_end / dt));
  const double h = n > 0 ? t_end / static_cast<double>(n) : 0.0;
  const double sq = std::sqrt(h);
  double g = gamma0;
  for (std::uint64_t i = 0; i < n; ++i) {
    const double X = distance_closed_form(static_cast<double>(i) * h, model).X;
    g = gamma_step_physical(g, X, h, sq * noise.normal(), model.dc);
  }
  return g;
}

}  // namespace qmupl
