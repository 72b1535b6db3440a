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

#include "qmupl/run.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <memory>
#include <sstream>

#include <json.hpp>

#include "qmupl/ensemble.hpp"
#include "qmupl/error.hpp"
#include "qmupl/gaussian.hpp"
#include "qmupl/io.hpp"
#include "qmupl/kinematics.hpp"
#include "qmupl/stats.hpp"

namespace qmupl {

namespace {

using Json = nlohmann::ordered_json;

constexpr double kZLimit = 5.0;  // in-run statistical consistency threshold

// Initial offset of the free-particle comparison state, in lattice units.
constexpr double kFreeX0 = 0.5;
constexpr double kFreeK0 = 0.3;

bool parse_double(std::string_view s, double& out) {
  const std::string str(s);
  char* end = nullptr;
  out = std::strtod(str.c_str(), &end);
  return !str.empty() && end == str.c_str() + str.size();
}

bool parse_u64(std::string_view s, std::uint64_t& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

bool parse_bool(std::string_view s, bool& out) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") {
    out = true;
    return true;
  }
  if (s == "false" || s == "0" || s == "no" || s == "off") {
    out = false;
    return true;
  }
  return false;
}

double rel_error(double a, double b, double scale) {
  return std::abs(a - b) / std::max(std::abs(b), scale);
}

// Statistical checks on fewer samples than this are reported as skipped.
constexpr std::uint64_t kMinStatSamples = 30;

struct Failures {
  std::vector<std::string> list;
  std::vector<std::string> skipped;
  void check(bool ok, const std::string& what) {
    if (!ok) list.push_back(what);
  }
  void check_stat(std::uint64_t n, bool ok, const std::string& what) {
    if (n < kMinStatSamples) {
      skipped.push_back(what);
    } else {
      check(ok, what);
    }
  }
};

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

// Step indices of the checkpoints for n_steps steps of size dt.
std::vector<std::uint64_t> checkpoint_steps(const RunSpec& spec, std::uint64_t n_steps,
                                            double dt) {
  std::vector<double> times = spec.checkpoint_times;
  const double t_end = static_cast<double>(n_steps) * dt;
  if (times.empty()) {
    const std::size_t n = std::max<std::size_t>(spec.n_checkpoints, 1);
    times = n == 1 ? std::vector<double>{t_end}
                   : log_spaced(std::max(dt, t_end / 1000.0), t_end, n);
  }
  std::vector<std::uint64_t> steps;
  for (double t : times) {
    const auto s = static_cast<std::uint64_t>(std::llround(t / dt));
    if (s >= 1 && s <= n_steps) steps.push_back(s);
  }
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  if (steps.empty() || steps.back() != n_steps) steps.push_back(n_steps);
  return steps;
}

Json params_json(const PhysicalParams& p) {
  Json j;
  for (auto name : kPhysicalFieldNames) j[std::string(name)] = field(p, name);
  return j;
}

Json thresholds_json(const CollapseThresholds& th) {
  return Json{{"a", th.a}, {"b", th.b}, {"multiplier", th.multiplier}};
}

Json stats_json(const RunningStats& s) {
  return Json{{"n", s.count()},           {"mean", s.mean()},
              {"se", s.standard_error()}, {"variance", s.variance()},
              {"variance_se", s.variance_standard_error()},
              {"min", s.min()},           {"max", s.max()}};
}

Json chebyshev_json(const ChebyshevReport& r) {
  return Json{{"k", r.k},
              {"bound", r.bound},
              {"empirical_tail", r.empirical_tail},
              {"se", r.standard_error},
              {"n", r.n},
              {"violated", r.violated}};
}

double initial_gamma0(const RunSpec& spec) {
  if (spec.gamma0) return *spec.gamma0;
  return SpinCoefficients::from_probability(spec.p_plus.value_or(0.5)).gamma0();
}

SpinCoefficients initial_coefficients(const RunSpec& spec) {
  if (spec.gamma0) {
    const double g = *spec.gamma0;
    // |c+|^2 = e^{2g} / (1 + e^{2g})
    return SpinCoefficients::from_probability(0.5 * (1.0 + std::tanh(g)));
  }
  return SpinCoefficients::from_probability(spec.p_plus.value_or(0.5));
}

std::uint64_t step_count(double t_end, double dt) {
  const double n = std::llround(t_end / dt);
  if (!(n >= 1.0)) fail(ErrorCode::Domain, "t_end must span at least one step");
  return static_cast<std::uint64_t>(n);
}

Json header_json(const RunSpec& spec, const ResolvedInputs& in) {
  Json j;
  j["experiment"] = std::string(experiment_name(spec.experiment));
  j["params"] = params_json(in.params);
  j["thresholds"] = thresholds_json(in.thresholds);
  if (spec.seed) j["seed"] = *spec.seed;
  return j;
}

// Writers that are closed on success and marked partial on failure.
class Outputs {
 public:
  DelimitedWriter* open(const std::string& path, std::vector<Column> cols) {
    if (path.empty()) return nullptr;
    writers_.push_back(std::make_unique<DelimitedWriter>(path, std::move(cols)));
    return writers_.back().get();
  }
  void abort(const std::string& why) {
    for (auto& w : writers_) w->mark_partial(why);
  }
  void close() {
    for (auto& w : writers_) w->close();
  }

 private:
  std::vector<std::unique_ptr<DelimitedWriter>> writers_;
};

std::vector<double> gaussian_row(double t, const GaussianParams& g) {
  return {t, g.xbar, g.kbar, g.gamma, g.theta, g.alpha.real(), g.alpha.imag()};
}

// ---------------------------------------------------------------------------

RunResult finish(Json summary, Failures& f, const RunSpec& spec) {
  if (!f.skipped.empty()) summary["statistical_checks_skipped"] = f.skipped;
  summary["invariant_failures"] = f.list;
  summary["passed"] = f.list.empty();
  RunResult r;
  r.summary_json = summary.dump(2) + "\n";
  r.passed = f.list.empty();
  r.failures = f.list;
  if (!spec.summary_path.empty()) write_text_file(spec.summary_path, r.summary_json);
  return r;
}

RunResult run_analytic(const RunSpec& spec, const ResolvedInputs& in) {
  const Model model(in.params);
  const auto& dc = model.dc;
  const auto& th = in.thresholds;
  const double T = in.params.T;
  const double g0 = initial_gamma0(spec);
  Failures f;
  Json j = header_json(spec, in);

  j["derived"] = {{"lambda", dc.lambda},
                  {"omega", dc.omega},
                  {"sigma_q", dc.sigma_q},
                  {"sigma_p", dc.sigma_p},
                  {"s_coefficient", effective_time_constant(in.params)}};

  const HittingStats hs = hitting_time_stats(g0, th.b);
  Json collapse = {{"Gamma0", g0}, {"mean_Sbar", hs.mean}, {"var_Sbar", hs.variance}};
  const CollapseProbability cp = collapse_probability(g0, th.b);
  collapse["P_plus"] = cp.p_plus;
  collapse["P_minus"] = cp.p_minus;
  double T_C = std::numeric_limits<double>::quiet_NaN();
  if (in.params.kappa > 0.0) {
    const CollapseTime ct = collapse_time(in.params, th, g0);
    T_C = ct.value;
    collapse["T_C"] = ct.value;
    collapse["T_C_exceeds_T"] = ct.exceeds_T;
    const TimeChange tc = time_change(in.params.t0 + T, model);
    collapse["s_T"] = tc.s;
    collapse["s_T_cubic"] = tc.s_cubic;
    const double s_c = hs.mean + th.multiplier * std::sqrt(hs.variance);
    collapse["s_collapse"] = s_c;
    collapse["t_of_s_collapse"] = inverse_time_change_cubic(s_c, model);
  }
  j["collapse"] = collapse;

  const DeltaProfile profile = DeltaProfile::for_model(model);
  const double t_end = in.params.t0 + T;
  const double var_T = peak_variance(t_end, dc);
  j["pointer"] = {{"t", t_end},
                  {"mean_q", peak_mean_position(t_end, spec.sign, profile, model)},
                  {"var_q", var_T},
                  {"delta", spec.delta},
                  {"chebyshev_bound", chebyshev_outlier_bound(spec.delta, t_end, dc)}};

  const Distance d = distance_closed_form(t_end, model);
  j["distance"] = {{"X_T", d.X},
                   {"K_T", d.K},
                   {"first_order", distance_first_order(t_end, model)},
                   {"deficit", distance_deficit(t_end, model)},
                   {"relative_deficit_bound", 2.0 * dc.omega * T}};

  const StabilityBound sb = stability_probability(th.a, th.b);
  const StabilityBound ex = exact_stability_probability(th.a, th.b);
  j["stability"] = {{"Q_plus_bound", sb.bound},
                    {"bound_deficit", sb.deficit},
                    {"Q_plus_exact", ex.bound},
                    {"exact_deficit", ex.deficit}};

  TwoComponentState probe = make_superposition(SpinCoefficients::from_probability(0.5), dc);
  const PosteriorState ps = posterior_state(th.a, probe);
  j["posterior"] = {{"Gamma", th.a},
                    {"epsilon", ps.epsilon},
                    {"suppressed_weight", ps.suppressed_weight},
                    {"quality", ps.quality}};

  if (std::isfinite(T_C)) {
    const double tc = in.params.t0 + T_C;
    const DriftBounds db = post_collapse_drift_bounds(T_C, T_C, model, th.a);
    const DriftPolynomial poly = post_collapse_drift_polynomial(T_C, model, th.a);
    const Distance dtc = distance_closed_form(tc, model);
    const SumCoords mean_sc{aux_mean(tc, +1, model), 0.0};
    const PeakPair peaks = reconstruct_peaks(dtc.X, mean_sc);
    const PeakPair final_peaks = reconstruct_peaks(d.X, SumCoords{distance_deficit(t_end, model), 0.0});
    j["kinematics"] = {{"T_C", T_C},
                       {"X_T_C", dtc.X},
                       {"aux_mean_T_C", aux_mean(tc, +1, model)},
                       {"aux_variance_T_C", aux_variance(tc, dc)},
                       {"x_plus_T_C", peaks.x_plus},
                       {"x_minus_T_C", peaks.x_minus},
                       {"x_plus_T", final_peaks.x_plus},
                       {"K_gap_bound_T_C", db.K_gap},
                       {"X_gap_bound_T_C", db.X_gap},
                       {"X_gap_polynomial", {poly.c0, poly.c1, poly.c2}}};
    f.check(std::isfinite(db.K_gap) && std::isfinite(db.X_gap), "drift bounds are finite");
  }

  f.check(std::isfinite(dc.omega) && std::isfinite(dc.sigma_q) && std::isfinite(dc.sigma_p),
          "derived constants are finite");
  f.check(cp.p_plus + cp.p_minus == 1.0, "P_plus + P_minus == 1");
  f.check(aux_variance(t_end, dc) == 4.0 * peak_variance(t_end, dc),
          "aux variance is four times the peak variance");
  f.check(sb.deficit >= ex.deficit * (1.0 - 1e-12), "stability bound does not exceed exact Q_plus");
  f.check(d.X <= distance_first_order(t_end, model) * (1.0 + 1e-12),
          "distance stays below the first-order value");
  return finish(j, f, spec);
}

// ---------------------------------------------------------------------------

struct EigenPath {
  std::vector<double> q;  // <q> at checkpoints
  std::vector<double> k;
  bool alpha_stationary = true;
};

RunResult run_eigenstate(const RunSpec& spec, const ResolvedInputs& in) {
  const Model model(in.params);
  const auto& dc = model.dc;
  const DeltaProfile profile = DeltaProfile::for_model(model);
  const double dt = spec.time_step();
  const double t_end = spec.t_end.value_or(in.params.t0 + in.params.T);
  const std::uint64_t n_steps = step_count(t_end, dt);
  const auto cps = checkpoint_steps(spec, n_steps, dt);
  const std::uint64_t n_paths = spec.n_paths.value_or(10000);
  const bool dimless = in.params.hbar == 1.0;

  Outputs outputs;
  DelimitedWriter* dump = outputs.open(spec.dump_path, trajectory_columns(false, dimless));
  try {
    const EnsembleOptions eo{n_paths, *spec.seed, spec.workers};
    const GaussianParams start = stationary_gaussian(0.0, 0.0, dc);
    const Complex as = stationary_alpha(dc);
    auto paths = run_paths(eo, [&](std::uint64_t, TrajectoryRng& rng) {
      EigenPath p;
      p.q.reserve(cps.size());
      GaussianParams g = start;
      std::size_t c = 0;
      for (std::uint64_t n = 0; n < n_steps; ++n) {
        const double t = static_cast<double>(n) * dt;
        g = step_eigenstate(g, spec.sign, t, dt, rng.increment(dt), profile, model);
        if (c < cps.size() && n + 1 == cps[c]) {
          p.q.push_back(g.xbar);
          p.k.push_back(g.kbar);
          ++c;
        }
      }
      p.alpha_stationary = g.alpha == as;
      return p;
    });

    // Dumped paths are recomputed serially: cheap and keeps file order fixed.
    if (dump != nullptr) {
      for (std::uint64_t idx = 0; idx < std::min(spec.dump_paths, n_paths); ++idx) {
        TrajectoryRng rng(*spec.seed, idx);
        GaussianParams g = start;
        dump->comment("path " + std::to_string(idx));
        dump->row(gaussian_row(0.0, g));
        for (std::uint64_t n = 0; n < n_steps; ++n) {
          const double t = static_cast<double>(n) * dt;
          g = step_eigenstate(g, spec.sign, t, dt, rng.increment(dt), profile, model);
          dump->row(gaussian_row(t + dt, g));
        }
      }
    }

    Failures f;
    Json j = header_json(spec, in);
    j["n_paths"] = n_paths;
    j["dt"] = dt;
    j["sign"] = spec.sign;
    Json table = Json::array();
    double worst_mean_z = 0.0, worst_var_z = 0.0;
    bool alpha_ok = true;
    for (const auto& p : paths) alpha_ok = alpha_ok && p.alpha_stationary;
    std::vector<double> final_q;
    final_q.reserve(n_paths);
    for (std::size_t c = 0; c < cps.size(); ++c) {
      RunningStats rs;
      for (const auto& p : paths) rs.add(p.q[c]);
      const double t = static_cast<double>(cps[c]) * dt;
      const double m_th = peak_mean_position(t, spec.sign, profile, model);
      const double v_th = peak_variance(t, dc);
      const double zm = std::abs(rs.mean() - m_th) / std::max(rs.standard_error(), 1e-300);
      const double zv =
          std::abs(rs.variance() - v_th) / std::max(rs.variance_standard_error(), 1e-300);
      worst_mean_z = std::max(worst_mean_z, zm);
      worst_var_z = std::max(worst_var_z, zv);
      table.push_back({{"t", t},
                       {"mean_q", rs.mean()},
                       {"mean_q_se", rs.standard_error()},
                       {"mean_q_theory", m_th},
                       {"var_q", rs.variance()},
                       {"var_q_se", rs.variance_standard_error()},
                       {"var_q_theory", v_th},
                       {"var_q_rel_error", std::abs(rs.variance() - v_th) / v_th}});
    }
    for (const auto& p : paths) final_q.push_back(p.q.back());
    const double m_end = peak_mean_position(t_end, spec.sign, profile, model);
    const double sd_end = std::sqrt(peak_variance(t_end, dc));
    Json cheb = Json::array();
    for (double k : {2.0, 3.0}) {
      const ChebyshevReport r = chebyshev_check(final_q, {m_end, sd_end, k});
      cheb.push_back(chebyshev_json(r));
      f.check_stat(r.n, !r.violated, "Chebyshev tail at k=" + fmt(k) + " within bound");
    }
    j["checkpoints"] = table;
    j["chebyshev"] = cheb;
    j["worst_mean_z"] = worst_mean_z;
    j["worst_var_z"] = worst_var_z;
    f.check(alpha_ok, "width stays at its stationary value");
    f.check_stat(n_paths, worst_mean_z <= kZLimit,
                 "<q> mean within 5 SE of theory at every checkpoint");
    f.check_stat(n_paths, worst_var_z <= kZLimit,
                 "<q> variance within 5 SE of theory at every checkpoint");
    outputs.close();
    return finish(j, f, spec);
  } catch (const std::exception& e) {
    outputs.abort(e.what());
    throw;
  }
}

// ---------------------------------------------------------------------------

struct SuperPath {
  int sign = 0;
  double t_hit = std::numeric_limits<double>::quiet_NaN();
  double s_hit = std::numeric_limits<double>::quiet_NaN();
  double post_min = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t bracket_violations = 0;
  double gamma_dev = 0.0;
  double xtilde_dev = 0.0;
  std::vector<double> gamma, xtilde, x_plus, x_minus;
};

struct SuperStep {
  TwoComponentState st;
  SumCoords sc, up, lo;
  double g_phys = 0.0;
  bool x_nonneg = true;
};

RunResult run_superposition(const RunSpec& spec, const ResolvedInputs& in) {
  const Model model(in.params);
  const auto& dc = model.dc;
  const auto& th = in.thresholds;
  const DeltaProfile profile = DeltaProfile::for_model(model);
  const double dt = spec.time_step();
  const double t_end = spec.t_end.value_or(in.params.t0 + in.params.T);
  const std::uint64_t n_steps = step_count(t_end, dt);
  const auto cps = checkpoint_steps(spec, n_steps, dt);
  const std::uint64_t n_paths = spec.n_paths.value_or(500);
  const SpinCoefficients coeffs = initial_coefficients(spec);
  const double g0 = coeffs.gamma0();
  const bool dimless = in.params.hbar == 1.0;

  auto init = [&]() {
    SuperStep s;
    s.st = make_superposition(coeffs, dc);
    s.g_phys = s.st.weight_gap();
    return s;
  };
  // One shared increment drives the components, the weight gap, the sum
  // coordinates and both auxiliary systems.
  auto advance = [&](SuperStep& s, double t, double dW, SuperPath& p) {
    const double G = s.st.weight_gap();
    const double X = s.st.distance();
    s.sc = step_sum_coords(s.sc, G, X, dt, dW, dc);
    s.up = step_aux_linear(+1, s.up, X, dt, dW, dc);
    s.lo = step_aux_linear(-1, s.lo, X, dt, dW, dc);
    s.g_phys = gamma_step_physical(s.g_phys, X, dt, dW, dc);
    s.st = step_superposition(s.st, t, dt, dW, profile, model);
    s.x_nonneg = s.x_nonneg && X >= 0.0;
    if (s.x_nonneg) {
      const bool ok = s.lo.Xtilde <= s.sc.Xtilde && s.sc.Xtilde <= s.up.Xtilde &&
                      s.lo.Ktilde <= s.sc.Ktilde && s.sc.Ktilde <= s.up.Ktilde;
      if (!ok) ++p.bracket_violations;
    }
    const double Gn = s.st.weight_gap();
    p.gamma_dev = std::max(p.gamma_dev, std::abs(s.g_phys - Gn) / (1.0 + std::abs(Gn)));
    const double tt = t + dt;
    const double scale = model.hbar_kappa() * std::clamp(tt - in.params.t0, 0.0, in.params.T) +
                         std::sqrt(aux_variance(tt, dc)) + dc.sigma_q;
    const double xt = s.st.plus.xbar + s.st.minus.xbar;
    p.xtilde_dev = std::max(p.xtilde_dev, std::abs(xt - s.sc.Xtilde) / scale);
  };

  Outputs outputs;
  DelimitedWriter* dump = outputs.open(spec.dump_path, trajectory_columns(true, dimless));
  try {
    const EnsembleOptions eo{n_paths, *spec.seed, spec.workers};
    auto paths = run_paths(eo, [&](std::uint64_t, TrajectoryRng& rng) {
      SuperPath p;
      SuperStep s = init();
      std::size_t c = 0;
      for (std::uint64_t n = 0; n < n_steps; ++n) {
        const double t = static_cast<double>(n) * dt;
        advance(s, t, rng.increment(dt), p);
        const double G = s.st.weight_gap();
        if (p.sign == 0 && std::abs(G) >= th.b) {
          p.sign = G > 0.0 ? 1 : -1;
          p.t_hit = t + dt;
          p.post_min = p.sign * G;
        } else if (p.sign != 0) {
          p.post_min = std::min(p.post_min, p.sign * G);
        }
        if (c < cps.size() && n + 1 == cps[c]) {
          p.gamma.push_back(G);
          p.xtilde.push_back(s.sc.Xtilde);
          p.x_plus.push_back(s.st.plus.xbar);
          p.x_minus.push_back(s.st.minus.xbar);
          ++c;
        }
      }
      if (p.sign != 0) p.s_hit = time_change(p.t_hit, model).s;
      return p;
    });

    if (dump != nullptr) {
      for (std::uint64_t idx = 0; idx < std::min(spec.dump_paths, n_paths); ++idx) {
        TrajectoryRng rng(*spec.seed, idx);
        SuperPath scratch;
        SuperStep s = init();
        auto row = [&](double t) {
          std::vector<double> r = gaussian_row(t, s.st.plus);
          const PeakPair pk = reconstruct_peaks(s.st.distance(), s.sc);
          r.insert(r.end(), {s.st.weight_gap(), s.sc.Xtilde, s.sc.Ktilde, pk.x_plus, pk.x_minus});
          dump->row(r);
        };
        dump->comment("path " + std::to_string(idx));
        row(0.0);
        for (std::uint64_t n = 0; n < n_steps; ++n) {
          const double t = static_cast<double>(n) * dt;
          advance(s, t, rng.increment(dt), scratch);
          row(t + dt);
        }
      }
    }

    Failures f;
    Json j = header_json(spec, in);
    BinomialCounter plus, returned;
    RunningStats sbar;
    std::uint64_t no_hit = 0, violations = 0;
    double gamma_dev = 0.0, xtilde_dev = 0.0;
    std::vector<double> sbar_samples;
    for (const auto& p : paths) {
      violations += p.bracket_violations;
      gamma_dev = std::max(gamma_dev, p.gamma_dev);
      xtilde_dev = std::max(xtilde_dev, p.xtilde_dev);
      if (p.sign == 0) {
        ++no_hit;
        continue;
      }
      plus.add(p.sign > 0);
      returned.add(p.post_min < th.a);
      sbar.add(p.s_hit);
      sbar_samples.push_back(p.s_hit);
    }
    const CollapseProbability cp = collapse_probability(g0, th.b);
    const HittingStats hs = hitting_time_stats(g0, th.b);
    const double se_th = plus.standard_error_at(cp.p_plus);
    j["n_paths"] = n_paths;
    j["seed"] = *spec.seed;
    j["b"] = th.b;
    j["a"] = th.a;
    j["Gamma0"] = g0;
    j["P_plus_hat"] = plus.fraction();
    j["SE"] = plus.standard_error();
    j["mean_Sbar"] = sbar.mean();
    j["var_Sbar"] = sbar.variance();
    j["T_C"] = in.params.kappa > 0.0 ? collapse_time(in.params, th, g0).value
                                     : std::numeric_limits<double>::quiet_NaN();
    j["dt"] = dt;
    j["P_plus_theory"] = cp.p_plus;
    j["mean_Sbar_theory"] = hs.mean;
    j["var_Sbar_theory"] = hs.variance;
    j["Sbar"] = stats_json(sbar);
    j["no_hit"] = no_hit;
    j["returned_below_a"] = returned.successes;
    j["bracket_violations"] = violations;
    j["max_gamma_deviation"] = gamma_dev;
    j["max_xtilde_deviation"] = xtilde_dev;

    Json table = Json::array();
    for (std::size_t c = 0; c < cps.size(); ++c) {
      RunningStats g, xt, xp, xm;
      for (const auto& p : paths) {
        g.add(p.gamma[c]);
        xt.add(p.xtilde[c]);
        xp.add(p.x_plus[c]);
        xm.add(p.x_minus[c]);
      }
      const double t = static_cast<double>(cps[c]) * dt;
      table.push_back({{"t", t},
                       {"X", distance_closed_form(t, model).X},
                       {"Gamma", stats_json(g)},
                       {"Xtilde", stats_json(xt)},
                       {"x_plus", stats_json(xp)},
                       {"x_minus", stats_json(xm)}});
    }
    j["checkpoints"] = table;
    if (sbar.count() > 1) {
      Json cheb = Json::array();
      for (double k : {2.0, 3.0}) {
        const ChebyshevReport r = chebyshev_check(sbar_samples, {hs.mean, std::sqrt(hs.variance), k});
        cheb.push_back(chebyshev_json(r));
        f.check_stat(r.n, !r.violated, "Chebyshev tail of Sbar at k=" + fmt(k) + " within bound");
      }
      j["chebyshev"] = cheb;
    }

    f.check(violations == 0, "sum coordinates bracketed by the auxiliary systems");
    f.check(gamma_dev <= 1e-8, "component weight gap matches the weight-gap SDE");
    f.check(xtilde_dev <= 1e-8, "component sum matches the sum-coordinate SDE");
    if (plus.trials > 0 && no_hit == 0) {
      f.check_stat(plus.trials, std::abs(plus.fraction() - cp.p_plus) <= kZLimit * se_th + 1e-15,
                   "outcome fraction within 5 SE of the hitting probability");
    }
    outputs.close();
    return finish(j, f, spec);
  } catch (const std::exception& e) {
    outputs.abort(e.what());
    throw;
  }
}

// ---------------------------------------------------------------------------

RunResult run_reduced(const RunSpec& spec, const ResolvedInputs& in) {
  const auto& th = in.thresholds;
  const double g0 = initial_gamma0(spec);
  const std::uint64_t n_paths = spec.n_paths.value_or(100000);
  ReducedOptions ro;
  ro.ds = spec.ds;
  ro.bridge = spec.bridge;
  ro.window = spec.window;
  ro.max_steps = spec.max_steps;
  ro.validate();
  th.validate();
  if (!(std::abs(g0) < th.b)) fail(ErrorCode::Domain, "initial weight gap must satisfy |Gamma0| < b");

  Outputs outputs;
  DelimitedWriter* dump = outputs.open(
      spec.dump_path, {{"path", "1"}, {"sign", "1"}, {"s_hit", "1"}, {"gamma_at_hit", "1"},
                       {"post_min", "1"}, {"observed_window", "1"}});
  try {
    const EnsembleOptions eo{n_paths, *spec.seed, spec.workers};
    auto outcomes = run_paths(eo, [&](std::uint64_t, TrajectoryRng& rng) {
      return simulate_gamma_reduced(g0, th, ro, rng);
    });
    if (dump != nullptr) {
      for (std::uint64_t i = 0; i < std::min(spec.dump_paths, n_paths); ++i) {
        const auto& o = outcomes[i];
        dump->row({static_cast<double>(i), static_cast<double>(o.sign), o.s_hit, o.gamma_at_hit,
                   o.post_min, o.observed_window});
      }
    }

    Failures f;
    Json j = header_json(spec, in);
    BinomialCounter plus, returned;
    RunningStats sbar, post_min;
    std::vector<double> samples;
    samples.reserve(n_paths);
    std::uint64_t no_hit = 0;
    for (const auto& o : outcomes) {
      if (!o.hit) {
        ++no_hit;
        continue;
      }
      plus.add(o.sign > 0);
      sbar.add(o.s_hit);
      samples.push_back(o.s_hit);
      if (ro.window > 0.0) {
        returned.add(o.returned);
        post_min.add(o.post_min);
      }
    }
    const CollapseProbability cp = collapse_probability(g0, th.b);
    const HittingStats hs = hitting_time_stats(g0, th.b);
    const double se_th = plus.standard_error_at(cp.p_plus);
    j["n_paths"] = n_paths;
    j["seed"] = *spec.seed;
    j["b"] = th.b;
    j["a"] = th.a;
    j["Gamma0"] = g0;
    j["P_plus_hat"] = plus.fraction();
    j["SE"] = plus.standard_error();
    j["mean_Sbar"] = sbar.mean();
    j["var_Sbar"] = sbar.variance();
    j["T_C"] = in.params.kappa > 0.0 ? collapse_time(in.params, th, g0).value
                                     : std::numeric_limits<double>::quiet_NaN();
    j["ds"] = ro.ds;
    j["bridge"] = ro.bridge;
    j["P_plus_theory"] = cp.p_plus;
    j["P_plus_z"] = (plus.fraction() - cp.p_plus) / std::max(se_th, 1e-300);
    j["mean_Sbar_se"] = sbar.standard_error();
    j["mean_Sbar_theory"] = hs.mean;
    j["mean_Sbar_z"] = (sbar.mean() - hs.mean) / std::max(sbar.standard_error(), 1e-300);
    j["var_Sbar_se"] = sbar.variance_standard_error();
    j["var_Sbar_theory"] = hs.variance;
    j["var_Sbar_z"] =
        (sbar.variance() - hs.variance) / std::max(sbar.variance_standard_error(), 1e-300);
    j["no_hit"] = no_hit;
    if (in.params.kappa > 0.0 && sbar.count() > 0) {
      j["t_of_mean_Sbar"] = inverse_time_change_cubic(sbar.mean(), Model(in.params));
    }
    Json cheb = Json::array();
    for (double k : {2.0, 3.0}) {
      const ChebyshevReport r = chebyshev_check(samples, {hs.mean, std::sqrt(hs.variance), k});
      cheb.push_back(chebyshev_json(r));
      f.check_stat(r.n, !r.violated, "Chebyshev tail of Sbar at k=" + fmt(k) + " within bound");
    }
    j["chebyshev"] = cheb;
    if (ro.window > 0.0) {
      const StabilityBound sb = stability_probability(th.a, th.b);
      const StabilityBound ex = exact_stability_probability(th.a, th.b);
      const double allowed =
          sb.deficit + 3.0 * returned.standard_error_at(std::min(sb.deficit, 1.0));
      j["stability"] = {{"window", ro.window},
                        {"returned", returned.successes},
                        {"return_fraction", returned.fraction()},
                        {"return_se", returned.standard_error()},
                        {"bound_deficit", sb.deficit},
                        {"exact_deficit", ex.deficit},
                        {"post_min", stats_json(post_min)}};
      f.check_stat(returned.trials, returned.fraction() <= allowed,
                   "return fraction does not contradict the stability bound");
    }
    f.check(no_hit == 0, "every trajectory reached the confirmation level");
    f.check_stat(plus.trials, std::abs(plus.fraction() - cp.p_plus) <= kZLimit * se_th + 1e-15,
                 "outcome fraction within 5 SE of the hitting probability");
    f.check_stat(sbar.count(),
                 std::abs(sbar.mean() - hs.mean) <= kZLimit * sbar.standard_error() + 1e-12,
                 "mean hitting time within 5 SE of theory");
    outputs.close();
    return finish(j, f, spec);
  } catch (const std::exception& e) {
    outputs.abort(e.what());
    throw;
  }
}

// ---------------------------------------------------------------------------

OracleConfig oracle_config(const RunSpec& spec, const PhysicalParams& p) {
  OracleConfig cfg;
  cfg.dt = spec.time_step();
  cfg.lattice = {spec.x_min, spec.x_max, spec.grid_n};
  cfg.params = p;
  cfg.scheme = spec.scheme;
  cfg.validate();
  return cfg;
}

std::vector<Column> moment_columns(bool dimless) {
  std::vector<Column> c = {{"t", "s"},       {"mean_q", "m"},  {"mean_p", "kg m/s"},
                           {"var_q", "m^2"}, {"w_plus", "1"},  {"w_minus", "1"},
                           {"gamma_hat", "1"}, {"norm_sq", "1"}};
  if (dimless) {
    for (auto& col : c) {
      if (col.unit != "1") col.unit = "reduced";
    }
  }
  return c;
}

std::vector<double> moment_row(double t, const GridMoments& m) {
  return {t, m.mean_q, m.mean_p, m.var_q, m.w_plus, m.w_minus, m.gamma_hat, m.norm_sq};
}

// Observer hooks for the first path of a grid run.
struct GridTrace {
  DelimitedWriter* moments = nullptr;
  GridState* final_state = nullptr;
};

struct EigenCompare {
  double q_err = 0.0, var_err = 0.0, p_err = 0.0;
};

EigenCompare compare_eigenstate_path(const OracleConfig& cfg, int sign, std::uint64_t n_steps,
                                     const std::vector<std::uint64_t>& cps, TrajectoryRng& rng,
                                     const GridTrace& trace) {
  GridSolver solver(cfg);
  const Model& model = solver.model();
  const auto& dc = model.dc;
  const DeltaProfile profile = DeltaProfile::for_model(model);
  GaussianParams g = stationary_gaussian(0.0, 0.0, dc);
  GridState gs = make_grid_eigenstate(cfg.lattice, g, sign);
  solver.check_boundary(gs);
  EigenCompare e;
  std::size_t c = 0;
  const double dt = cfg.dt;
  for (std::uint64_t n = 0; n < n_steps; ++n) {
    const double t = static_cast<double>(n) * dt;
    const double dW = rng.increment(dt);
    g = step_eigenstate(g, sign, t, dt, dW, profile, model);
    solver.step_nonlinear(gs, dW);
    const bool at_cp = c < cps.size() && n + 1 == cps[c];
    if (at_cp || trace.moments != nullptr) {
      const GridMoments m = solver.measure_moments(gs);
      if (trace.moments != nullptr) trace.moments->row(moment_row(t + dt, m));
      if (at_cp) {
        e.q_err = std::max(e.q_err, rel_error(m.mean_q, g.xbar, dc.sigma_q));
        e.var_err = std::max(e.var_err, rel_error(m.var_q, 0.25 / g.alpha.real(),
                                                  dc.sigma_q * dc.sigma_q));
        e.p_err = std::max(e.p_err,
                           rel_error(m.mean_p, model.params.hbar * g.kbar, dc.sigma_p));
        ++c;
      }
    }
  }
  if (trace.final_state != nullptr) *trace.final_state = gs;
  return e;
}

struct FreeCompare {
  double norm_err = 0.0, phase_err = 0.0;            // corrected equations
  double norm_err_bare = 0.0, phase_err_bare = 0.0;  // without correction terms
};

FreeCompare compare_free_path(const OracleConfig& cfg_in, std::uint64_t n_steps,
                              const std::vector<std::uint64_t>& cps, TrajectoryRng& rng,
                              const GridTrace& trace) {
  OracleConfig cfg = cfg_in;
  cfg.params.kappa = 0.0;
  GridSolver solver(cfg);
  const Model& model = solver.model();
  const auto& dc = model.dc;
  GaussianParams g = stationary_gaussian(kFreeX0 * dc.sigma_q, kFreeK0 / dc.sigma_q, dc);
  GaussianParams bare = g;
  GridState gs = make_grid_eigenstate(cfg.lattice, g, +1);
  solver.check_boundary(gs);
  FreeCompare e;
  std::size_t c = 0;
  const double dt = cfg.dt;
  auto errors = [&](const GaussianParams& a, double& ne, double& pe) {
    const double n_ans = gaussian_norm_sq(a);
    ne = std::max(ne, std::abs(n_ans / gs.norm_sq - 1.0));
    pe = std::max(pe, std::abs(std::arg(grid_overlap(a, gs.psi_plus, gs.lattice))));
  };
  for (std::uint64_t n = 0; n < n_steps; ++n) {
    const double dxi = rng.increment(dt);
    g = free_particle_step(g, dt, dxi, Measure::Linear, model, true);
    bare = free_particle_step(bare, dt, dxi, Measure::Linear, model, false);
    solver.step_linear(gs, dxi);
    if (trace.moments != nullptr) {
      trace.moments->row(moment_row(static_cast<double>(n + 1) * dt, solver.measure_moments(gs)));
    }
    if (c < cps.size() && n + 1 == cps[c]) {
      errors(g, e.norm_err, e.phase_err);
      errors(bare, e.norm_err_bare, e.phase_err_bare);
      ++c;
    }
  }
  if (trace.final_state != nullptr) *trace.final_state = gs;
  return e;
}

struct GridBornPath {
  int sign = 0;
  double t_hit = std::numeric_limits<double>::quiet_NaN();
  double gamma_dev = 0.0;
};

GridBornPath grid_superposition_path(const OracleConfig& cfg, const SpinCoefficients& coeffs,
                                     double b, std::uint64_t n_steps, TrajectoryRng& rng,
                                     const GridTrace& trace) {
  GridSolver solver(cfg);
  const Model& model = solver.model();
  const DeltaProfile profile = DeltaProfile::for_model(model);
  TwoComponentState st = make_superposition(coeffs, model.dc);
  GridState gs = make_grid_state(cfg.lattice, st.plus, st.minus);
  solver.check_boundary(gs);
  GridBornPath p;
  const double dt = cfg.dt;
  for (std::uint64_t n = 0; n < n_steps; ++n) {
    const double t = static_cast<double>(n) * dt;
    const double dW = rng.increment(dt);
    st = step_superposition(st, t, dt, dW, profile, model);
    solver.step_nonlinear(gs, dW);
    if (trace.moments != nullptr) trace.moments->row(moment_row(t + dt, solver.measure_moments(gs)));
    const auto [wp, wm] = branch_weights(gs);
    const double gh = weight_gap_estimate(wp, wm);
    const double ga = st.weight_gap();
    if (std::isfinite(gh)) {
      p.gamma_dev = std::max(p.gamma_dev, std::abs(gh - ga) / std::max(1.0, std::abs(ga)));
    }
    if (std::abs(gh) >= b) {
      p.sign = gh > 0.0 ? 1 : -1;
      p.t_hit = t + dt;
      break;
    }
  }
  if (trace.final_state != nullptr) *trace.final_state = gs;
  return p;
}

struct LinearPath {
  std::vector<double> norm_sq;
  double mean_q = 0.0;
};

LinearPath grid_linear_path(const OracleConfig& cfg, const SpinCoefficients& coeffs,
                            std::uint64_t n_steps, const std::vector<std::uint64_t>& cps,
                            TrajectoryRng& rng, const GridTrace& trace) {
  GridSolver solver(cfg);
  const Model& model = solver.model();
  TwoComponentState st = make_superposition(coeffs, model.dc);
  GridState gs = make_grid_state(cfg.lattice, st.plus, st.minus);
  solver.check_boundary(gs);
  LinearPath p;
  std::size_t c = 0;
  const double dt = cfg.dt;
  for (std::uint64_t n = 0; n < n_steps; ++n) {
    solver.step_linear(gs, rng.increment(dt));
    if (trace.moments != nullptr) {
      trace.moments->row(moment_row(static_cast<double>(n + 1) * dt, solver.measure_moments(gs)));
    }
    if (c < cps.size() && n + 1 == cps[c]) {
      p.norm_sq.push_back(gs.norm_sq);
      ++c;
    }
  }
  p.mean_q = solver.measure_moments(gs).mean_q;
  if (trace.final_state != nullptr) *trace.final_state = gs;
  return p;
}

// Runs `fn(idx, rng, trace)` over the ensemble; path 0 is replayed with the
// trace attached when moment or snapshot output is requested.
template <class Fn>
auto grid_ensemble(const RunSpec& spec, std::uint64_t n_paths, Outputs& outputs, bool dimless,
                   Fn&& fn) {
  // Path 0 is replayed with tracing first, so a failing run leaves a marked
  // partial moment file behind.
  if (!spec.dump_path.empty() || !spec.snapshot_path.empty()) {
    GridTrace trace;
    trace.moments = outputs.open(spec.dump_path, moment_columns(dimless));
    GridState final_state;
    if (!spec.snapshot_path.empty()) trace.final_state = &final_state;
    TrajectoryRng rng(*spec.seed, 0);
    fn(0, rng, trace);
    if (!spec.snapshot_path.empty()) write_snapshot(spec.snapshot_path, final_state);
  }
  const EnsembleOptions eo{n_paths, *spec.seed, spec.workers};
  return run_paths(eo, [&](std::uint64_t idx, TrajectoryRng& rng) {
    return fn(idx, rng, GridTrace{});
  });
}

std::string_view grid_mode_name(GridMode m) {
  switch (m) {
    case GridMode::Eigenstate: return "eigenstate";
    case GridMode::Superposition: return "superposition";
    case GridMode::Linear: return "linear";
    case GridMode::Free: return "free";
  }
  return "eigenstate";
}

Json eigen_summary(const std::vector<EigenCompare>& rs, Failures& f, double tol) {
  EigenCompare w;
  for (const auto& r : rs) {
    w.q_err = std::max(w.q_err, r.q_err);
    w.var_err = std::max(w.var_err, r.var_err);
    w.p_err = std::max(w.p_err, r.p_err);
  }
  f.check(w.q_err <= tol, "grid <q> tracks the ansatz to " + fmt(tol));
  f.check(w.var_err <= tol, "grid Var q tracks the ansatz to " + fmt(tol));
  f.check(w.p_err <= tol, "grid <p> tracks the ansatz to " + fmt(tol));
  return {{"max_rel_error_mean_q", w.q_err},
          {"max_rel_error_var_q", w.var_err},
          {"max_rel_error_mean_p", w.p_err},
          {"tolerance", tol}};
}

Json free_summary(const std::vector<FreeCompare>& rs, Failures& f, double tol) {
  FreeCompare w;
  for (const auto& r : rs) {
    w.norm_err = std::max(w.norm_err, r.norm_err);
    w.phase_err = std::max(w.phase_err, r.phase_err);
    w.norm_err_bare = std::max(w.norm_err_bare, r.norm_err_bare);
    w.phase_err_bare = std::max(w.phase_err_bare, r.phase_err_bare);
  }
  const double resid = std::max(w.norm_err, w.phase_err);
  const double bare = std::max(w.norm_err_bare, w.phase_err_bare);
  f.check(resid <= tol, "corrected free-particle norm and phase match the grid to " + fmt(tol));
  f.check(bare > 10.0 * resid, "omitting the correction terms gives a >10x larger discrepancy");
  return {{"norm_rel_error", w.norm_err},
          {"phase_error", w.phase_err},
          {"norm_rel_error_uncorrected", w.norm_err_bare},
          {"phase_error_uncorrected", w.phase_err_bare},
          {"discrepancy_ratio", bare / std::max(resid, 1e-300)},
          {"tolerance", tol}};
}

constexpr double kGridTolerance = 1e-3;

RunResult run_grid(const RunSpec& spec, const ResolvedInputs& in) {
  const OracleConfig cfg = oracle_config(spec, in.params);
  const Model model(in.params);
  const double dt = spec.time_step();
  const bool free = spec.grid_mode == GridMode::Free;
  const double t_end = spec.t_end.value_or(free ? 0.1 : in.params.t0 + in.params.T);
  const std::uint64_t n_steps = step_count(t_end, dt);
  const auto cps = checkpoint_steps(spec, n_steps, dt);
  const std::uint64_t n_paths = spec.n_paths.value_or(100);
  const bool dimless = in.params.hbar == 1.0;
  const auto& th = in.thresholds;

  Outputs outputs;
  try {
    Failures f;
    Json j = header_json(spec, in);
    j["grid_mode"] = std::string(grid_mode_name(spec.grid_mode));
    j["n_paths"] = n_paths;
    j["dt"] = dt;
    j["lattice"] = {{"x_min", spec.x_min}, {"x_max", spec.x_max}, {"n", spec.grid_n}};
    j["scheme"] = spec.scheme == Scheme::SplitStep ? "split-step" : "finite-difference";

    switch (spec.grid_mode) {
      case GridMode::Eigenstate: {
        auto rs = grid_ensemble(spec, n_paths, outputs, dimless,
                                [&](std::uint64_t, TrajectoryRng& rng, const GridTrace& tr) {
                                  return compare_eigenstate_path(cfg, spec.sign, n_steps, cps,
                                                                 rng, tr);
                                });
        j["eigenstate"] = eigen_summary(rs, f, kGridTolerance);
        break;
      }
      case GridMode::Free: {
        auto rs = grid_ensemble(spec, n_paths, outputs, dimless,
                                [&](std::uint64_t, TrajectoryRng& rng, const GridTrace& tr) {
                                  return compare_free_path(cfg, n_steps, cps, rng, tr);
                                });
        j["free"] = free_summary(rs, f, kGridTolerance);
        break;
      }
      case GridMode::Superposition: {
        const SpinCoefficients coeffs = initial_coefficients(spec);
        const double g0 = coeffs.gamma0();
        auto rs = grid_ensemble(spec, n_paths, outputs, dimless,
                                [&](std::uint64_t, TrajectoryRng& rng, const GridTrace& tr) {
                                  return grid_superposition_path(cfg, coeffs, th.b, n_steps, rng,
                                                                 tr);
                                });
        BinomialCounter plus;
        std::uint64_t no_hit = 0;
        double gdev = 0.0;
        RunningStats t_hit;
        for (const auto& r : rs) {
          gdev = std::max(gdev, r.gamma_dev);
          if (r.sign == 0) {
            ++no_hit;
            continue;
          }
          plus.add(r.sign > 0);
          t_hit.add(r.t_hit);
        }
        const CollapseProbability cp = collapse_probability(g0, th.b);
        const double se_th = plus.standard_error_at(cp.p_plus);
        j["Gamma0"] = g0;
        j["b"] = th.b;
        j["P_plus_hat"] = plus.fraction();
        j["SE"] = plus.standard_error();
        j["P_plus_theory"] = cp.p_plus;
        j["P_plus_z"] = (plus.fraction() - cp.p_plus) / std::max(se_th, 1e-300);
        j["no_hit"] = no_hit;
        j["t_hit"] = stats_json(t_hit);
        j["max_gamma_deviation"] = gdev;
        if (no_hit == 0) {
          f.check_stat(plus.trials, std::abs(plus.fraction() - cp.p_plus) <= kZLimit * se_th,
                       "grid outcome fraction within 5 SE of the hitting probability");
        }
        break;
      }
      case GridMode::Linear: {
        const SpinCoefficients coeffs = initial_coefficients(spec);
        auto rs = grid_ensemble(spec, n_paths, outputs, dimless,
                                [&](std::uint64_t, TrajectoryRng& rng, const GridTrace& tr) {
                                  return grid_linear_path(cfg, coeffs, n_steps, cps, rng, tr);
                                });
        Json table = Json::array();
        double worst_z = 0.0;
        for (std::size_t c = 0; c < cps.size(); ++c) {
          RunningStats s;
          for (const auto& r : rs) s.add(r.norm_sq[c]);
          const double z = std::abs(s.mean() - 1.0) / std::max(s.standard_error(), 1e-300);
          worst_z = std::max(worst_z, z);
          table.push_back({{"t", static_cast<double>(cps[c]) * dt},
                           {"mean_norm_sq", s.mean()},
                           {"se", s.standard_error()},
                           {"z", z}});
        }
        j["martingale"] = table;
        j["worst_z"] = worst_z;
        f.check_stat(n_paths, worst_z <= kZLimit,
                     "mean squared norm within 5 SE of 1 at every checkpoint");
        break;
      }
    }
    outputs.close();
    return finish(j, f, spec);
  } catch (const std::exception& e) {
    outputs.abort(e.what());
    throw;
  }
}

RunResult run_compare(const RunSpec& spec, const ResolvedInputs& in) {
  const OracleConfig cfg = oracle_config(spec, in.params);
  const double dt = spec.time_step();
  const std::uint64_t n_paths = spec.n_paths.value_or(4);
  const double t_eig = spec.t_end.value_or(in.params.t0 + in.params.T);
  const double t_free = std::min(t_eig, 0.1 / Model(in.params).dc.omega);
  const std::uint64_t n_eig = step_count(t_eig, dt);
  const std::uint64_t n_free = step_count(t_free, dt);
  const auto cps_eig = checkpoint_steps(spec, n_eig, dt);
  const auto cps_free = checkpoint_steps(spec, n_free, dt);

  Failures f;
  Json j = header_json(spec, in);
  j["n_paths"] = n_paths;
  j["dt"] = dt;
  j["lattice"] = {{"x_min", spec.x_min}, {"x_max", spec.x_max}, {"n", spec.grid_n}};
  const EnsembleOptions eo{n_paths, *spec.seed, spec.workers};
  auto eig = run_paths(eo, [&](std::uint64_t, TrajectoryRng& rng) {
    return compare_eigenstate_path(cfg, spec.sign, n_eig, cps_eig, rng, GridTrace{});
  });
  // Distinct streams for the free-particle runs.
  const EnsembleOptions eo_free{n_paths, *spec.seed ^ 0x5DEECE66DULL, spec.workers};
  auto fr = run_paths(eo_free, [&](std::uint64_t, TrajectoryRng& rng) {
    return compare_free_path(cfg, n_free, cps_free, rng, GridTrace{});
  });
  j["eigenstate"] = eigen_summary(eig, f, kGridTolerance);
  j["eigenstate"]["t_end"] = t_eig;
  j["free"] = free_summary(fr, f, kGridTolerance);
  j["free"]["t_end"] = t_free;
  return finish(j, f, spec);
}

}  // namespace

// ---------------------------------------------------------------------------

std::optional<Experiment> parse_experiment(std::string_view name) {
  if (name == "analytic-report") return Experiment::AnalyticReport;
  if (name == "eigenstate") return Experiment::Eigenstate;
  if (name == "superposition") return Experiment::Superposition;
  if (name == "reduced-gamma") return Experiment::ReducedGamma;
  if (name == "grid-oracle") return Experiment::GridOracle;
  if (name == "compare") return Experiment::Compare;
  return std::nullopt;
}

std::string_view experiment_name(Experiment e) {
  switch (e) {
    case Experiment::AnalyticReport: return "analytic-report";
    case Experiment::Eigenstate: return "eigenstate";
    case Experiment::Superposition: return "superposition";
    case Experiment::ReducedGamma: return "reduced-gamma";
    case Experiment::GridOracle: return "grid-oracle";
    case Experiment::Compare: return "compare";
  }
  return "analytic-report";
}

bool requires_seed(Experiment e) { return e != Experiment::AnalyticReport; }

const std::vector<std::string_view>& RunSpec::option_keys() {
  static const std::vector<std::string_view> keys = {
      "experiment", "preset", "config", "m", "m0", "lambda0", "hbar", "kappa", "T", "t0",
      "a", "b", "multiplier", "p_plus", "gamma0", "sign", "n_paths", "seed", "workers",
      "dt", "ds", "t_end", "window", "bridge", "corrections", "max_steps", "grid_n",
      "x_min", "x_max", "grid_mode", "scheme", "checkpoints", "checkpoint_times", "delta",
      "summary", "dump", "dump_paths", "snapshot"};
  return keys;
}

void RunSpec::set(std::string_view key, std::string_view value) {
  const std::string k(key);
  auto bad = [&](const char* expected) {
    parse_problems_.push_back(k + ": expected " + expected + ", got '" + std::string(value) + "'");
  };
  double d = 0.0;
  std::uint64_t u = 0;
  bool flag = false;
  auto num = [&](double& dst) {
    if (parse_double(value, d)) dst = d; else bad("a number");
  };
  auto opt_num = [&](std::optional<double>& dst) {
    if (parse_double(value, d)) dst = d; else bad("a number");
  };
  auto count = [&](auto& dst) {
    if (parse_u64(value, u)) dst = static_cast<std::remove_reference_t<decltype(dst)>>(u);
    else bad("a non-negative integer");
  };
  auto opt_count = [&](std::optional<std::uint64_t>& dst) {
    if (parse_u64(value, u)) dst = u; else bad("a non-negative integer");
  };

  if (k == "experiment") {
    if (auto e = parse_experiment(value)) experiment = *e; else bad("an experiment name");
  } else if (k == "preset") {
    if (value == "reference" || value == "desk") preset = std::string(value); else bad("reference or desk");
  } else if (k == "config") {
    config_path = std::string(value);
  } else if (std::find(kPhysicalFieldNames.begin(), kPhysicalFieldNames.end(), key) !=
             kPhysicalFieldNames.end()) {
    if (parse_double(value, d)) {
      std::erase_if(physical_overrides, [&](const auto& p) { return p.first == k; });
      physical_overrides.emplace_back(k, d);
    } else {
      bad("a number");
    }
  } else if (k == "a") { opt_num(a);
  } else if (k == "b") { opt_num(b);
  } else if (k == "multiplier") { opt_num(multiplier);
  } else if (k == "p_plus") { opt_num(p_plus);
  } else if (k == "gamma0") { opt_num(gamma0);
  } else if (k == "sign") {
    if (value == "+1" || value == "1" || value == "+") sign = 1;
    else if (value == "-1" || value == "-") sign = -1;
    else bad("+1 or -1");
  } else if (k == "n_paths") { opt_count(n_paths);
  } else if (k == "seed") { opt_count(seed);
  } else if (k == "workers") { count(workers);
  } else if (k == "dt") { opt_num(dt);
  } else if (k == "ds") { num(ds);
  } else if (k == "t_end") { opt_num(t_end);
  } else if (k == "window") { num(window);
  } else if (k == "bridge") {
    if (parse_bool(value, flag)) bridge = flag; else bad("true or false");
  } else if (k == "corrections") {
    if (parse_bool(value, flag)) corrections = flag; else bad("true or false");
  } else if (k == "max_steps") { count(max_steps);
  } else if (k == "grid_n") { count(grid_n);
  } else if (k == "x_min") { num(x_min);
  } else if (k == "x_max") { num(x_max);
  } else if (k == "grid_mode") {
    if (value == "eigenstate") grid_mode = GridMode::Eigenstate;
    else if (value == "superposition") grid_mode = GridMode::Superposition;
    else if (value == "linear") grid_mode = GridMode::Linear;
    else if (value == "free") grid_mode = GridMode::Free;
    else bad("eigenstate, superposition, linear or free");
  } else if (k == "scheme") {
    if (value == "split-step") scheme = Scheme::SplitStep;
    else if (value == "finite-difference") scheme = Scheme::FiniteDifference;
    else bad("split-step or finite-difference");
  } else if (k == "checkpoints") { count(n_checkpoints);
  } else if (k == "checkpoint_times") {
    checkpoint_times.clear();
    std::string_view rest = value;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      if (parse_double(item, d)) checkpoint_times.push_back(d); else { bad("comma-separated numbers"); break; }
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
  } else if (k == "delta") { num(delta);
  } else if (k == "summary") { summary_path = std::string(value);
  } else if (k == "dump") { dump_path = std::string(value);
  } else if (k == "dump_paths") { count(dump_paths);
  } else if (k == "snapshot") { snapshot_path = std::string(value);
  } else {
    parse_problems_.push_back(k + ": unknown option");
  }
}

double RunSpec::time_step() const {
  const bool grid = experiment == Experiment::GridOracle || experiment == Experiment::Compare;
  return dt.value_or(grid ? 1e-4 : 1e-3);
}

std::vector<std::string> RunSpec::problems() const {
  std::vector<std::string> p = parse_problems_;
  if (requires_seed(experiment) && !seed) {
    p.push_back("seed: required for the " + std::string(experiment_name(experiment)) + " experiment");
  }
  if (n_paths && *n_paths < 1) p.push_back("n_paths: must be at least 1");
  if (workers < 1) p.push_back("workers: must be at least 1");
  if (dt && (!(*dt > 0.0) || !std::isfinite(*dt))) p.push_back("dt: must be positive");
  if (!(ds > 0.0) || ds > 1e-3) p.push_back("ds: must lie in (0, 1e-3]");
  if (t_end && !(*t_end > 0.0)) p.push_back("t_end: must be positive");
  if (!(window >= 0.0) || !std::isfinite(window)) p.push_back("window: must be non-negative");
  if (p_plus && gamma0) p.push_back("p_plus, gamma0: give at most one");
  if (p_plus && !(*p_plus > 0.0 && *p_plus < 1.0)) p.push_back("p_plus: must lie in (0, 1)");
  if (gamma0 && !std::isfinite(*gamma0)) p.push_back("gamma0: must be finite");
  if (!(delta > 0.0)) p.push_back("delta: must be positive");
  if (grid_n < 16 || grid_n % 2 != 0) p.push_back("grid_n: must be even and at least 16");
  if (!(x_max > x_min)) p.push_back("x_min, x_max: need x_min < x_max");
  for (double t : checkpoint_times) {
    if (!(t > 0.0)) {
      p.push_back("checkpoint_times: entries must be positive");
      break;
    }
  }
  try {
    const ResolvedInputs in = resolve_inputs(*this);
    try {
      in.params.validate();
    } catch (const Error& e) {
      p.push_back(std::string("params: ") + e.what());
    }
    try {
      in.thresholds.validate();
    } catch (const Error& e) {
      p.push_back(std::string("thresholds: ") + e.what());
    }
  } catch (const Error& e) {
    p.push_back(e.what());
  }
  return p;
}

void RunSpec::validate() const {
  const auto p = problems();
  if (p.empty()) return;
  std::string msg = "invalid run specification:";
  for (const auto& s : p) msg += "\n  " + s;
  fail(ErrorCode::Config, msg);
}

ResolvedInputs resolve_inputs(const RunSpec& spec) {
  ResolvedInputs in;
  const bool reference_default = spec.experiment == Experiment::AnalyticReport ||
                             spec.experiment == Experiment::ReducedGamma;
  const std::string preset = spec.preset.empty() ? (reference_default ? "reference" : "desk") : spec.preset;
  in.params = preset == "reference" ? PhysicalParams::reference() : PhysicalParams::desk();
  if (!spec.config_path.empty()) {
    const Config cfg = load_config(spec.config_path);
    in.params = cfg.physical;
    in.thresholds = cfg.thresholds;
  }
  for (const auto& [k, v] : spec.physical_overrides) field(in.params, k) = v;
  if (spec.a) in.thresholds.a = *spec.a;
  if (spec.b) in.thresholds.b = *spec.b;
  if (spec.multiplier) in.thresholds.multiplier = *spec.multiplier;
  return in;
}

RunResult run(const RunSpec& spec) {
  spec.validate();
  const ResolvedInputs in = resolve_inputs(spec);
  switch (spec.experiment) {
    case Experiment::AnalyticReport: return run_analytic(spec, in);
    case Experiment::Eigenstate: return run_eigenstate(spec, in);
    case Experiment::Superposition: return run_superposition(spec, in);
    case Experiment::ReducedGamma: return run_reduced(spec, in);
    case Experiment::GridOracle: return run_grid(spec, in);
    case Experiment::Compare: return run_compare(spec, in);
  }
  fail(ErrorCode::Domain, "unknown experiment");
}

}  // namespace qmupl
