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

#include "qmupl/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <numbers>

#include <fftw3.h>

#include "qmupl/error.hpp"

namespace qmupl {

namespace {

// The FFTW planner is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr std::size_t kEdgeFraction = 32;
constexpr double kLeakTolerance = 1e-10;
constexpr double kNormFloor = 1e-300;

double branch_norm_sq(const std::vector<Complex>& psi, double dx) {
  double s = 0.0;
  for (const auto& z : psi) s += std::norm(z);
  return s * dx;
}

double mean_position(const GridState& gs) {
  double s0 = 0.0, s1 = 0.0;
  for (std::size_t j = 0; j < gs.lattice.n; ++j) {
    const double d = std::norm(gs.psi_plus[j]) + std::norm(gs.psi_minus[j]);
    s0 += d;
    s1 += d * gs.lattice.x(j);
  }
  if (!(s0 > 0.0)) fail(ErrorCode::Propagation, "grid state has zero norm");
  return s1 / s0;
}

}  // namespace

struct GridSolver::Fft {
  std::size_t n;
  fftw_complex* buf;
  fftw_plan forward;
  fftw_plan backward;

  explicit Fft(std::size_t size) : n(size) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    if (buf == nullptr) fail(ErrorCode::Domain, "FFT buffer allocation failed");
    const int ni = static_cast<int>(n);
    forward = fftw_plan_dft_1d(ni, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
    backward = fftw_plan_dft_1d(ni, buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    fftw_free(buf);
  }
  Complex* data() { return reinterpret_cast<Complex*>(buf); }
};

double Lattice::k(std::size_t j) const {
  const double L = x_max - x_min;
  const auto jj = static_cast<double>(j);
  const auto nn = static_cast<double>(n);
  return 2.0 * std::numbers::pi / L * (j < n / 2 ? jj : jj - nn);
}

void Lattice::validate() const {
  if (!(x_max > x_min) || !std::isfinite(x_min) || !std::isfinite(x_max)) {
    fail(ErrorCode::Domain, "lattice needs finite x_min < x_max");
  }
  if (n < 16 || n % 2 != 0) fail(ErrorCode::Domain, "lattice needs an even n >= 16");
}

void OracleConfig::validate() const {
  lattice.validate();
  params.validate();
  if (!(dt > 0.0) || !std::isfinite(dt)) fail(ErrorCode::Domain, "oracle needs dt > 0");
  if (scheme == Scheme::FiniteDifference) {
    const double dx = lattice.dx();
    const double cfl = params.hbar * dt / (params.m * dx * dx);
    if (cfl > 0.5) {
      fail(ErrorCode::Domain, "finite-difference scheme violates hbar dt / (m dx^2) <= 0.5 (got " +
                                  std::to_string(cfl) + ")");
    }
  }
}

GridState make_grid_state(const Lattice& lattice, const GaussianParams& plus,
                          const GaussianParams& minus) {
  lattice.validate();
  GridState gs;
  gs.lattice = lattice;
  gs.psi_plus.resize(lattice.n);
  gs.psi_minus.resize(lattice.n);
  for (std::size_t j = 0; j < lattice.n; ++j) {
    gs.psi_plus[j] = gaussian_amplitude(plus, lattice.x(j));
    gs.psi_minus[j] = gaussian_amplitude(minus, lattice.x(j));
  }
  gs.norm_sq = grid_norm_sq(gs);
  return gs;
}

GridState make_grid_eigenstate(const Lattice& lattice, const GaussianParams& phi, int sign) {
  if (sign != 1 && sign != -1) fail(ErrorCode::Domain, "eigenstate sign must be +1 or -1");
  lattice.validate();
  GridState gs;
  gs.lattice = lattice;
  gs.psi_plus.assign(lattice.n, Complex{});
  gs.psi_minus.assign(lattice.n, Complex{});
  auto& psi = sign > 0 ? gs.psi_plus : gs.psi_minus;
  for (std::size_t j = 0; j < lattice.n; ++j) psi[j] = gaussian_amplitude(phi, lattice.x(j));
  gs.norm_sq = grid_norm_sq(gs);
  return gs;
}

double grid_norm_sq(const GridState& gs) {
  const double dx = gs.lattice.dx();
  return branch_norm_sq(gs.psi_plus, dx) + branch_norm_sq(gs.psi_minus, dx);
}

std::pair<double, double> branch_weights(const GridState& gs) {
  const double dx = gs.lattice.dx();
  return {branch_norm_sq(gs.psi_plus, dx), branch_norm_sq(gs.psi_minus, dx)};
}

double weight_gap_estimate(double w_plus, double w_minus) {
  const bool zp = !(w_plus >= kNormFloor);
  const bool zm = !(w_minus >= kNormFloor);
  if (zp && zm) fail(ErrorCode::Propagation, "both spin branches vanished");
  if (zp) return -std::numeric_limits<double>::infinity();
  if (zm) return std::numeric_limits<double>::infinity();
  return 0.5 * (std::log(w_plus) - std::log(w_minus));
}

Complex grid_overlap(const GaussianParams& phi, const std::vector<Complex>& psi,
                     const Lattice& lattice) {
  Complex s{};
  for (std::size_t j = 0; j < lattice.n; ++j) {
    s += std::conj(gaussian_amplitude(phi, lattice.x(j))) * psi[j];
  }
  return s * lattice.dx();
}

void write_snapshot(const std::string& path, const GridState& gs) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot open snapshot file " + path);
  char line[256];
  std::snprintf(line, sizeof line, "# lattice x_min=%.17g x_max=%.17g n=%zu t=%.17g\n",
                gs.lattice.x_min, gs.lattice.x_max, gs.lattice.n, gs.t);
  out << line << "x,re_psi_plus,im_psi_plus,re_psi_minus,im_psi_minus\n";
  for (std::size_t j = 0; j < gs.lattice.n; ++j) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g\n", gs.lattice.x(j),
                  gs.psi_plus[j].real(), gs.psi_plus[j].imag(), gs.psi_minus[j].real(),
                  gs.psi_minus[j].imag());
    out << line;
  }
  if (!out) fail(ErrorCode::Io, "write failed for snapshot file " + path);
}

GridSolver::GridSolver(const OracleConfig& cfg)
    : cfg_(cfg),
      model_((cfg.validate(), cfg.params)),
      profile_(DeltaProfile::for_model(model_)),
      fft_(std::make_unique<Fft>(cfg.lattice.n)) {
  k_.resize(cfg_.lattice.n);
  for (std::size_t j = 0; j < cfg_.lattice.n; ++j) k_[j] = cfg_.lattice.k(j);
}

GridSolver::~GridSolver() = default;

void GridSolver::hamiltonian_step(std::vector<Complex>& psi, int sign, double t) {
  if (cfg_.scheme == Scheme::FiniteDifference) {
    finite_difference_step(psi, sign, t);
    return;
  }
  const std::size_t n = psi.size();
  Complex* w = fft_->data();
  std::copy(psi.begin(), psi.end(), w);
  fftw_execute(fft_->forward);
  const double kin = 0.5 * model_.hbar_over_m() * cfg_.dt;
  const double shift = 0.5 * model_.hbar_kappa() * static_cast<double>(sign) *
                       profile_.integral(t, t + cfg_.dt);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double k = k_[j];
    const double phase = -(kin * k * k + shift * k);
    w[j] *= Complex{std::cos(phase), std::sin(phase)} * inv_n;
  }
  fftw_execute(fft_->backward);
  std::copy(w, w + n, psi.begin());
}

void GridSolver::finite_difference_step(std::vector<Complex>& psi, int sign, double t) {
  const std::size_t n = psi.size();
  const double dx = cfg_.lattice.dx();
  const double dt = cfg_.dt;
  const Complex kin{0.0, 0.5 * model_.hbar_over_m() / (dx * dx)};
  const double drift = 0.5 * model_.hbar_kappa() * static_cast<double>(sign) / (2.0 * dx);
  auto rhs = [&](const std::vector<Complex>& f, double tt, std::vector<Complex>& out) {
    const double d = drift * profile_(tt);
    for (std::size_t j = 0; j < n; ++j) {
      const Complex& l = f[(j + n - 1) % n];
      const Complex& r = f[(j + 1) % n];
      out[j] = kin * (l - 2.0 * f[j] + r) - d * (r - l);
    }
  };
  std::vector<Complex> k1(n), k2(n), k3(n), k4(n), tmp(n);
  rhs(psi, t, k1);
  for (std::size_t j = 0; j < n; ++j) tmp[j] = psi[j] + 0.5 * dt * k1[j];
  rhs(tmp, t + 0.5 * dt, k2);
  for (std::size_t j = 0; j < n; ++j) tmp[j] = psi[j] + 0.5 * dt * k2[j];
  rhs(tmp, t + 0.5 * dt, k3);
  for (std::size_t j = 0; j < n; ++j) tmp[j] = psi[j] + dt * k3[j];
  rhs(tmp, t + dt, k4);
  for (std::size_t j = 0; j < n; ++j) {
    psi[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
}

double GridSolver::step_nonlinear(GridState& gs, double dW) {
  require_finite(dW, "noise increment");
  const double q_mean = mean_position(gs);
  const double sl = model_.sqrt_lambda();
  const double lambda = model_.dc.lambda;
  const double dt = cfg_.dt;
  const Lattice& lat = gs.lattice;
  for (std::size_t j = 0; j < lat.n; ++j) {
    const double y = lat.x(j) - q_mean;
    const double f = std::exp(sl * y * dW - lambda * y * y * dt);
    gs.psi_plus[j] *= f;
    gs.psi_minus[j] *= f;
  }
  hamiltonian_step(gs.psi_plus, +1, gs.t);
  hamiltonian_step(gs.psi_minus, -1, gs.t);
  const double n2 = grid_norm_sq(gs);
  require_finite(n2, "grid norm");
  if (!(n2 > 0.0)) fail(ErrorCode::Propagation, "grid state vanished");
  const double s = 1.0 / std::sqrt(n2);
  for (auto& z : gs.psi_plus) z *= s;
  for (auto& z : gs.psi_minus) z *= s;
  gs.norm_sq = 1.0;
  gs.t += dt;
  check_boundary(gs);
  return n2;
}

double GridSolver::step_linear(GridState& gs, double dxi) {
  require_finite(dxi, "noise increment");
  const double sl = model_.sqrt_lambda();
  const double lambda = model_.dc.lambda;
  const double dt = cfg_.dt;
  const Lattice& lat = gs.lattice;
  for (std::size_t j = 0; j < lat.n; ++j) {
    const double x = lat.x(j);
    const double f = std::exp(sl * x * dxi - lambda * x * x * dt);
    gs.psi_plus[j] *= f;
    gs.psi_minus[j] *= f;
  }
  hamiltonian_step(gs.psi_plus, +1, gs.t);
  hamiltonian_step(gs.psi_minus, -1, gs.t);
  gs.norm_sq = grid_norm_sq(gs);
  require_finite(gs.norm_sq, "grid norm");
  gs.t += dt;
  check_boundary(gs);
  return gs.norm_sq;
}

GridMoments GridSolver::measure_moments(const GridState& gs) {
  const Lattice& lat = gs.lattice;
  const double dx = lat.dx();
  GridMoments mo;
  mo.mean_q = mean_position(gs);
  double s0 = 0.0, s2 = 0.0;
  for (std::size_t j = 0; j < lat.n; ++j) {
    const double d = std::norm(gs.psi_plus[j]) + std::norm(gs.psi_minus[j]);
    const double y = lat.x(j) - mo.mean_q;
    s0 += d;
    s2 += d * y * y;
  }
  mo.var_q = s2 / s0;
  mo.w_plus = branch_norm_sq(gs.psi_plus, dx);
  mo.w_minus = branch_norm_sq(gs.psi_minus, dx);
  mo.norm_sq = mo.w_plus + mo.w_minus;

  double p0 = 0.0, p1 = 0.0;
  Complex* w = fft_->data();
  for (const auto* psi : {&gs.psi_plus, &gs.psi_minus}) {
    std::copy(psi->begin(), psi->end(), w);
    fftw_execute(fft_->forward);
    for (std::size_t j = 0; j < lat.n; ++j) {
      const double d = std::norm(w[j]);
      p0 += d;
      p1 += d * k_[j];
    }
  }
  mo.mean_p = model_.params.hbar * p1 / p0;

  mo.gamma_hat = weight_gap_estimate(mo.w_plus, mo.w_minus);
  return mo;
}

void GridSolver::check_boundary(const GridState& gs) const {
  const std::size_t n = gs.lattice.n;
  const std::size_t band = n / kEdgeFraction;
  double total = 0.0, edge = 0.0;
  for (const auto* psi : {&gs.psi_plus, &gs.psi_minus}) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = std::norm((*psi)[j]);
      total += d;
      if (j < band || j + band >= n) edge += d;
    }
  }
  if (edge > kLeakTolerance * total) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "probability reached the lattice edge at t=%.6g (edge fraction %.3g)", gs.t,
                  edge / total);
    fail(ErrorCode::BoundaryLeak, msg);
  }
}

}  // namespace qmupl
