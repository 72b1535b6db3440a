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
#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "qmupl/collapse.hpp"
#include "qmupl/gaussian.hpp"
#include "qmupl/params.hpp"

namespace qmupl {

/// Periodic lattice x_j = x_min + j dx, j = 0 .. n - 1, dx = (x_max - x_min) / n.
struct Lattice {
  double x_min = -24.0;
  double x_max = 24.0;
  std::size_t n = 1024;

  double dx() const { return (x_max - x_min) / static_cast<double>(n); }
  double x(std::size_t j) const { return x_min + static_cast<double>(j) * dx(); }
  /// Angular wavenumber of FFT bin j.
  double k(std::size_t j) const;
  void validate() const;
};

enum class Scheme {
  SplitStep,         // exact kinetic propagator in Fourier space
  FiniteDifference,  // RK4 on central differences, needs hbar dt / (m dx^2) <= 0.5
};

struct OracleConfig {
  double dt = 1e-3;
  Lattice lattice;
  PhysicalParams params = PhysicalParams::desk();
  Scheme scheme = Scheme::SplitStep;

  void validate() const;
};

struct GridState {
  std::vector<Complex> psi_plus;
  std::vector<Complex> psi_minus;
  Lattice lattice;
  double t = 0.0;
  double norm_sq = 1.0;  // tracked squared norm of the linear solution
};

struct GridMoments {
  double mean_q = 0.0;
  double mean_p = 0.0;
  double var_q = 0.0;
  double w_plus = 0.0;   // branch squared norms
  double w_minus = 0.0;
  double norm_sq = 0.0;
  /// 0.5 ln(w+ / w-); +-infinity when a branch norm is below 1e-300.
  double gamma_hat = 0.0;
};

/// Samples both components onto the lattice.
GridState make_grid_state(const Lattice& lattice, const GaussianParams& plus,
                          const GaussianParams& minus);

/// Eigenstate |sign> (x) phi; the other branch is zero.
GridState make_grid_eigenstate(const Lattice& lattice, const GaussianParams& phi, int sign);

/// Squared norm sum (|psi+|^2 + |psi-|^2) dx.
double grid_norm_sq(const GridState& gs);

/// Branch squared norms (w+, w-).
std::pair<double, double> branch_weights(const GridState& gs);

/// 0.5 ln(w+ / w-) with the +-infinity sentinel for a vanished branch.
double weight_gap_estimate(double w_plus, double w_minus);

/// <phi | psi> for a lattice branch against an analytic component.
Complex grid_overlap(const GaussianParams& phi, const std::vector<Complex>& psi,
                     const Lattice& lattice);

/// Lattice header followed by rows x, Re psi+, Im psi+, Re psi-, Im psi-.
void write_snapshot(const std::string& path, const GridState& gs);

/// Stochastic spin (x) position solver. Owns FFT plans and scratch buffers,
/// so each worker thread needs its own instance.
class GridSolver {
 public:
  explicit GridSolver(const OracleConfig& cfg);
  ~GridSolver();
  GridSolver(const GridSolver&) = delete;
  GridSolver& operator=(const GridSolver&) = delete;

  const OracleConfig& config() const { return cfg_; }
  const Model& model() const { return model_; }

  /// Norm-preserving step driven by the physical increment dW. Returns the
  /// squared norm before the final renormalization.
  double step_nonlinear(GridState& gs, double dW);

  /// Linear step driven by d(xi); returns the updated squared norm, which
  /// is also stored in gs.norm_sq.
  double step_linear(GridState& gs, double dxi);

  GridMoments measure_moments(const GridState& gs);

  /// Throws Error(BoundaryLeak) if more than 1e-10 of the probability lies
  /// in the outer 1/32 of the lattice on either side.
  void check_boundary(const GridState& gs) const;

 private:
  void hamiltonian_step(std::vector<Complex>& psi, int sign, double t);
  void finite_difference_step(std::vector<Complex>& psi, int sign, double t);

  OracleConfig cfg_;
  Model model_;
  DeltaProfile profile_;
  struct Fft;
  std::unique_ptr<Fft> fft_;
  std::vector<double> k_;
};

}  // namespace qmupl
