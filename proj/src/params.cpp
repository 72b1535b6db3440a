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

#include "qmupl/params.hpp"

#include <cmath>
#include <string>

#include "qmupl/error.hpp"

namespace qmupl {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    fail(ErrorCode::Domain,
         std::string("parameter '") + name + "' must be strictly positive");
  }
}

}  // namespace

PhysicalParams PhysicalParams::desk(double hbar_kappa, double duration) {
  PhysicalParams p;
  p.m = 1.0;
  p.m0 = 1.0;
  p.lambda0 = 0.25;
  p.hbar = 1.0;
  p.kappa = hbar_kappa;
  p.T = duration;
  p.t0 = 0.0;
  return p;
}

void PhysicalParams::validate() const {
  require_positive(m, "m");
  require_positive(m0, "m0");
  require_positive(lambda0, "lambda0");
  require_positive(hbar, "hbar");
  require_positive(T, "T");
  // kappa = 0 is the free particle.
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
    fail(ErrorCode::Domain, "parameter 'kappa' must be non-negative");
  }
  if (!(t0 >= 0.0) || !std::isfinite(t0)) {
    fail(ErrorCode::Domain, "parameter 't0' must be non-negative");
  }
}

double& field(PhysicalParams& p, std::string_view name) {
  if (name == "m") return p.m;
  if (name == "m0") return p.m0;
  if (name == "lambda0") return p.lambda0;
  if (name == "hbar") return p.hbar;
  if (name == "kappa") return p.kappa;
  if (name == "T") return p.T;
  if (name == "t0") return p.t0;
  fail(ErrorCode::Config, "unknown physical parameter '" + std::string(name) + "'");
}

double field(const PhysicalParams& p, std::string_view name) {
  return field(const_cast<PhysicalParams&>(p), name);
}

DerivedConstants derive_constants(const PhysicalParams& p) {
  p.validate();
  DerivedConstants dc;
  dc.lambda = (p.m / p.m0) * p.lambda0;
  dc.omega = 2.0 * std::sqrt(p.hbar * dc.lambda / p.m);
  dc.sigma_q = std::sqrt(p.hbar / (p.m * dc.omega));
  dc.sigma_p = p.hbar / (std::sqrt(2.0) * dc.sigma_q);
  return dc;
}

double effective_time_constant(const PhysicalParams& p) {
  const DerivedConstants dc = derive_constants(p);
  const double v = p.hbar_kappa();
  return dc.lambda * v * v / 3.0;
}

Model::Model(const PhysicalParams& p) : params(p), dc(derive_constants(p)) {}

ReducedUnits ReducedUnits::natural(const PhysicalParams& p) {
  const DerivedConstants dc = derive_constants(p);
  ReducedUnits u;
  u.length_scale = dc.sigma_q;
  u.time_scale = 1.0 / dc.omega;
  u.mass_scale = p.m;
  u.dimensionless = true;
  return u;
}

void ReducedUnits::validate() const {
  require_positive(length_scale, "length_scale");
  require_positive(time_scale, "time_scale");
  require_positive(mass_scale, "mass_scale");
}

// Dimensions: hbar ~ M L^2 / t, lambda0 ~ 1 / (L^2 t), kappa ~ 1 / (M L).
PhysicalParams ReducedUnits::to_reduced(const PhysicalParams& p) const {
  validate();
  const double L = length_scale, t = time_scale, M = mass_scale;
  PhysicalParams r;
  r.m = p.m / M;
  r.m0 = p.m0 / M;
  r.lambda0 = p.lambda0 * L * L * t;
  r.hbar = p.hbar * t / (M * L * L);
  r.kappa = p.kappa * M * L;
  r.T = p.T / t;
  r.t0 = p.t0 / t;
  return r;
}

PhysicalParams ReducedUnits::from_reduced(const PhysicalParams& r) const {
  validate();
  const double L = length_scale, t = time_scale, M = mass_scale;
  PhysicalParams p;
  p.m = r.m * M;
  p.m0 = r.m0 * M;
  p.lambda0 = r.lambda0 / (L * L * t);
  p.hbar = r.hbar * M * L * L / t;
  p.kappa = r.kappa / (M * L);
  p.T = r.T * t;
  p.t0 = r.t0 * t;
  return p;
}

DerivedConstants ReducedUnits::to_reduced(const DerivedConstants& dc) const {
  validate();
  DerivedConstants r;
  r.lambda = dc.lambda * length_scale * length_scale * time_scale;
  r.omega = dc.omega * time_scale;
  r.sigma_q = dc.sigma_q / length_scale;
  r.sigma_p = dc.sigma_p * time_scale / (mass_scale * length_scale);
  return r;
}

DerivedConstants ReducedUnits::from_reduced(const DerivedConstants& r) const {
  validate();
  DerivedConstants dc;
  dc.lambda = r.lambda / (length_scale * length_scale * time_scale);
  dc.omega = r.omega / time_scale;
  dc.sigma_q = r.sigma_q * length_scale;
  dc.sigma_p = r.sigma_p * mass_scale * length_scale / time_scale;
  return dc;
}

}  // namespace qmupl
