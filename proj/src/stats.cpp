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

#include "qmupl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qmupl/error.hpp"

namespace qmupl {

void RunningStats::add(double x) {
  const std::uint64_t n1 = n_;
  ++n_;
  const double n = static_cast<double>(n_);
  const double delta = x - mean_;
  const double delta_n = delta / n;
  const double delta_n2 = delta_n * delta_n;
  const double term1 = delta * delta_n * static_cast<double>(n1);
  mean_ += delta_n;
  m4_ += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * m2_ -
         4.0 * delta_n * m3_;
  m3_ += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * m2_;
  m2_ += term1;
  min_ = std::min(min_, x);
  max_ = std::max(max_, x);
}

void RunningStats::merge(const RunningStats& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double na = static_cast<double>(n_);
  const double nb = static_cast<double>(o.n_);
  const double n = na + nb;
  const double delta = o.mean_ - mean_;
  const double d2 = delta * delta;
  const double d3 = d2 * delta;
  const double d4 = d2 * d2;

  const double mean = mean_ + delta * nb / n;
  const double m2 = m2_ + o.m2_ + d2 * na * nb / n;
  const double m3 = m3_ + o.m3_ + d3 * na * nb * (na - nb) / (n * n) +
                    3.0 * delta * (na * o.m2_ - nb * m2_) / n;
  const double m4 = m4_ + o.m4_ +
                    d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n) +
                    6.0 * d2 * (na * na * o.m2_ + nb * nb * m2_) / (n * n) +
                    4.0 * delta * (na * o.m3_ - nb * m3_) / n;
  n_ += o.n_;
  mean_ = mean;
  m2_ = m2;
  m3_ = m3;
  m4_ = m4;
  min_ = std::min(min_, o.min_);
  max_ = std::max(max_, o.max_);
}

double RunningStats::variance() const {
  return n_ > 1 ? std::max(0.0, m2_ / static_cast<double>(n_ - 1)) : 0.0;
}

double RunningStats::stddev() const { return std::sqrt(variance()); }

double RunningStats::standard_error() const {
  return n_ > 0 ? stddev() / std::sqrt(static_cast<double>(n_)) : 0.0;
}

double RunningStats::variance_standard_error() const {
  if (n_ < 4) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(n_);
  const double mu4 = m4_ / n;
  const double s2 = variance();
  const double v = (mu4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n;
  return std::sqrt(std::max(v, 0.0));
}

double BinomialCounter::fraction() const {
  return trials > 0 ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0;
}

double BinomialCounter::standard_error() const { return standard_error_at(fraction()); }

double BinomialCounter::standard_error_at(double p) const {
  return trials > 0 ? std::sqrt(p * (1.0 - p) / static_cast<double>(trials)) : 0.0;
}

EnsembleStats::EnsembleStats(std::vector<double> checkpoints,
                             std::vector<std::string> observables)
    : checkpoints_(std::move(checkpoints)),
      observables_(std::move(observables)),
      cells_(checkpoints_.size() * observables_.size()) {}

void EnsembleStats::add(std::size_t c, std::size_t o, double value) {
  at(c, o).add(value);
}

const RunningStats& EnsembleStats::at(std::size_t c, std::size_t o) const {
  return cells_.at(c * observables_.size() + o);
}

RunningStats& EnsembleStats::at(std::size_t c, std::size_t o) {
  return cells_.at(c * observables_.size() + o);
}

BinomialCounter& EnsembleStats::counter(const std::string& name) {
  for (auto& [key, value] : counters_) {
    if (key == name) return value;
  }
  counters_.emplace_back(name, BinomialCounter{});
  return counters_.back().second;
}

const BinomialCounter* EnsembleStats::find_counter(const std::string& name) const {
  for (const auto& [key, value] : counters_) {
    if (key == name) return &value;
  }
  return nullptr;
}

std::size_t EnsembleStats::observable_index(const std::string& name) const {
  const auto it = std::find(observables_.begin(), observables_.end(), name);
  if (it == observables_.end()) {
    fail(ErrorCode::Domain, "unknown observable '" + name + "'");
  }
  return static_cast<std::size_t>(it - observables_.begin());
}

void EnsembleStats::merge(const EnsembleStats& other) {
  if (cells_.empty() && counters_.empty()) {
    *this = other;
    return;
  }
  if (other.checkpoints_ != checkpoints_ || other.observables_ != observables_) {
    fail(ErrorCode::Domain, "cannot merge ensembles with different layouts");
  }
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    cells_[i].merge(other.cells_[i]);
  }
  for (const auto& [key, value] : other.counters_) {
    counter(key).merge(value);
  }
}

double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 0.2) return 1.0;  // series converges slowly; Q is 1 to 1e-10 here
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

namespace {

struct WeightedPoint {
  double x;
  double w;
  int sample;
};

KsResult ks_from_points(std::vector<WeightedPoint> pts, double total_a, double total_b,
                        double n_eff) {
  std::sort(pts.begin(), pts.end(),
            [](const WeightedPoint& l, const WeightedPoint& r) { return l.x < r.x; });
  double ca = 0.0, cb = 0.0, d = 0.0;
  for (std::size_t i = 0; i < pts.size();) {
    const double x = pts[i].x;
    while (i < pts.size() && pts[i].x == x) {
      (pts[i].sample == 0 ? ca : cb) += pts[i].w;
      ++i;
    }
    d = std::max(d, std::abs(ca / total_a - cb / total_b));
  }
  const double sn = std::sqrt(n_eff);
  KsResult r;
  r.statistic = d;
  r.effective_n = n_eff;
  r.p_value = kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d);
  return r;
}

}  // namespace

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) fail(ErrorCode::Domain, "KS test needs two non-empty samples");
  std::vector<WeightedPoint> pts;
  pts.reserve(a.size() + b.size());
  for (double x : a) pts.push_back({x, 1.0, 0});
  for (double x : b) pts.push_back({x, 1.0, 1});
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  return ks_from_points(std::move(pts), na, nb, na * nb / (na + nb));
}

KsResult ks_two_sample_weighted(std::span<const double> a, std::span<const double> wa,
                                std::span<const double> b) {
  if (a.empty() || b.empty() || a.size() != wa.size()) {
    fail(ErrorCode::Domain, "weighted KS test needs matching non-empty samples");
  }
  std::vector<WeightedPoint> pts;
  pts.reserve(a.size() + b.size());
  double sw = 0.0, sw2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(wa[i] >= 0.0)) fail(ErrorCode::Domain, "KS weights must be non-negative");
    pts.push_back({a[i], wa[i], 0});
    sw += wa[i];
    sw2 += wa[i] * wa[i];
  }
  for (double x : b) pts.push_back({x, 1.0, 1});
  const double na = sw * sw / sw2;
  const double nb = static_cast<double>(b.size());
  return ks_from_points(std::move(pts), sw, nb, na * nb / (na + nb));
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorCode::Domain, "slope fit needs >= 2 points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

std::vector<double> log_spaced(double first, double last, std::size_t n) {
  if (!(first > 0.0) || !(last >= first) || n == 0) {
    fail(ErrorCode::Domain, "log_spaced needs 0 < first <= last and n >= 1");
  }
  std::vector<double> out(n);
  if (n == 1) {
    out[0] = last;
    return out;
  }
  const double l0 = std::log(first), l1 = std::log(last);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(l0 + (l1 - l0) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  out.front() = first;
  out.back() = last;
  return out;
}

ChebyshevReport chebyshev_check(std::span<const double> samples, const ChebyshevSpec& spec) {
  if (!(spec.k > 0.0) || !(spec.scale > 0.0)) {
    fail(ErrorCode::Domain, "Chebyshev check needs k > 0 and scale > 0");
  }
  ChebyshevReport r;
  r.k = spec.k;
  r.bound = 1.0 / (spec.k * spec.k);
  r.n = samples.size();
  if (samples.empty()) return r;
  std::uint64_t tail = 0;
  for (double x : samples) {
    if (std::abs(x - spec.center) >= spec.k * spec.scale) ++tail;
  }
  const double n = static_cast<double>(samples.size());
  r.empirical_tail = static_cast<double>(tail) / n;
  r.standard_error = std::sqrt(std::max(r.empirical_tail * (1.0 - r.empirical_tail), 1.0 / n) / n);
  r.violated = r.empirical_tail > r.bound + 3.0 * r.standard_error;
  return r;
}

}  // namespace qmupl
