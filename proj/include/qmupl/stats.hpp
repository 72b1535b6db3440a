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

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace qmupl {

/// Streaming moments up to fourth order (mergeable, Pebay's update).
class RunningStats {
 public:
  void add(double x);
  void merge(const RunningStats& other);

  std::uint64_t count() const { return n_; }
  double mean() const { return mean_; }
  /// Unbiased sample variance; 0 for fewer than two samples.
  double variance() const;
  double stddev() const;
  /// Standard error of the mean.
  double standard_error() const;
  /// Standard error of the sample variance, from the fourth central moment.
  double variance_standard_error() const;
  double min() const { return min_; }
  double max() const { return max_; }
  double m2() const { return m2_; }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double m3_ = 0.0;
  double m4_ = 0.0;
  double min_ = std::numeric_limits<double>::infinity();
  double max_ = -std::numeric_limits<double>::infinity();
};

/// Success counter for outcome frequencies.
struct BinomialCounter {
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;

  void add(bool success) {
    ++trials;
    successes += success ? 1 : 0;
  }
  void merge(const BinomialCounter& o) {
    trials += o.trials;
    successes += o.successes;
  }
  double fraction() const;
  /// Binomial standard error at the observed fraction.
  double standard_error() const;
  /// Binomial standard error at a reference probability.
  double standard_error_at(double p) const;
};

/// Per-checkpoint accumulators for a fixed list of observables, plus named
/// binomial counters. Merging is order independent up to rounding.
class EnsembleStats {
 public:
  EnsembleStats() = default;
  EnsembleStats(std::vector<double> checkpoints, std::vector<std::string> observables);

  void add(std::size_t checkpoint, std::size_t observable, double value);
  const RunningStats& at(std::size_t checkpoint, std::size_t observable) const;
  RunningStats& at(std::size_t checkpoint, std::size_t observable);

  BinomialCounter& counter(const std::string& name);
  const BinomialCounter* find_counter(const std::string& name) const;

  void merge(const EnsembleStats& other);

  const std::vector<double>& checkpoints() const { return checkpoints_; }
  const std::vector<std::string>& observables() const { return observables_; }
  std::size_t observable_index(const std::string& name) const;

 private:
  std::vector<double> checkpoints_;
  std::vector<std::string> observables_;
  std::vector<RunningStats> cells_;
  std::vector<std::pair<std::string, BinomialCounter>> counters_;
};

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double effective_n = 0.0;
};

/// Kolmogorov survival function Q(x) = 2 sum (-1)^(k-1) exp(-2 k^2 x^2).
double kolmogorov_survival(double x);

/// Two-sample Kolmogorov-Smirnov test (asymptotic p-value with Stephens'
/// small-sample correction).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Two-sample KS test where the first sample carries non-negative weights.
/// The effective size of the weighted sample is Kish's (sum w)^2 / sum w^2.
KsResult ks_two_sample_weighted(std::span<const double> a,
                                std::span<const double> weights_a,
                                std::span<const double> b);

/// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

/// `n` log-spaced points from `first` to `last` inclusive.
std::vector<double> log_spaced(double first, double last, std::size_t n);

struct ChebyshevSpec {
  double center = 0.0;  // reference mean
  double scale = 1.0;   // reference standard deviation
  double k = 2.0;       // tail threshold in units of `scale`
};

struct ChebyshevReport {
  double k = 0.0;
  double bound = 0.0;           // 1/k^2
  double empirical_tail = 0.0;  // fraction with |x - center| >= k * scale
  double standard_error = 0.0;
  std::uint64_t n = 0;
  bool violated = false;        // empirical tail above bound by more than 3 SE
};

/// Compares an empirical tail frequency with Chebyshev's inequality.
ChebyshevReport chebyshev_check(std::span<const double> samples,
                                const ChebyshevSpec& spec);

}  // namespace qmupl
