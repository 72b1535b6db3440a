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

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

#include "qmupl/rng.hpp"

namespace qmupl {

struct EnsembleOptions {
  std::uint64_t n_paths = 1;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// Runs `fn(index, rng)` for every trajectory index and returns the results
/// in index order. Each trajectory gets its own counter-based stream keyed by
/// (seed, index), so the output is bit-identical for any worker count.
/// The first exception thrown by any trajectory is rethrown here.
template <class Fn>
auto run_paths(const EnsembleOptions& opt, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, std::uint64_t, TrajectoryRng&>> {
  using Result = std::invoke_result_t<Fn&, std::uint64_t, TrajectoryRng&>;
  std::vector<Result> results(opt.n_paths);
  std::atomic<std::uint64_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      const std::uint64_t i = next.fetch_add(1);
      if (i >= opt.n_paths || abort.load()) return;
      try {
        TrajectoryRng rng(opt.seed, i);
        results[i] = fn(i, rng);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        abort = true;
        return;
      }
    }
  };

  const unsigned n_workers = static_cast<unsigned>(
      std::clamp<std::uint64_t>(opt.workers, 1, std::max<std::uint64_t>(opt.n_paths, 1)));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (unsigned w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace qmupl
