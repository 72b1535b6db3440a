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
#include <cstdint>
#include <limits>

#include <boost/random/normal_distribution.hpp>

namespace qmupl {

/// Philox4x32-10 counter-based generator.
///
/// The 64-bit key holds the root seed; the upper half of the 128-bit counter
/// holds the stream (trajectory) index and the lower half counts blocks, so
/// every trajectory owns an independent, position-addressable stream.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream) noexcept
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    if (lane_ == 2) {
      refill();
    }
    const std::size_t i = 2 * lane_++;
    return (static_cast<std::uint64_t>(out_[i + 1]) << 32) | out_[i];
  }

  /// Skips `n` 64-bit outputs.
  void discard(std::uint64_t n) noexcept;

  /// One application of the 10-round bijection.
  static Block encrypt(Block ctr, Key key) noexcept {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return ctr;
  }

 private:
  void refill() noexcept {
    const Block ctr = {static_cast<std::uint32_t>(block_),
                       static_cast<std::uint32_t>(block_ >> 32),
                       static_cast<std::uint32_t>(stream_),
                       static_cast<std::uint32_t>(stream_ >> 32)};
    out_ = encrypt(ctr, key_);
    ++block_;
    lane_ = 0;
  }

  Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  Block out_{};
  unsigned lane_ = 2;
};

/// Per-trajectory noise source: standard normals (ziggurat) and uniforms.
class TrajectoryRng {
 public:
  TrajectoryRng(std::uint64_t seed, std::uint64_t trajectory) noexcept
      : engine_(seed, trajectory) {}

  double normal() { return normal_(engine_); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Wiener increment over a step of length dt.
  double increment(double dt) { return std::sqrt(dt) * normal(); }

  Philox4x32& engine() noexcept { return engine_; }

 private:
  Philox4x32 engine_;
  boost::random::normal_distribution<double> normal_;
};

/// Wraps a noise source and negates its normals; uniforms pass through.
/// Used to drive mirrored paths with the same stream.
template <class Noise>
class MirroredNoise {
 public:
  explicit MirroredNoise(Noise& inner) : inner_(inner) {}
  double normal() { return -inner_.normal(); }
  double uniform() { return inner_.uniform(); }
  double increment(double dt) { return std::sqrt(dt) * normal(); }

 private:
  Noise& inner_;
};

}  // namespace qmupl
