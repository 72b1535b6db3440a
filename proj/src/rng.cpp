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

#include "qmupl/rng.hpp"

namespace qmupl {

void Philox4x32::discard(std::uint64_t n) noexcept {
  while (n > 0 && lane_ < 2) {
    ++lane_;
    --n;
  }
  block_ += n / 2;
  if (n % 2 == 1) {
    refill();
    lane_ = 1;
  }
}

}  // namespace qmupl
