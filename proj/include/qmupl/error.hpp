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

#include <stdexcept>
#include <string>

namespace qmupl {

enum class ErrorCode {
  Domain,        // invalid argument or parameter value
  Propagation,   // non-finite value produced during time stepping
  NoHit,         // step budget exhausted before a threshold was reached
  Config,        // malformed or unknown configuration entries
  Io,            // file could not be read or written
  BoundaryLeak,  // grid amplitude reached the lattice edge
  Invariant,     // in-run invariant assertion failed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require_finite(double v, const char* what) {
  if (!(v - v == 0.0)) {
    fail(ErrorCode::Propagation, std::string("non-finite value in ") + what);
  }
}

}  // namespace qmupl
