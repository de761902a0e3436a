// Copyright 2026 The lrmc Authors. All Rights Reserved.
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

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lrmc {

/// Invalid argument: bad shape, out-of-range rate, rank too large, ...
class parameter_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative factorization hit its sweep cap.
class decomposition_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Alignment precondition failed (rank-deficient factor).
class alignment_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using warning_sink = std::function<void(std::string_view)>;

/// Process-wide hook for non-fatal diagnostics. Defaults to stderr.
inline warning_sink& warning_handler() {
  static warning_sink sink = [](std::string_view msg) {
    std::cerr << "lrmc: warning: " << msg << '\n';
  };
  return sink;
}

inline void warn(std::string_view msg) {
  if (auto& sink = warning_handler()) sink(msg);
}

}  // namespace lrmc
