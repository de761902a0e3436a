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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lrmc/core/error.hpp"
#include "lrmc/core/matrix.hpp"

namespace lrmc {

/// Problem shape: a d1 x d2 target of rank r.
struct Dims {
  std::size_t d1 = 0;
  std::size_t d2 = 0;
  std::size_t r = 0;

  void validate() const {
    if (d1 == 0 || d2 == 0) throw parameter_error("Dims: d1 and d2 must be positive");
    if (r == 0) throw parameter_error("Dims: r must be positive");
    if (r > std::min(d1, d2)) {
      throw parameter_error("Dims: r = " + std::to_string(r) +
                            " exceeds min(d1, d2) = " +
                            std::to_string(std::min(d1, d2)));
    }
  }

  bool operator==(const Dims&) const = default;
};

/// The iterate F = [X; Y] kept as its two blocks.
struct FactorPair {
  Matrix x;  // d1 x r
  Matrix y;  // d2 x r

  FactorPair() = default;
  FactorPair(Matrix x_, Matrix y_) : x(std::move(x_)), y(std::move(y_)) {
    if (x.cols() != y.cols()) {
      throw parameter_error("FactorPair: X and Y must share column count");
    }
  }

  std::size_t rank() const noexcept { return x.cols(); }
  std::size_t d1() const noexcept { return x.rows(); }
  std::size_t d2() const noexcept { return y.rows(); }

  /// (d1 + d2) x r stacked matrix.
  Matrix stacked() const { return vstack(x, y); }

  /// Inverse of stacked(): split an F back into (X, Y).
  static FactorPair split(const Matrix& f, std::size_t d1) {
    return {row_block(f, 0, d1), row_block(f, d1, f.rows() - d1)};
  }

  bool same_shape(const FactorPair& o) const noexcept {
    return x.same_shape(o.x) && y.same_shape(o.y);
  }

  bool operator==(const FactorPair&) const = default;
};

inline bool all_finite(const FactorPair& f) noexcept {
  return all_finite(f.x) && all_finite(f.y);
}

/// Planted rank-r target M* = U* diag(sigma*) V*^T together with its
/// condition number and incoherence coefficient.
struct GroundTruth {
  Matrix u_star;                  // d1 x r, orthonormal columns
  std::vector<double> sigma_star; // length r, positive, descending
  Matrix v_star;                  // d2 x r, orthonormal columns
  Matrix m_star;                  // d1 x d2
  double kappa = 1.0;
  double mu = 1.0;

  std::size_t d1() const noexcept { return m_star.rows(); }
  std::size_t d2() const noexcept { return m_star.cols(); }
  std::size_t rank() const noexcept { return sigma_star.size(); }
  double sigma_max() const noexcept { return sigma_star.front(); }
  double sigma_min() const noexcept { return sigma_star.back(); }

  /// F* = [U* Sigma*^{1/2}; V* Sigma*^{1/2}]
  FactorPair factors() const {
    Matrix x = u_star;
    Matrix y = v_star;
    for (std::size_t k = 0; k < sigma_star.size(); ++k) {
      const double root = std::sqrt(sigma_star[k]);
      for (std::size_t i = 0; i < x.rows(); ++i) x(i, k) *= root;
      for (std::size_t i = 0; i < y.rows(); ++i) y(i, k) *= root;
    }
    return {std::move(x), std::move(y)};
  }
};

/// U diag(s) V^T
inline Matrix assemble(const Matrix& u, const std::vector<double>& s,
                       const Matrix& v) {
  Matrix us = u;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t k = 0; k < us.cols(); ++k) us(i, k) *= s[k];
  return matmul_nt(us, v);
}

}  // namespace lrmc
