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
#include <limits>
#include <vector>

#include "lrmc/core/error.hpp"
#include "lrmc/core/linalg.hpp"
#include "lrmc/core/matrix.hpp"
#include "lrmc/core/types.hpp"

namespace lrmc {

/// ||X Y^T - M*||_F / ||M*||_F
inline double relative_error(const FactorPair& f, const Matrix& m_star) {
  if (f.d1() != m_star.rows() || f.d2() != m_star.cols()) {
    throw parameter_error("relative_error: dimension mismatch");
  }
  const double denom = frobenius_norm(m_star);
  if (denom == 0.0) throw parameter_error("relative_error: ||M*||_F is zero");
  const std::size_t r = f.rank();
  double num = 0.0;
  for (std::size_t i = 0; i < m_star.rows(); ++i) {
    const double* xi = f.x.row(i).data();
    auto mi = m_star.row(i);
    for (std::size_t j = 0; j < m_star.cols(); ++j) {
      const double* yj = f.y.row(j).data();
      double s = 0.0;
      for (std::size_t k = 0; k < r; ++k) s += xi[k] * yj[k];
      const double e = s - mi[j];
      num += e * e;
    }
  }
  return std::sqrt(num) / denom;
}

/// ||X^T X - Y^T Y||_F
inline double balancing_norm(const FactorPair& f) {
  return frobenius_norm(gram(f.x) - gram(f.y));
}

struct AlignmentResult {
  Matrix matrix;          // r x r; orthogonal (Procrustes) or invertible (GL)
  double residual = 0.0;  // aligned distance
  bool converged = true;
  std::size_t iterations = 0;
};

namespace detail {
inline void require_same_rank(const FactorPair& f, const FactorPair& t,
                              const char* what) {
  if (f.rank() != t.rank() || f.d1() != t.d1() || f.d2() != t.d2()) {
    throw parameter_error(std::string(what) + ": factor shapes differ");
  }
}

// min_O ||A O - B||_F over orthogonal O, for same-shape tall A, B.
inline AlignmentResult procrustes(const Matrix& a, const Matrix& b) {
  const Svd s = full_svd(matmul_tn(a, b));
  Matrix o = matmul_nt(s.u, s.v);
  const double res = frobenius_norm(matmul(a, o) - b);
  return {std::move(o), res, true, 0};
}
}  // namespace detail

/// Best orthogonal O minimizing ||F O - F_target||_F, O = U V^T from the SVD
/// of F^T F_target.
inline AlignmentResult procrustes_align(const FactorPair& f,
                                        const FactorPair& target) {
  detail::require_same_rank(f, target, "procrustes_align");
  return detail::procrustes(f.stacked(), target.stacked());
}

/// Aligns two stacked matrices directly (used for F_k O_k vs F_k^{(l)}).
inline AlignmentResult procrustes_align(const Matrix& f, const Matrix& target) {
  if (!f.same_shape(target)) throw parameter_error("procrustes_align: shapes differ");
  return detail::procrustes(f, target);
}

namespace detail {

// ||X Q - X*||^2 + ||Y Q^{-T} - Y*||^2, or +inf when Q is singular.
inline double gl_objective(const FactorPair& f, const FactorPair& t,
                           const Matrix& q) {
  Matrix q_inv_t;
  try {
    q_inv_t = transpose(inverse(q));
  } catch (const parameter_error&) {
    return std::numeric_limits<double>::infinity();
  }
  const Matrix ex = matmul(f.x, q) - t.x;
  const Matrix ey = matmul(f.y, q_inv_t) - t.y;
  return inner(ex, ex) + inner(ey, ey);
}

// Solve S D + D T = C for symmetric positive definite S, T.
inline Matrix solve_sylvester_spd(const Matrix& s, const Matrix& t,
                                  const Matrix& c) {
  const Svd es = full_svd(s);
  const Svd et = full_svd(t);
  Matrix ct = matmul(matmul_tn(es.v, c), et.v);
  for (std::size_t i = 0; i < ct.rows(); ++i)
    for (std::size_t j = 0; j < ct.cols(); ++j) {
      const double den = es.sigma[i] + et.sigma[j];
      ct(i, j) = den > 0.0 ? ct(i, j) / den : 0.0;
    }
  return matmul_nt(matmul(es.v, ct), et.v);
}

}  // namespace detail

/// Invertible Q approximately minimizing
///   ||X Q - X*||_F^2 + ||Y Q^{-T} - Y*||_F^2.
///
/// Starts at the Procrustes rotation and refines the first-order conditions
/// with damped Gauss-Newton steps Q <- Q (I + a D), where D solves the
/// linearized stationarity (Sylvester) equation and a is halved until the
/// objective does not increase. Stops when the step changes Q by less than
/// 1e-12 (Frobenius) or after 200 iterations. The result is never worse than
/// the starting rotation.
///
/// Throws alignment_error if X or Y has smallest singular value <= 1e-10.
inline AlignmentResult gl_align(const FactorPair& f, const FactorPair& target) {
  detail::require_same_rank(f, target, "gl_align");
  if (min_singular_value(f.x) <= 1e-10 || min_singular_value(f.y) <= 1e-10) {
    throw alignment_error("gl_align: factor is rank deficient");
  }
  const std::size_t r = f.rank();
  Matrix q = procrustes_align(f, target).matrix;
  double g = detail::gl_objective(f, target, q);

  constexpr std::size_t max_iter = 200;
  constexpr double step_tol = 1e-12;
  bool converged = false;
  std::size_t it = 0;
  while (it < max_iter && !converged) {
    ++it;
    const Matrix a = matmul(f.x, q);
    const Matrix b = matmul(f.y, transpose(inverse(q)));
    // S D + D T = A^T (X* - A) + (B - Y*)^T B
    Matrix rhs = matmul_tn(a, target.x - a);
    rhs += matmul_tn(b - target.y, b);
    const Matrix d = detail::solve_sylvester_spd(gram(a), gram(b), rhs);

    double alpha = 1.0;
    bool accepted = false;
    Matrix q_next;
    double g_next = g;
    for (int halving = 0; halving < 40; ++halving, alpha *= 0.5) {
      Matrix step = Matrix::identity(r);
      step.add_scaled(alpha, d);
      Matrix cand = matmul(q, step);
      const double gc = detail::gl_objective(f, target, cand);
      if (gc <= g) {
        q_next = std::move(cand);
        g_next = gc;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No descent available at working precision: Q is stationary.
      converged = true;
      break;
    }
    const double change = frobenius_norm(q_next - q);
    q = std::move(q_next);
    g = g_next;
    if (change < step_tol) converged = true;
  }
  return {std::move(q), std::sqrt(std::max(g, 0.0)), converged, it};
}

/// Upper bound on the GL(r)-aligned distance: the smaller of the GL and
/// Procrustes residuals.
inline double dist(const FactorPair& f, const FactorPair& target) {
  const double pr = procrustes_align(f, target).residual;
  try {
    return std::min(pr, gl_align(f, target).residual);
  } catch (const alignment_error&) {
    return pr;
  }
}

/// Smallest mu with ||U||_{2,inf}^2 <= mu r / d1 and ||V||_{2,inf}^2 <= mu r / d2.
/// Throws parameter_error unless U and V have orthonormal columns (1e-8).
inline double incoherence(const Matrix& u, const Matrix& v) {
  if (u.cols() != v.cols() || u.cols() == 0) {
    throw parameter_error("incoherence: U and V must share a positive rank");
  }
  auto check = [](const Matrix& m, const char* name) {
    const Matrix e = gram(m) - Matrix::identity(m.cols());
    if (frobenius_norm(e) > 1e-8) {
      throw parameter_error(std::string("incoherence: ") + name +
                            " does not have orthonormal columns");
    }
  };
  check(u, "U");
  check(v, "V");
  const double r = static_cast<double>(u.cols());
  const double tu = two_inf_norm(u);
  const double tv = two_inf_norm(v);
  return std::max(static_cast<double>(u.rows()) / r * tu * tu,
                  static_cast<double>(v.rows()) / r * tv * tv);
}

}  // namespace lrmc
