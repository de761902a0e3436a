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
#include <numeric>
#include <vector>

#include "lrmc/core/error.hpp"
#include "lrmc/core/matrix.hpp"
#include "lrmc/core/random.hpp"

namespace lrmc {

/// Thin singular value decomposition m = u * diag(sigma) * v^T.
///
/// For an m x n input, u is m x k and v is n x k with k = min(m, n).
struct Svd {
  Matrix u;
  std::vector<double> sigma;
  Matrix v;
};

namespace detail {

// Column-oriented work buffer: cols[j] is column j of the logical matrix.
using Columns = std::vector<std::vector<double>>;

inline Columns to_columns(const Matrix& a) {
  Columns c(a.cols(), std::vector<double>(a.rows()));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) c[j][i] = a(i, j);
  return c;
}

inline double col_dot(const std::vector<double>& a,
                      const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Replace near-null columns of `u` (flagged in `missing`) with unit vectors
// orthogonal to all others, by Gram-Schmidt on the canonical basis.
inline void complete_basis(Columns& u, const std::vector<bool>& missing) {
  const std::size_t m = u.empty() ? 0 : u[0].size();
  std::vector<bool> ok(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) ok[j] = !missing[j];
  std::size_t next_e = 0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (ok[j]) continue;
    while (next_e < m) {
      std::vector<double> e(m, 0.0);
      e[next_e++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t q = 0; q < u.size(); ++q) {
          if (!ok[q]) continue;
          const double h = col_dot(u[q], e);
          for (std::size_t i = 0; i < m; ++i) e[i] -= h * u[q][i];
        }
      }
      const double nrm = std::sqrt(col_dot(e, e));
      if (nrm > 0.5) {
        for (double& x : e) x /= nrm;
        u[j] = std::move(e);
        ok[j] = true;
        break;
      }
    }
  }
}

// One-sided Jacobi SVD for rows >= cols.
inline Svd jacobi_svd_tall(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Columns w = to_columns(a);
  Columns v(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) v[j][j] = 1.0;

  const double eps = std::numeric_limits<double>::epsilon();
  const double tol = std::sqrt(static_cast<double>(m)) * eps;
  // Columns below eps ||A||_F are roundoff; rotating among them never
  // settles. They end up in the null space and are completed below.
  double fro2 = 0.0;
  for (const auto& col : w) fro2 += col_dot(col, col);
  const double negligible = eps * eps * fro2;
  constexpr int max_sweeps = 100;
  bool converged = n <= 1;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = col_dot(w[p], w[p]);
        const double beta = col_dot(w[q], w[q]);
        const double gamma = col_dot(w[p], w[q]);
        if (alpha <= negligible || beta <= negligible) continue;
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double wp = w[p][i];
          const double wq = w[q][i];
          w[p][i] = c * wp - s * wq;
          w[q][i] = s * wp + c * wq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v[p][i];
          const double vq = v[q][i];
          v[p][i] = c * vp - s * vq;
          v[q][i] = s * vp + c * vq;
        }
      }
    }
    converged = !rotated;
  }
  if (!converged) {
    throw decomposition_error("full_svd: Jacobi sweeps did not converge");
  }

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = std::sqrt(col_dot(w[j], w[j]));

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return sigma[x] > sigma[y];
  });

  const double smax = n == 0 ? 0.0 : sigma[order[0]];
  const double null_tol = smax * static_cast<double>(std::max(m, n)) *
                          std::numeric_limits<double>::epsilon();
  Columns u(n);
  Columns vs(n);
  std::vector<double> sig(n);
  std::vector<bool> missing(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    sig[k] = sigma[j];
    vs[k] = v[j];
    if (sigma[j] <= null_tol || sigma[j] == 0.0) {
      missing[k] = true;
      u[k].assign(m, 0.0);
    } else {
      u[k] = w[j];
      for (double& x : u[k]) x /= sigma[j];
    }
  }
  complete_basis(u, missing);

  // Sign convention: largest-magnitude entry of each left vector is >= 0.
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (std::abs(u[k][i]) > best) {
        best = std::abs(u[k][i]);
        arg = i;
      }
    }
    if (u[k][arg] < 0.0) {
      for (double& x : u[k]) x = -x;
      for (double& x : vs[k]) x = -x;
    }
  }

  Svd out{Matrix(m, n), std::move(sig), Matrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < m; ++i) out.u(i, k) = u[k][i];
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = vs[k][i];
  }
  return out;
}

}  // namespace detail

/// Thin SVD by one-sided (Hestenes) Jacobi rotations.
///
/// Singular values are descending; each left singular vector has its
/// largest-magnitude entry (lowest index on ties) nonnegative. Deterministic
/// for a given input. Throws decomposition_error if the sweep cap is hit.
inline Svd full_svd(const Matrix& m) {
  if (m.rows() >= m.cols()) return detail::jacobi_svd_tall(m);
  // Wide input: decompose the transpose, then swap roles.
  Svd t = detail::jacobi_svd_tall(transpose(m));
  Svd out{std::move(t.v), std::move(t.sigma), std::move(t.u)};
  // Re-apply the sign convention to the new left factor.
  for (std::size_t k = 0; k < out.u.cols(); ++k) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < out.u.rows(); ++i) {
      if (std::abs(out.u(i, k)) > best) {
        best = std::abs(out.u(i, k));
        arg = i;
      }
    }
    if (out.u(arg, k) < 0.0) {
      for (std::size_t i = 0; i < out.u.rows(); ++i) out.u(i, k) = -out.u(i, k);
      for (std::size_t i = 0; i < out.v.rows(); ++i) out.v(i, k) = -out.v(i, k);
    }
  }
  return out;
}

/// u * diag(sigma) * v^T
inline Matrix reconstruct(const Svd& s) {
  Matrix us = s.u;
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t k = 0; k < us.cols(); ++k) us(i, k) *= s.sigma[k];
  return matmul_nt(us, s.v);
}

/// Householder thin QR of a tall matrix: a = q * r, q has orthonormal columns.
struct ThinQr {
  Matrix q;  // rows x cols
  Matrix r;  // cols x cols, upper triangular
};

inline ThinQr thin_qr(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (m < n) throw parameter_error("thin_qr: expects rows >= cols");
  detail::Columns w = detail::to_columns(a);
  detail::Columns refl(n);
  std::vector<double> tau(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double norm_x = 0.0;
    for (std::size_t i = k; i < m; ++i) norm_x += w[k][i] * w[k][i];
    norm_x = std::sqrt(norm_x);
    std::vector<double> h(m, 0.0);
    if (norm_x == 0.0) {
      refl[k] = std::move(h);
      continue;
    }
    const double alpha = w[k][k] >= 0.0 ? -norm_x : norm_x;
    for (std::size_t i = k; i < m; ++i) h[i] = w[k][i];
    h[k] -= alpha;
    double hh = 0.0;
    for (std::size_t i = k; i < m; ++i) hh += h[i] * h[i];
    tau[k] = hh == 0.0 ? 0.0 : 2.0 / hh;
    for (std::size_t j = k; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < m; ++i) s += h[i] * w[j][i];
      s *= tau[k];
      for (std::size_t i = k; i < m; ++i) w[j][i] -= s * h[i];
    }
    refl[k] = std::move(h);
  }

  ThinQr out{Matrix(m, n), Matrix(n, n)};
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i <= j; ++i) out.r(i, j) = w[j][i];

  // Accumulate Q = H_0 ... H_{n-1} applied to the first n unit vectors.
  detail::Columns q(n, std::vector<double>(m, 0.0));
  for (std::size_t j = 0; j < n; ++j) q[j][j] = 1.0;
  for (std::size_t kk = n; kk-- > 0;) {
    if (tau[kk] == 0.0) continue;
    const auto& h = refl[kk];
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = kk; i < m; ++i) s += h[i] * q[j][i];
      s *= tau[kk];
      for (std::size_t i = kk; i < m; ++i) q[j][i] -= s * h[i];
    }
  }
  // Make diag(r) nonnegative.
  for (std::size_t j = 0; j < n; ++j) {
    if (out.r(j, j) < 0.0) {
      for (std::size_t c = j; c < n; ++c) out.r(j, c) = -out.r(j, c);
      for (double& x : q[j]) x = -x;
    }
    for (std::size_t i = 0; i < m; ++i) out.q(i, j) = q[j][i];
  }
  return out;
}

/// Inverse of a square matrix by Gauss-Jordan with partial pivoting.
/// Throws parameter_error when a pivot underflows (numerically singular).
inline Matrix inverse(const Matrix& a) {
  if (a.rows() != a.cols()) throw parameter_error("inverse: not square");
  const std::size_t n = a.rows();
  Matrix w = a;
  Matrix inv = Matrix::identity(n);
  double scale = 0.0;
  for (double x : a.values()) scale = std::max(scale, std::abs(x));
  const double tiny = scale * static_cast<double>(n) *
                      std::numeric_limits<double>::epsilon();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t i = c + 1; i < n; ++i)
      if (std::abs(w(i, c)) > std::abs(w(piv, c))) piv = i;
    if (!(std::abs(w(piv, c)) > tiny)) {
      throw parameter_error("inverse: matrix is singular");
    }
    if (piv != c) {
      for (std::size_t j = 0; j < n; ++j) {
        std::swap(w(c, j), w(piv, j));
        std::swap(inv(c, j), inv(piv, j));
      }
    }
    const double d = 1.0 / w(c, c);
    for (std::size_t j = 0; j < n; ++j) {
      w(c, j) *= d;
      inv(c, j) *= d;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (i == c) continue;
      const double f = w(i, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) {
        w(i, j) -= f * w(c, j);
        inv(i, j) -= f * inv(c, j);
      }
    }
  }
  return inv;
}

/// Largest singular value. The smaller Gram matrix is decomposed exactly
/// when it is at most 32 x 32; otherwise power iteration runs until
/// successive Rayleigh quotients agree to 1e-10 relative.
inline double spectral_norm(const Matrix& m) {
  if (m.empty()) return 0.0;
  const Matrix g = m.rows() >= m.cols() ? gram(m) : gram(transpose(m));
  const std::size_t n = g.rows();
  if (n <= 32) return std::sqrt(std::max(full_svd(g).sigma.front(), 0.0));
  std::vector<double> x(n);
  SplitMix64 rng(0x5eed5eedULL);
  for (double& xi : x) xi = 1.0 + 0.1 * rng.uniform();
  auto normalize = [](std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    s = std::sqrt(s);
    if (s > 0.0)
      for (double& e : v) e /= s;
    return s;
  };
  normalize(x);
  std::vector<double> y(n);
  double lambda = 0.0;
  constexpr int max_iter = 100000;
  for (int it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) y[i] = dot(g.row(i), x);
    const double rq = std::inner_product(x.begin(), x.end(), y.begin(), 0.0);
    if (normalize(y) == 0.0) return 0.0;
    x.swap(y);
    if (it > 0 && std::abs(rq - lambda) <= 1e-10 * std::abs(rq)) {
      lambda = rq;
      break;
    }
    lambda = rq;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

/// Smallest singular value (of the thin SVD).
inline double min_singular_value(const Matrix& m) {
  if (m.empty()) return 0.0;
  const Svd s = full_svd(m);
  return s.sigma.back();
}

}  // namespace lrmc
