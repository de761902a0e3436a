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
#include <cstdint>
#include <string>
#include <vector>

#include "lrmc/core/error.hpp"
#include "lrmc/core/linalg.hpp"
#include "lrmc/core/random.hpp"
#include "lrmc/core/types.hpp"
#include "lrmc/sampling.hpp"

namespace lrmc {

/// Top-r singular triplets.
struct TruncatedSvd {
  Matrix u0;                  // d1 x r
  std::vector<double> sigma0; // descending
  Matrix v0;                  // d2 x r
};

struct TruncatedSvdOptions {
  /// Inputs with max(rows, cols) above this use the randomized range finder.
  std::size_t dense_limit = 512;
  std::size_t oversampling = 10;
  std::size_t power_iterations = 4;
  std::uint64_t seed = 0x7275736b;
};

namespace detail {

inline TruncatedSvd truncate(const Svd& s, std::size_t r) {
  return {leading_cols(s.u, r),
          std::vector<double>(s.sigma.begin(),
                              s.sigma.begin() + static_cast<std::ptrdiff_t>(r)),
          leading_cols(s.v, r)};
}

// Halko-Martinsson-Tropp randomized subspace iteration.
inline TruncatedSvd randomized_svd(const Matrix& m, std::size_t r,
                                   const TruncatedSvdOptions& opt) {
  const std::size_t ell =
      std::min(r + opt.oversampling, std::min(m.rows(), m.cols()));
  SplitMix64 rng(opt.seed);
  Matrix omega(m.cols(), ell);
  for (double& x : omega.values()) x = rng.normal();
  Matrix q = thin_qr(matmul(m, omega)).q;
  for (std::size_t it = 0; it < opt.power_iterations; ++it) {
    const Matrix z = thin_qr(matmul_tn(m, q)).q;
    q = thin_qr(matmul(m, z)).q;
  }
  // B = Q^T M is small (ell x cols); its SVD lifts back through Q.
  const Svd small = full_svd(matmul_tn(q, m));
  Svd lifted{matmul(q, small.u), small.sigma, small.v};
  // Re-apply the sign convention in the lifted basis.
  for (std::size_t k = 0; k < lifted.u.cols(); ++k) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < lifted.u.rows(); ++i) {
      if (std::abs(lifted.u(i, k)) > best) {
        best = std::abs(lifted.u(i, k));
        arg = i;
      }
    }
    if (lifted.u(arg, k) < 0.0) {
      for (std::size_t i = 0; i < lifted.u.rows(); ++i) lifted.u(i, k) = -lifted.u(i, k);
      for (std::size_t i = 0; i < lifted.v.rows(); ++i) lifted.v(i, k) = -lifted.v(i, k);
    }
  }
  return truncate(lifted, r);
}

}  // namespace detail

/// Rank-r truncated SVD T_r(m). Small inputs go through full_svd; large ones
/// through randomized subspace iteration.
inline TruncatedSvd truncated_svd(const Matrix& m, std::size_t r,
                                  const TruncatedSvdOptions& opt = {}) {
  if (r == 0 || r > std::min(m.rows(), m.cols())) {
    throw parameter_error("truncated_svd: rank " + std::to_string(r) +
                          " not in 1..min(rows, cols)");
  }
  if (std::max(m.rows(), m.cols()) <= opt.dense_limit) {
    return detail::truncate(full_svd(m), r);
  }
  return detail::randomized_svd(m, r, opt);
}

/// X0 = U0 Sigma0^{1/2}, Y0 = V0 Sigma0^{1/2} for T_r(m) = U0 Sigma0 V0^T.
inline FactorPair balanced_factors(const TruncatedSvd& t) {
  Matrix x = t.u0;
  Matrix y = t.v0;
  for (std::size_t k = 0; k < t.sigma0.size(); ++k) {
    const double root = std::sqrt(std::max(t.sigma0[k], 0.0));
    for (std::size_t i = 0; i < x.rows(); ++i) x(i, k) *= root;
    for (std::size_t i = 0; i < y.rows(); ++i) y(i, k) *= root;
  }
  return {std::move(x), std::move(y)};
}

namespace detail {
inline void check_init_inputs(const Matrix& m_star, const ObservationMask& mask,
                              std::size_t r) {
  if (m_star.rows() != mask.d1() || m_star.cols() != mask.d2()) {
    throw parameter_error("spectral_init: mask dimensions do not match M*");
  }
  if (mask.underdetermined(r)) {
    warn("|Omega| = " + std::to_string(mask.size()) + " < r(d1 + d2) = " +
         std::to_string(r * (mask.d1() + mask.d2())) +
         "; the completion problem is underdetermined");
  }
}
}  // namespace detail

/// Spectral initialization from p^{-1} P_Omega(M*).
inline FactorPair spectral_init(const Matrix& m_star, const ObservationMask& mask,
                                std::size_t r, const TruncatedSvdOptions& opt = {}) {
  detail::check_init_inputs(m_star, mask, r);
  return balanced_factors(truncated_svd(sampling_operator(mask).apply(m_star), r, opt));
}

inline FactorPair spectral_init(const GroundTruth& gt, const ObservationMask& mask,
                                std::size_t r, const TruncatedSvdOptions& opt = {}) {
  return spectral_init(gt.m_star, mask, r, opt);
}

/// M0^{(l)} = (p^{-1} P_{Omega_{-l}} + P_l)(M*).
inline Matrix loo_observed(const Matrix& m_star, const ObservationMask& mask,
                           const LooSelector& sel) {
  return loo_operator(mask, sel).apply(m_star);
}

/// Spectral initialization of the leave-one-out problem for selector l.
inline FactorPair loo_init(const Matrix& m_star, const ObservationMask& mask,
                           std::size_t r, const LooSelector& sel,
                           const TruncatedSvdOptions& opt = {}) {
  detail::check_init_inputs(m_star, mask, r);
  return balanced_factors(truncated_svd(loo_observed(m_star, mask, sel), r, opt));
}

inline FactorPair loo_init(const GroundTruth& gt, const ObservationMask& mask,
                           std::size_t r, const LooSelector& sel,
                           const TruncatedSvdOptions& opt = {}) {
  return loo_init(gt.m_star, mask, r, sel, opt);
}

}  // namespace lrmc
