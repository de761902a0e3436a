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

#include <cstdint>
#include <vector>

#include "lrmc/core/error.hpp"
#include "lrmc/core/linalg.hpp"
#include "lrmc/core/random.hpp"
#include "lrmc/core/types.hpp"
#include "lrmc/metrics.hpp"

namespace lrmc {

/// r values linearly spaced from 1 down to 1/kappa.
inline std::vector<double> linspace_spectrum(std::size_t r, double kappa) {
  std::vector<double> s(r);
  const double lo = 1.0 / kappa;
  for (std::size_t i = 0; i < r; ++i) {
    s[i] = r == 1 ? 1.0
                  : 1.0 + (lo - 1.0) * static_cast<double>(i) /
                              static_cast<double>(r - 1);
  }
  return s;
}

namespace detail {
// Orthonormal basis from the QR of a seeded +-1 Bernoulli matrix; fails on a
// (numerically) rank-deficient draw.
inline bool bernoulli_frame(std::size_t d, std::size_t r, SplitMix64& rng,
                            Matrix& out) {
  Matrix b(d, r);
  for (double& x : b.values()) x = rng.rademacher();
  ThinQr qr = thin_qr(b);
  const double scale = std::sqrt(static_cast<double>(d));
  for (std::size_t k = 0; k < r; ++k)
    if (std::abs(qr.r(k, k)) <= 1e-10 * scale) return false;
  out = std::move(qr.q);
  return true;
}
}  // namespace detail

/// Planted target: U*, V* from the QR of +-1 Bernoulli matrices and singular
/// values linspace(1, 1/kappa, r). A rank-deficient draw is retried with a
/// perturbed seed up to three times.
inline GroundTruth gen_ground_truth(const Dims& dims, double kappa,
                                    std::uint64_t seed) {
  dims.validate();
  if (!(kappa >= 1.0) || !std::isfinite(kappa)) {
    throw parameter_error("gen_ground_truth: kappa must be >= 1");
  }
  for (int attempt = 0; attempt <= 3; ++attempt) {
    SplitMix64 rng(attempt == 0 ? seed : mix64(seed + static_cast<std::uint64_t>(attempt)));
    Matrix u, v;
    if (!detail::bernoulli_frame(dims.d1, dims.r, rng, u)) continue;
    if (!detail::bernoulli_frame(dims.d2, dims.r, rng, v)) continue;
    GroundTruth gt;
    gt.sigma_star = linspace_spectrum(dims.r, kappa);
    gt.m_star = assemble(u, gt.sigma_star, v);
    gt.kappa = gt.sigma_star.front() / gt.sigma_star.back();
    gt.mu = incoherence(u, v);
    gt.u_star = std::move(u);
    gt.v_star = std::move(v);
    return gt;
  }
  throw decomposition_error("gen_ground_truth: Bernoulli frame rank deficient after retries");
}

}  // namespace lrmc
