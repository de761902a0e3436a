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


#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "lrmc/lrmc.hpp"
#include "test_util.hpp"

namespace lrmc {
namespace {

using test::eigen_singular_values;
using test::gaussian;
using test::max_abs_diff;
using test::to_eigen;

TEST(Random, Mix64MatchesReferenceSplitMix) {
  // First outputs of the reference SplitMix64 generator seeded with 0.
  EXPECT_EQ(mix64(0), 0xe220a8397b1dcdafULL);
  EXPECT_EQ(mix64(0x9e3779b97f4a7c15ULL), 0x6e789e6aa1b965f4ULL);
}

TEST(Random, Mix64IsInjectiveOnASample) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t k = 0; k < 100000; ++k) seen.insert(mix64(k));
  EXPECT_EQ(seen.size(), 100000u);
}

TEST(Random, StreamsAreDeterministic) {
  SplitMix64 a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
  }
}

TEST(Random, NormalMoments) {
  SplitMix64 rng(7);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    s += v;
    s2 += v * v;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Random, RademacherIsBalanced) {
  SplitMix64 rng(9);
  int plus = 0;
  for (int i = 0; i < 100000; ++i) plus += rng.rademacher() > 0;
  EXPECT_NEAR(plus / 100000.0, 0.5, 0.01);
}

TEST(Matrix, ProductsMatchEigen) {
  const Matrix a = gaussian(7, 4, 1), b = gaussian(4, 5, 2), c = gaussian(7, 5, 3);
  EXPECT_LT(max_abs_diff(matmul(a, b), test::from_eigen(to_eigen(a) * to_eigen(b))), 1e-13);
  EXPECT_LT(max_abs_diff(matmul_tn(a, c), test::from_eigen(to_eigen(a).transpose() * to_eigen(c))), 1e-13);
  const Matrix d = gaussian(6, 4, 4);
  EXPECT_LT(max_abs_diff(matmul_nt(a, d), test::from_eigen(to_eigen(a) * to_eigen(d).transpose())), 1e-13);
  EXPECT_EQ(transpose(transpose(b)), b);
  EXPECT_LT(max_abs_diff(gram(a), test::from_eigen(to_eigen(a).transpose() * to_eigen(a))), 1e-13);
  EXPECT_NEAR(inner(a, a), to_eigen(a).squaredNorm(), 1e-12);
  EXPECT_NEAR(frobenius_norm(a), to_eigen(a).norm(), 1e-13);
}

TEST(Matrix, TwoInfNormIsLargestRowNorm) {
  const Matrix m = Matrix::from_rows({{3, 4}, {1, 1}, {0, -6}});
  EXPECT_DOUBLE_EQ(two_inf_norm(m), 6.0);
}

TEST(Matrix, StackingRoundTrips) {
  const Matrix a = gaussian(3, 2, 4), b = gaussian(5, 2, 5);
  const Matrix s = vstack(a, b);
  EXPECT_EQ(row_block(s, 0, 3), a);
  EXPECT_EQ(row_block(s, 3, 5), b);
  EXPECT_EQ(leading_cols(s, 1).cols(), 1u);
}

TEST(Matrix, ShapeMismatchThrows) {
  Matrix a(2, 3), b(3, 2);
  EXPECT_THROW(a += b, parameter_error);
  EXPECT_THROW(matmul(a, a), parameter_error);
  EXPECT_THROW(Matrix::from_rows({{1, 2}, {3}}), parameter_error);
}

class SvdShapes : public ::testing::TestWithParam<std::pair<std::size_t, std::size_t>> {};

TEST_P(SvdShapes, AgreesWithEigenOracle) {
  const auto [m, n] = GetParam();
  const Matrix a = gaussian(m, n, 100 + m * 7 + n);
  const Svd s = full_svd(a);
  const auto ref = eigen_singular_values(a);
  ASSERT_EQ(s.sigma.size(), ref.size());
  for (std::size_t k = 0; k < ref.size(); ++k) EXPECT_NEAR(s.sigma[k], ref[k], 1e-12 * ref[0]);
  EXPECT_LT(max_abs_diff(reconstruct(s), a), 1e-12);
  const std::size_t k = std::min(m, n);
  EXPECT_LT(max_abs_diff(gram(s.u), Matrix::identity(k)), 1e-12);
  EXPECT_LT(max_abs_diff(gram(s.v), Matrix::identity(k)), 1e-12);
  EXPECT_TRUE(std::is_sorted(s.sigma.rbegin(), s.sigma.rend()));
}

INSTANTIATE_TEST_SUITE_P(Core, SvdShapes,
                         ::testing::Values(std::pair<std::size_t, std::size_t>{1, 1},
                                           std::pair<std::size_t, std::size_t>{5, 5},
                                           std::pair<std::size_t, std::size_t>{30, 7},
                                           std::pair<std::size_t, std::size_t>{7, 30},
                                           std::pair<std::size_t, std::size_t>{60, 40}));

TEST(Svd, SignConventionHolds) {
  const Svd s = full_svd(gaussian(12, 5, 77));
  for (std::size_t k = 0; k < s.u.cols(); ++k) {
    double best = 0.0;
    for (std::size_t i = 0; i < s.u.rows(); ++i)
      if (std::abs(s.u(i, k)) > std::abs(best)) best = s.u(i, k);
    EXPECT_GE(best, 0.0);
  }
}

TEST(Svd, RankDeficientInputGetsOrthonormalCompletion) {
  const Matrix b = gaussian(10, 2, 5);
  const Matrix a = matmul(b, gaussian(2, 4, 6));  // rank 2
  const Svd s = full_svd(a);
  EXPECT_LT(s.sigma[2], 1e-12);
  EXPECT_LT(s.sigma[3], 1e-12);
  EXPECT_LT(max_abs_diff(gram(s.u), Matrix::identity(4)), 1e-12);
  EXPECT_LT(max_abs_diff(reconstruct(s), a), 1e-12);
}

TEST(Svd, ExactlyLowRankInputsConverge) {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const std::size_t m = 4 + seed % 15, n = 3 + seed % 11, r = 1 + seed % 3;
    const Matrix a = matmul_nt(gaussian(m, r, seed), gaussian(n, r, seed + 999));
    Svd s;
    ASSERT_NO_THROW(s = full_svd(a)) << "seed " << seed;
    EXPECT_LT(max_abs_diff(reconstruct(s), a), 1e-12 * (1.0 + frobenius_norm(a)));
    const std::size_t k = std::min(m, n);
    EXPECT_LT(max_abs_diff(gram(s.u), Matrix::identity(k)), 1e-12);
    EXPECT_LT(max_abs_diff(gram(s.v), Matrix::identity(k)), 1e-12);
  }
}

TEST(Svd, ZeroMatrix) {
  const Svd s = full_svd(Matrix(4, 3));
  for (double v : s.sigma) EXPECT_EQ(v, 0.0);
  EXPECT_LT(max_abs_diff(gram(s.u), Matrix::identity(3)), 1e-12);
}

TEST(Svd, IsDeterministic) {
  const Matrix a = gaussian(20, 6, 3);
  const Svd s1 = full_svd(a), s2 = full_svd(a);
  EXPECT_EQ(s1.u, s2.u);
  EXPECT_EQ(s1.v, s2.v);
  EXPECT_EQ(s1.sigma, s2.sigma);
}

TEST(Qr, FactorsAndOrthonormality) {
  const Matrix a = gaussian(15, 6, 8);
  const ThinQr qr = thin_qr(a);
  EXPECT_LT(max_abs_diff(matmul(qr.q, qr.r), a), 1e-13);
  EXPECT_LT(max_abs_diff(gram(qr.q), Matrix::identity(6)), 1e-13);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_GE(qr.r(i, i), 0.0);
    for (std::size_t j = 0; j < i; ++j) EXPECT_EQ(qr.r(i, j), 0.0);
  }
  EXPECT_THROW(thin_qr(Matrix(2, 3)), parameter_error);
}

TEST(Inverse, MatchesEigenAndRejectsSingular) {
  const Matrix a = gaussian(6, 6, 9);
  EXPECT_LT(max_abs_diff(inverse(a), test::from_eigen(to_eigen(a).inverse())), 1e-10);
  Matrix sing = Matrix::from_rows({{1, 2}, {2, 4}});
  EXPECT_THROW(inverse(sing), parameter_error);
}

TEST(SpectralNorm, MatchesEigenOracle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix small = gaussian(40, 5, seed);
    EXPECT_NEAR(spectral_norm(small), eigen_singular_values(small)[0], 1e-10);
    const Matrix wide = gaussian(50, 45, seed + 10);
    EXPECT_NEAR(spectral_norm(wide), eigen_singular_values(wide)[0], 1e-6);
  }
  EXPECT_EQ(spectral_norm(Matrix(3, 3)), 0.0);
}

TEST(Types, DimsValidation) {
  EXPECT_NO_THROW((Dims{4, 3, 3}.validate()));
  EXPECT_THROW((Dims{4, 3, 4}.validate()), parameter_error);
  EXPECT_THROW((Dims{0, 3, 1}.validate()), parameter_error);
  EXPECT_THROW((Dims{4, 3, 0}.validate()), parameter_error);
}

TEST(Types, FactorPairSplitInvertsStack) {
  const FactorPair f(gaussian(5, 2, 1), gaussian(3, 2, 2));
  EXPECT_EQ(FactorPair::split(f.stacked(), 5), f);
  EXPECT_THROW(FactorPair(Matrix(2, 2), Matrix(2, 3)), parameter_error);
}

}  // namespace
}  // namespace lrmc
