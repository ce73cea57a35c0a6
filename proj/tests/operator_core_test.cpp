// Copyright 2026 The gaplab Authors
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

#include "gaplab/operator_core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "oracles.hpp"

namespace gaplab {
namespace {

const double kSqrt2 = std::numbers::sqrt2;

TEST(Truncation, PacksWindow) {
  const std::vector<double> v{0, 0, 0};
  const auto t = build_truncation(v);
  EXPECT_EQ(t.size(), 3u);
  EXPECT_EQ(std::vector<double>(t.diagonal().begin(), t.diagonal().end()), v);
  const std::vector<double> one{5};
  EXPECT_EQ(build_truncation(one).diagonal()[0], 5.0);
}

TEST(Truncation, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(Truncation(std::vector<double>{}), ConfigError);
  EXPECT_THROW(Truncation(std::vector<double>{1.0, NAN}), ConfigError);
  EXPECT_THROW(Truncation(std::vector<double>{INFINITY}), ConfigError);
}

TEST(Truncation, GershgorinBounds) {
  const Truncation t({-1.5, 0.25, 3.0});
  EXPECT_EQ(t.lower_bound(), -3.5);
  EXPECT_EQ(t.upper_bound(), 5.0);
}

TEST(DirichletSolution, FreeAtZeroEnergyIsPeriodFour) {
  const auto sol = dirichlet_solution(Truncation(std::vector<double>(4, 0.0)), 0.0);
  const double expected[] = {0, 1, 0, -1, 0, 1};
  ASSERT_EQ(sol.size(), 6u);
  for (int n = 0; n < 6; ++n) EXPECT_EQ(sol.value(n), expected[n]) << n;
  EXPECT_TRUE(sol.is_zero(0));
  EXPECT_EQ(sol.sign(0), 1);
  EXPECT_EQ(sol.sign(2), 1);  // sgn(0) = +1
  EXPECT_EQ(sol.sign(3), -1);
}

TEST(DirichletSolution, FreeAtBandEdgeIsLinear) {
  const std::size_t n = 40;
  const auto sol = dirichlet_solution(Truncation(std::vector<double>(n, 0.0)), 2.0);
  for (std::size_t k = 0; k <= n + 1; ++k) EXPECT_DOUBLE_EQ(sol.value(k), static_cast<double>(k));
}

TEST(DirichletSolution, GrowthRateOutsideBand) {
  const auto sol = dirichlet_solution(Truncation(std::vector<double>(20, 0.0)), 3.0);
  const double slope = (sol.logmag(21) - sol.logmag(1)) / 20.0;
  EXPECT_NEAR(slope, std::log((3.0 + std::sqrt(5.0)) / 2.0), 0.05 * std::log(2.618));
}

TEST(DirichletSolution, NoConsecutiveZeros) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto diag = oracle::uniform_vector(rng, 30, -1, 1);
    const auto sol = dirichlet_solution(Truncation(diag), std::uniform_real_distribution<double>(-3, 3)(rng));
    for (std::size_t k = 0; k + 1 < sol.size(); ++k) EXPECT_FALSE(sol.is_zero(k) && sol.is_zero(k + 1));
  }
}

TEST(DirichletSolution, StaysFiniteDeepInGap) {
  const std::size_t n = 100000;
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i % 2 ? 3.0 : 0.0;
  // Midpoint of the periodic (0,3) gap and far outside the spectrum.
  for (double e : {1.5, 50.0, -1e6}) {
    const auto sol = dirichlet_solution(Truncation(v), e);
    for (double lm : sol.logmags().subspan(1)) ASSERT_TRUE(std::isfinite(lm)) << e;
  }
}

TEST(DirichletSolution, RejectsNonFiniteEnergy) {
  EXPECT_THROW(dirichlet_solution(Truncation({0.0}), NAN), ConfigError);
  EXPECT_THROW(dirichlet_solution(Truncation({0.0}), 1e300), RangeError);
}

TEST(SignFlipCount, SmallFreeExamples) {
  const Truncation t(std::vector<double>(3, 0.0));
  EXPECT_EQ(sign_flip_count(dirichlet_solution(t, 1.0), 3), 1u);
  EXPECT_EQ(sign_flip_count(dirichlet_solution(t, -3.0), 3), 3u);
  EXPECT_EQ(sign_flip_count(dirichlet_solution(t, 3.0), 3), 0u);
  const std::vector<double> diag(3, 0.0);
  EXPECT_EQ(oracle::dense_count_above(diag, 1.0), 1u);
  EXPECT_EQ(oracle::dense_count_above(diag, -3.0), 3u);
  EXPECT_EQ(oracle::dense_count_above(diag, 3.0), 0u);
}

TEST(SignFlipCount, ExactEigenvalueDropsLastPair) {
  // u(4) = 0 at E = 0 for N = 3: 0 is an eigenvalue and is not counted.
  const Truncation t(std::vector<double>(3, 0.0));
  const auto sol = dirichlet_solution(t, 0.0);
  EXPECT_TRUE(sol.is_zero(4));
  EXPECT_EQ(sign_flip_count(sol, 3), 1u);
  EXPECT_EQ(count_eigenvalues_above(t, 0.0), 1u);
}

TEST(SignFlipCount, RequiresSolutionThroughNPlusOne) {
  const auto sol = dirichlet_solution(Truncation(std::vector<double>(3, 0.0)), 1.0);
  EXPECT_THROW(sign_flip_count(sol, 4), ConfigError);
}

TEST(CountEigenvaluesAbove, GershgorinExtremes) {
  std::mt19937_64 rng(3);
  const auto diag = oracle::uniform_vector(rng, 25, -2, 2);
  const Truncation t(diag);
  EXPECT_EQ(count_eigenvalues_above(t, t.lower_bound() - 1e-9), 25u);
  EXPECT_EQ(count_eigenvalues_above(t, t.upper_bound() + 1e-9), 0u);
}

TEST(CountEigenvaluesAbove, MatchesSignFlipsAndDenseOracle) {
  std::mt19937_64 rng(5);
  for (std::size_t n = 1; n <= 60; ++n) {
    const auto diag = oracle::uniform_vector(rng, n, -1, 1);
    const Truncation t(diag);
    for (int k = 0; k < 10; ++k) {
      const double e = std::uniform_real_distribution<double>(-3.2, 3.2)(rng);
      const auto c = count_eigenvalues_above(t, e);
      EXPECT_EQ(c, sign_flip_count(dirichlet_solution(t, e), n));
      EXPECT_EQ(c, oracle::dense_count_above(diag, e)) << "n=" << n << " E=" << e;
    }
  }
}

TEST(CountEigenvaluesAbove, BatchedAgreesWithScalar) {
  std::mt19937_64 rng(9);
  for (std::size_t n : {1u, 2u, 17u, 100u, 3001u}) {
    const auto diag = oracle::uniform_vector(rng, n, -4, 4);
    const Truncation t(diag);
    auto energies = oracle::uniform_vector(rng, 77, -7, 7);
    energies.push_back(1e12);  // outside the strided-safe range
    energies.push_back(-1e12);
    const auto batched = count_eigenvalues_above(t, energies);
    for (std::size_t i = 0; i < energies.size(); ++i)
      EXPECT_EQ(batched[i], count_eigenvalues_above(t, energies[i])) << n << " " << energies[i];
  }
}

TEST(Eigenvalues, FreeClosedForms) {
  const auto ev3 = eigenvalues(Truncation(std::vector<double>(3, 0.0)), 1e-10);
  ASSERT_EQ(ev3.size(), 3u);
  EXPECT_NEAR(ev3[0], -kSqrt2, 1e-10);
  EXPECT_NEAR(ev3[1], 0.0, 1e-10);
  EXPECT_NEAR(ev3[2], kSqrt2, 1e-10);
  const auto ev5 = eigenvalues(Truncation(std::vector<double>(5, 0.0)));
  const double expected[] = {-std::sqrt(3.0), -1.0, 0.0, 1.0, std::sqrt(3.0)};
  const auto dense = oracle::dense_eigenvalues(std::vector<double>(5, 0.0));
  for (int j = 0; j < 5; ++j) {
    EXPECT_NEAR(ev5[j], expected[j], 1e-10);
    EXPECT_NEAR(ev5[j], dense[j], 1e-10);
  }
}

TEST(Eigenvalues, OneByOne) {
  const auto ev = eigenvalues(Truncation({5.0}));
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_NEAR(ev[0], 5.0, 1e-10);
}

TEST(Eigenvalues, AgreeWithDenseSolverAndAreSimple) {
  std::mt19937_64 rng(21);
  for (std::size_t n = 2; n <= 60; n += 7) {
    const auto diag = oracle::uniform_vector(rng, n, -1, 1);
    const auto ev = eigenvalues(Truncation(diag), 1e-10);
    const auto dense = oracle::dense_eigenvalues(diag);
    for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(ev[j], dense[j], 1e-9);
    for (std::size_t j = 1; j < n; ++j) EXPECT_GT(ev[j] - ev[j - 1], 2e-10);
    EXPECT_GE(ev.front(), -3.0);
    EXPECT_LE(ev.back(), 3.0);
  }
}

TEST(Eigenvalues, RejectsBadToleranceAndRoundCap) {
  const Truncation t(std::vector<double>(4, 0.0));
  EXPECT_THROW(eigenvalues(t, 0.0), ConfigError);
  EXPECT_THROW(eigenvalues(t, EigenOptions{1e-10, 3}), NumericalError);
}

TEST(CharPolyValue, SmallExamples) {
  EXPECT_EQ(char_poly_value(Truncation(std::vector<double>(2, 0.0)), 0.0, 2), -1.0);
  EXPECT_EQ(char_poly_value(Truncation(std::vector<double>(2, 0.0)), 2.0, 1), 2.0);
}

TEST(CharPolyValue, MatchesDenseDeterminant) {
  std::mt19937_64 rng(17);
  const auto diag = oracle::uniform_vector(rng, 10, -1, 1);
  const double got = char_poly_value(Truncation(diag), 0.7, 10);
  const double want = oracle::dense_det(diag, 0.7, 10);
  EXPECT_LE(std::abs(got - want), 1e-8 * std::max(1.0, std::abs(want)));
}

TEST(CharPolyValue, RangeChecks) {
  const Truncation t(std::vector<double>(3000, 0.0));
  EXPECT_THROW(char_poly_value(t, 0.0, 0), ConfigError);
  EXPECT_THROW(char_poly_value(t, 0.0, 3001), ConfigError);
  EXPECT_THROW(char_poly_value(t, 100.0, 3000), RangeError);
}

TEST(TransferProduct, EmptyProductIsIdentity) {
  const std::vector<double> v{1.0, 2.0};
  const auto p = transfer_product(v, 0.3, 0);
  EXPECT_EQ(p.matrix.entries, (std::array<double, 4>{1, 0, 0, 1}));
  EXPECT_EQ(p.log_norm, 0.0);
}

TEST(TransferProduct, HyperbolicGrowth) {
  const std::vector<double> v(30, 0.0);
  const auto p = transfer_product(v, 3.0, 30);
  EXPECT_NEAR(p.log_norm / 30.0, std::log((3.0 + std::sqrt(5.0)) / 2.0), 0.02 * 0.9624);
  EXPECT_TRUE(p.unimodular());
}

TEST(TransferProduct, EllipticBounded) {
  for (std::size_t n : {200u, 1000u, 5001u}) {
    const std::vector<double> v(n, 0.0);
    const auto p = transfer_product(v, 0.0, n);
    EXPECT_LE(std::abs(p.log_norm / n), 0.05);
  }
}

TEST(TransferProduct, MatchesSolutionRecursion) {
  // (u(n+1), u(n))^T = A_E^n (u(1), u(0))^T.
  std::mt19937_64 rng(8);
  const auto v = oracle::uniform_vector(rng, 12, -1, 1);
  const double e = 0.4;
  const auto p = transfer_product(v, e, 12);
  const auto sol = dirichlet_solution(Truncation(v), e);
  const double scale = std::exp(p.log_norm);
  EXPECT_NEAR(p.matrix(0, 0) * scale, sol.value(13), 1e-9 * std::max(1.0, std::abs(sol.value(13))));
  EXPECT_NEAR(p.matrix(1, 0) * scale, sol.value(12), 1e-9 * std::max(1.0, std::abs(sol.value(12))));
}

TEST(TransferProduct, RejectsShortWindow) {
  const std::vector<double> v{1.0};
  EXPECT_THROW(transfer_product(v, 0.0, 2), ConfigError);
}

}  // namespace
}  // namespace gaplab
