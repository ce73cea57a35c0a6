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

#include "gaplab/label_groups.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <vector>

namespace gaplab {
namespace {

const double kTheta = (1.0 + std::sqrt(5.0)) / 2.0;
const double kAlpha = kTheta - 1.0;

std::vector<double> brute_force_frequency(double alpha, int cap) {
  std::vector<double> out;
  for (int n = -cap; n <= cap; ++n)
    for (int m = -2 * cap - 2; m <= 2 * cap + 2; ++m) {
      const double v = m + n * alpha;
      if (v >= -1e-12 && v <= 1.0 + 1e-12) out.push_back(std::clamp(v, 0.0, 1.0));
    }
  std::sort(out.begin(), out.end());
  std::vector<double> dedup;
  for (double v : out)
    if (dedup.empty() || v - dedup.back() > 1e-12) dedup.push_back(v);
  return dedup;
}

TEST(GroupForSystem, Dispatch) {
  const auto per = group_for_system(PeriodicSystem{{1, 2, 3, 4}});
  ASSERT_TRUE(std::holds_alternative<FractionGroup>(per.kind));
  EXPECT_EQ(std::get<FractionGroup>(per.kind).period, 4);

  const auto rot = group_for_system(RotationSystem{{kAlpha}});
  ASSERT_TRUE(std::holds_alternative<FrequencyModule>(rot.kind));
  EXPECT_EQ(std::get<FrequencyModule>(rot.kind).alpha, std::vector<double>{kAlpha});

  const auto cat = group_for_system(AffineSystem{IntMatrix{{2, 1}, {1, 1}}, {0, 0}});
  ASSERT_TRUE(std::holds_alternative<AffineLabels>(cat.kind));
  EXPECT_TRUE(std::get<AffineLabels>(cat.kind).kernel_basis.empty());
  EXPECT_TRUE(cat.notes.empty());
  EXPECT_EQ(enumerate_labels(cat), (std::vector<double>{0.0, 1.0}));

  const auto sub = group_for_system(SubstitutionSystem{substitutions::thue_morse()});
  EXPECT_TRUE(std::holds_alternative<PerronModule>(sub.kind));

  const auto ber = group_for_system(BernoulliSystem{{0, 8}, {0.5, 0.5}, 1});
  EXPECT_TRUE(std::holds_alternative<WeightRing>(ber.kind));
}

TEST(GroupForSystem, RootOfUnityIsFlagged) {
  const auto skew = group_for_system(AffineSystem{IntMatrix{{1, 0}, {1, 1}}, {kAlpha, 0}});
  EXPECT_FALSE(skew.notes.empty());
  const auto swap = group_for_system(AffineSystem{IntMatrix{{0, 1}, {1, 0}}, {0, 0}});
  EXPECT_FALSE(swap.notes.empty());
}

TEST(IntegerKernel, Examples) {
  EXPECT_TRUE(integer_kernel(IntMatrix{{2, 1}, {1, 1}}).empty());
  EXPECT_EQ(integer_kernel(IntMatrix{{1, 0}, {1, 1}}), (std::vector<std::vector<std::int64_t>>{{1, 0}}));
  EXPECT_EQ(integer_kernel(IntMatrix::identity(3)),
            (std::vector<std::vector<std::int64_t>>{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}));
}

TEST(IntegerKernel, SkewShiftLabels) {
  const AffineLabels g{{kAlpha, 0.3}, integer_kernel(IntMatrix{{1, 0}, {1, 1}})};
  ASSERT_EQ(g.frequencies().size(), 1u);
  EXPECT_DOUBLE_EQ(g.frequencies()[0], kAlpha);
  EXPECT_EQ(enumerate_labels(LabelGroup{g, {}}, {3, 8}), brute_force_frequency(kAlpha, 3));
}

TEST(DeriveSubstitution, Fibonacci) {
  const auto d = derive_substitution(substitutions::fibonacci(), 2);
  EXPECT_EQ(d.words, (std::vector<std::string>{"00", "01", "10"}));
  EXPECT_EQ(d.rules[d.index_of("10")], (std::vector<std::string>{"00"}));
  EXPECT_EQ(d.rules[d.index_of("00")], (std::vector<std::string>{"01", "10"}));
  EXPECT_EQ(d.rules[d.index_of("01")], (std::vector<std::string>{"01", "10"}));
  EXPECT_EQ(d.matrix, (IntMatrix{{0, 0, 1}, {1, 1, 0}, {1, 1, 0}}));
}

TEST(DeriveSubstitution, ThueMorseAndPeriodDoubling) {
  EXPECT_EQ(derive_substitution(substitutions::thue_morse(), 2).matrix,
            (IntMatrix{{0, 0, 1, 0}, {1, 1, 0, 1}, {1, 0, 1, 1}, {0, 1, 0, 0}}));
  EXPECT_EQ(derive_substitution(substitutions::period_doubling(), 2).matrix,
            (IntMatrix{{0, 0, 2}, {1, 1, 0}, {1, 1, 0}}));
}

TEST(DeriveSubstitution, LengthOneIsSubstitutionMatrix) {
  for (const auto& s : {substitutions::fibonacci(), substitutions::thue_morse(), substitutions::period_doubling()})
    EXPECT_EQ(derive_substitution(s, 1).matrix, s.matrix());
}

TEST(DeriveSubstitution, ColumnSumsArePrefixImageLengths) {
  const Substitution s("abc", {{'a', "abc"}, {'b', "ac"}, {'c', "b"}});
  for (std::size_t m = 1; m <= 4; ++m) {
    const auto d = derive_substitution(s, m);
    for (std::size_t j = 0; j < d.words.size(); ++j) {
      std::int64_t sum = 0;
      for (std::size_t i = 0; i < d.words.size(); ++i) sum += d.matrix(i, j);
      EXPECT_EQ(static_cast<std::size_t>(sum), s.image(d.words[j][0]).size());
    }
  }
}

TEST(Perron, Examples) {
  const auto fib = perron(substitutions::fibonacci().matrix());
  EXPECT_NEAR(fib.theta, kTheta, 1e-12);
  EXPECT_NEAR(fib.vector[0], kTheta - 1.0, 1e-12);
  EXPECT_NEAR(fib.vector[1], 2.0 - kTheta, 1e-12);
  const auto tm = perron(substitutions::thue_morse().matrix());
  EXPECT_NEAR(tm.theta, 2.0, 1e-12);
  EXPECT_NEAR(tm.vector[0], 0.5, 1e-12);
  const auto pd2 = perron(derive_substitution(substitutions::period_doubling(), 2).matrix);
  EXPECT_NEAR(pd2.theta, 2.0, 1e-12);
  for (double x : pd2.vector) EXPECT_NEAR(x, 1.0 / 3.0, 1e-12);
}

TEST(Perron, RejectsBadInput) {
  EXPECT_THROW(perron(IntMatrix{{1, -1}, {1, 1}}), ConfigError);
  EXPECT_THROW(perron(IntMatrix(2, 3)), ConfigError);
}

TEST(SubstitutionLabelGroup, FibonacciGeneratorsInZAlpha) {
  const auto g = substitution_label_group(substitutions::fibonacci());
  const auto& pm = std::get<PerronModule>(g.kind);
  for (double x : pm.generators) {
    bool found = false;
    for (int n = -10; n <= 10 && !found; ++n)
      for (int m = -10; m <= 10 && !found; ++m) found = std::abs(m + n * kAlpha - x) <= 1e-9;
    EXPECT_TRUE(found) << x;
  }
  // Rank-2 module containing 1 and alpha.
  const auto lat = std::get<RealLattice>(concretize(g));
  EXPECT_EQ(lat.unit_inverse, 1);
  ASSERT_EQ(lat.basis.size(), 1u);
  const double b = lat.basis[0];
  EXPECT_TRUE(std::abs(b - kAlpha) < 1e-9 || std::abs(b - (1 - kAlpha)) < 1e-9) << b;
}

TEST(SubstitutionLabelGroup, ThueMorseAndPeriodDoubling) {
  const auto tm = substitution_label_group(substitutions::thue_morse());
  std::vector<double> gens = std::get<PerronModule>(tm.kind).generators;
  for (double x : {0.5, 1.0 / 6.0, 1.0 / 3.0})
    EXPECT_TRUE(std::any_of(gens.begin(), gens.end(), [&](double g) { return std::abs(g - x) < 1e-12; })) << x;
  const auto pd = substitution_label_group(substitutions::period_doubling());
  gens = std::get<PerronModule>(pd.kind).generators;
  for (double x : {2.0 / 3.0, 1.0 / 3.0})
    EXPECT_TRUE(std::any_of(gens.begin(), gens.end(), [&](double g) { return std::abs(g - x) < 1e-12; })) << x;
  // Both are {k / (3 2^n)} truncated at n <= 8.
  for (const auto* g : {&tm, &pd}) {
    const auto labels = enumerate_labels(*g);
    ASSERT_EQ(labels.size(), 3u * 256u + 1u);
    for (std::size_t k = 0; k < labels.size(); ++k) EXPECT_DOUBLE_EQ(labels[k], k / 768.0);
  }
}

TEST(EnumerateLabels, Examples) {
  EXPECT_EQ(enumerate_labels(LabelGroup{FractionGroup{3}, {}}),
            (std::vector<double>{0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0}));
  EXPECT_EQ(enumerate_labels(LabelGroup{AffineLabels{{0, 0}, {}}, {}}), (std::vector<double>{0.0, 1.0}));
  const auto fm = enumerate_labels(LabelGroup{FrequencyModule{{kAlpha}}, {}}, {2, 8});
  EXPECT_EQ(fm, brute_force_frequency(kAlpha, 2));
  for (double x : {0.0, 1.0 - kAlpha, 2.0 * kAlpha - 1.0, kAlpha, 2.0 - 2.0 * kAlpha, 1.0})
    EXPECT_TRUE(std::any_of(fm.begin(), fm.end(), [&](double v) { return std::abs(v - x) < 1e-12; })) << x;
}

TEST(EnumerateLabels, WeightRing) {
  const auto half = enumerate_labels(LabelGroup{WeightRing{{0.5, 0.5}, 8}, {}});
  EXPECT_EQ(half.size(), 257u);
  const auto thirds = enumerate_labels(LabelGroup{WeightRing{{1.0 / 3.0, 2.0 / 3.0}, 2}, {}});
  EXPECT_EQ(thirds.size(), 10u);  // multiples of 1/9
  // Irrational weights go through the real reduction.
  const double w = 1.0 / std::sqrt(2.0);
  const auto irr = enumerate_labels(LabelGroup{WeightRing{{w, 1.0 - w}, 2}, {}}, {3, 2});
  EXPECT_EQ(irr.front(), 0.0);
  EXPECT_EQ(irr.back(), 1.0);
  EXPECT_TRUE(std::any_of(irr.begin(), irr.end(), [&](double v) { return std::abs(v - w) < 1e-12; }));
}

TEST(EnumerateLabels, ResourceLimit) {
  EXPECT_THROW(enumerate_labels(LabelGroup{FractionGroup{2000000}, {}}), ResourceError);
  EXPECT_THROW(enumerate_labels(LabelGroup{FrequencyModule{{0.1234567, 0.2718281, 0.3141592, 0.4142135}}, {}}, {40, 8}),
               ResourceError);
}

TEST(MatchLabel, Examples) {
  const auto fm = match_label(0.381966, LabelGroup{FrequencyModule{{0.6180339887}}, {}}, 1e-4);
  ASSERT_TRUE(fm);
  EXPECT_EQ(fm->representation, (std::vector<std::int64_t>{1, -1}));
  EXPECT_LT(fm->residual, 1e-6);

  const auto tm = match_label(0.3333, substitution_label_group(substitutions::thue_morse()), 1e-3);
  ASSERT_TRUE(tm);
  EXPECT_EQ(tm->representation, (std::vector<std::int64_t>{1, 0}));
  EXPECT_DOUBLE_EQ(tm->value, 1.0 / 3.0);

  const auto half = match_label(0.5, LabelGroup{FractionGroup{2}, {}}, 0.0);
  ASSERT_TRUE(half);
  EXPECT_EQ(half->value, 0.5);
  EXPECT_EQ(half->residual, 0.0);
  EXPECT_EQ(half->representation, std::vector<std::int64_t>{1});
}

TEST(MatchLabel, AbsentAndInvalid) {
  EXPECT_FALSE(match_label(0.25, LabelGroup{FractionGroup{3}, {}}, 1e-3));
  EXPECT_THROW(match_label(1.5, LabelGroup{FractionGroup{3}, {}}, 1e-3), ConfigError);
}

TEST(MatchLabel, TieBreakPrefersSmallCoefficients) {
  // With b = 0 every kernel vector gives the same value; (1, 0) must win.
  const LabelGroup g{AffineLabels{{0.0, 0.0}, {{1, 0}}}, {}};
  const auto m = match_label(1.0, g, 1e-9, {5, 8});
  ASSERT_TRUE(m);
  EXPECT_EQ(m->representation, (std::vector<std::int64_t>{1, 0}));
  // Equidistant neighbours 1/3 and 2/3 around 1/2: the smaller norm (k=1) wins.
  const auto mid = match_label(0.5, LabelGroup{FractionGroup{3}, {}}, 0.2);
  ASSERT_TRUE(mid);
  EXPECT_EQ(mid->representation, std::vector<std::int64_t>{1});
}

TEST(Factorization, PowerRule) {
  EXPECT_EQ(factorization_power(substitutions::fibonacci(), 3), 2u);
  EXPECT_EQ(factorization_power(substitutions::thue_morse(), 3), 1u);
}

TEST(Describe, TagAndParameters) {
  EXPECT_EQ(describe(LabelGroup{FractionGroup{4}, {}}), "FractionGroup(p=4)");
  EXPECT_EQ((LabelGroup{WeightRing{{0.5, 0.5}, 8}, {}}.tag()), "WeightRing");
  EXPECT_NE(describe(group_for_system(AffineSystem{IntMatrix{{1, 0}, {1, 1}}, {0.5, 0}})).find("kernel_basis=[(1,0)]"),
            std::string::npos);
}

}  // namespace
}  // namespace gaplab
