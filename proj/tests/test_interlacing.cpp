#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pushblock/errors.hpp"
#include "pushblock/families.hpp"
#include "pushblock/interlacing.hpp"

using namespace pushblock;

namespace {

OrthoSystem chebyshev_system() { return build_polynomials(chebyshev_rates(), 40, SpectralMeasure::jacobi(-0.5, -0.5)); }
OrthoSystem jacobi_system() { return build_polynomials(jacobi_rates(0.5, 1.5), 40, SpectralMeasure::jacobi(0.5, 1.5)); }

}  // namespace

TEST(Interlace, Examples) {
  EXPECT_TRUE(interlace_check(InterlaceKind::NNPlus1, {0, 2}, {1}));
  EXPECT_FALSE(interlace_check(InterlaceKind::NNPlus1, {0, 1}, {1}));
  for (int n = 1; n <= 5; ++n) {
    EXPECT_TRUE(interlace_check(InterlaceKind::NNPlus1, packed(n + 1), packed(n)));
    EXPECT_TRUE(interlace_check(InterlaceKind::NN, packed(n), packed(n)));
  }
  EXPECT_TRUE(interlace_check(InterlaceKind::NN, {1, 4}, {0, 2}));
  EXPECT_FALSE(interlace_check(InterlaceKind::NN, {1, 4}, {1, 5}));
  EXPECT_THROW(interlace_check(InterlaceKind::NN, {1, 4}, {1}), DomainError);
}

TEST(Interlace, DeterminantAgreesWithInequalities) {
  for (int n = 1; n <= 3; ++n) {
    for (const auto& y : all_chambers(n, 6)) {
      for (const auto& x : all_chambers(n + 1, 7)) {
        double d = interlace_det(InterlaceKind::NNPlus1, x, y);
        EXPECT_TRUE(d == 0.0 || d == 1.0);
        EXPECT_EQ(d == 1.0, interlace_check(InterlaceKind::NNPlus1, x, y));
      }
      for (const auto& x : all_chambers(n, 7)) {
        double d = interlace_det(InterlaceKind::NN, x, y);
        EXPECT_TRUE(d == 0.0 || d == 1.0);
        EXPECT_EQ(d == 1.0, interlace_check(InterlaceKind::NN, x, y));
      }
    }
  }
}

TEST(Interlace, NeighbourEnumerationsAreConsistent) {
  for (const auto& x : all_chambers(3, 7))
    for (const auto& y : below_nn1(x)) EXPECT_TRUE(interlace_check(InterlaceKind::NNPlus1, x, y));
  for (const auto& y : all_chambers(2, 5)) {
    for (const auto& x : above_nn1(y, 8)) {
      EXPECT_TRUE(interlace_check(InterlaceKind::NNPlus1, x, y));
      auto down = below_nn1(x);
      EXPECT_NE(std::find(down.begin(), down.end(), y), down.end());
    }
    for (const auto& x : above_nn(y, 8)) EXPECT_TRUE(interlace_check(InterlaceKind::NN, x, y));
  }
}

TEST(KarlinMcGregor, OnePointIsThePolynomial) {
  auto sys = chebyshev_system();
  for (long nu = 0; nu < 6; ++nu) EXPECT_NEAR(km_polynomial(sys, {nu}, {0.8}, false), sys.Q(nu, 0.8), 1e-14);
}

TEST(KarlinMcGregor, PackedTwoPointIsConstant) {
  auto sys = chebyshev_system();
  for (auto x : {std::vector<double>{0.1, 0.9}, {0.5, 1.7}, {1.0, 1.0 + 1e-9}})
    EXPECT_NEAR(km_polynomial(sys, {0, 1}, x, false), -1.0, 1e-9);
}

TEST(KarlinMcGregor, SwappingIndicesFlipsSign) {
  auto sys = jacobi_system();
  std::vector<double> x{0.2, 0.9, 1.6};
  double a = km_polynomial(sys, {0, 2, 5}, x, true);
  double b = km_polynomial(sys, {2, 0, 5}, x, true);
  EXPECT_NEAR(a, -b, 1e-12 * std::abs(a));
}

TEST(KarlinMcGregor, CoincidentPointsNeedConfluentPath) {
  auto sys = chebyshev_system();
  EXPECT_THROW(km_polynomial(sys, {0, 2}, {0.5, 0.5}, false, false), SingularityError);
  double near = km_polynomial(sys, {0, 2}, {0.5, 0.5 + 1e-4}, false);
  double at = km_polynomial(sys, {0, 2}, {0.5, 0.5}, false);
  EXPECT_NEAR(near, at, 1e-3);
}

TEST(Harmonic, ChebyshevValues) {
  auto sys = chebyshev_system();
  Harmonic h(sys);
  for (long x = 0; x <= 10; ++x) EXPECT_NEAR(h.h({1, 1}, {x}), 1.0 + 2.0 * x, 1e-12);
  EXPECT_NEAR(h.h({1, 2}, {0, 1}), 1.0, 1e-14);
  EXPECT_NEAR(h.h({1, 2}, {0, 2}), 4.0, 1e-14);
  EXPECT_NEAR(confluent_at_zero(sys, {0, 1}, false), 1.0, 1e-12);
  EXPECT_NEAR(confluent_at_zero(sys, {0, 2}, false), 4.0, 1e-12);
}

TEST(Harmonic, PackedTelescopesOverSingletonLinks) {
  auto sys = jacobi_system();
  Harmonic h(sys);
  EXPECT_DOUBLE_EQ(h.h({0, 1}, {0}), 1.0);
  for (int k = 2; k <= 8; ++k) {
    auto level = LevelLabel::from_order(k), below = LevelLabel::from_order(k - 1);
    double expect = link_weight(h, level, packed(below.size())) * h.h(below, packed(below.size()));
    EXPECT_NEAR(h.h(level, packed(level.size())), expect, 1e-12 * expect) << k;
  }
  auto cheb = chebyshev_system();
  Harmonic hc(cheb);
  EXPECT_NEAR(hc.h({1, 1}, {0}), 1.0, 1e-15);
  EXPECT_NEAR(hc.h({1, 2}, {0, 1}), 1.0, 1e-15);
}

TEST(Harmonic, RecursionEqualsConfluentDeterminant) {
  auto sys = jacobi_system();
  Harmonic h(sys);
  for (int n = 1; n <= 4; ++n)
    for (const auto& nu : all_chambers(n, 10)) {
      double ref = confluent_at_zero(sys, nu, false);
      EXPECT_NEAR(h.h({n - 1, n}, nu), ref, 1e-9 * std::max(1.0, std::abs(ref)));
    }
}

TEST(Harmonic, GeneratorAnnihilatesTopLevel) {
  // Σ_i L_{x_i} h_{1,2} = 0 at interior points of W^2.
  auto rates = jacobi_rates(0.5, 1.5);
  auto sys = jacobi_system();
  Harmonic h(sys);
  for (const auto& x : all_chambers(2, 8)) {
    if (x[0] == 0 || x[1] - x[0] < 2) continue;
    double base = h.h({1, 2}, x), g = 0;
    for (size_t i = 0; i < 2; ++i) {
      auto up = x, down = x;
      ++up[i];
      --down[i];
      g += rates.lambda(x[i]) * (h.h({1, 2}, up) - base) + rates.mu(x[i]) * (h.h({1, 2}, down) - base);
    }
    EXPECT_NEAR(g, 0.0, 1e-8 * std::max(1.0, base));
  }
}

TEST(Links, ExampleRows) {
  auto sys = chebyshev_system();
  Harmonic h(sys);
  auto row = link_kernel(h, {1, 2}, {0, 1});
  ASSERT_EQ(row.size(), 1u);
  EXPECT_EQ(row[0].first, Chamber{0});
  EXPECT_NEAR(row[0].second, 1.0, 1e-15);
  row = link_kernel(h, {1, 2}, {0, 2});
  ASSERT_EQ(row.size(), 2u);
  EXPECT_NEAR(row[0].second, 0.25, 1e-14);
  EXPECT_NEAR(row[1].second, 0.75, 1e-14);
}

TEST(Links, RowsAreProbabilityVectorsOnTheInterlacingSet) {
  auto sys = jacobi_system();
  Harmonic h(sys);
  for (int k = 2; k <= 6; ++k) {
    auto level = LevelLabel::from_order(k);
    for (const auto& nu : all_chambers(level.size(), 7)) {
      auto row = link_kernel(h, level, nu);
      auto expect = level.dual() ? below_nn(nu) : below_nn1(nu);
      ASSERT_EQ(row.size(), expect.size());
      double total = 0;
      for (size_t i = 0; i < row.size(); ++i) {
        EXPECT_EQ(row[i].first, expect[i]);
        EXPECT_GT(row[i].second, 0.0);
        total += row[i].second;
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
    }
  }
}

TEST(Branching, ChebyshevSmallCase) {
  auto sys = chebyshev_system();
  // (Q_1(x) − Q_0(x))/x = −π̂_0 Q̂_0(x)/λ0 = −1.
  for (double x : {0.3, 1.1}) EXPECT_NEAR((sys.Q(1, x) - 1.0) / x, -1.0, 1e-14);
  auto r = branching_check(sys, {0, 1}, {0.7});
  EXPECT_LT(r.restriction, 1e-12);
  EXPECT_LT(r.dual, 1e-12);
}

TEST(Branching, RandomChambersAndPoints) {
  auto sys = jacobi_system();
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.05, 1.95);
  for (int n = 1; n <= 3; ++n)
    for (const auto& nu : all_chambers(n + 1, 8)) {
      std::vector<double> x(static_cast<size_t>(n));
      for (auto& v : x) v = u(rng);
      auto r = branching_check(sys, nu, x);
      EXPECT_LT(r.restriction, 1e-9);
      EXPECT_LT(r.dual, 1e-9);
    }
}

TEST(SampleDown, PackedTopGivesPackedPattern) {
  auto sys = jacobi_system();
  Harmonic h(sys);
  Rng rng(1);
  for (int depth = 1; depth <= 5; ++depth) {
    auto p = sample_down(packed(depth), h, depth, rng);
    EXPECT_TRUE(p.valid());
    for (size_t k = 0; k < p.levels.size(); ++k) EXPECT_EQ(p.levels[k], packed(p.label(k).size()));
  }
}

TEST(SampleDown, DepthOneReturnsTop) {
  auto sys = chebyshev_system();
  Harmonic h(sys);
  Rng rng(2);
  auto p = sample_down({4}, h, 1, rng);
  ASSERT_EQ(p.levels.size(), 1u);
  EXPECT_EQ(p.levels[0], Chamber{4});
}

TEST(SampleDown, EmpiricalLinkFrequencies) {
  auto sys = chebyshev_system();
  Harmonic h(sys);
  Rng rng(31);
  const int R = 100000;
  int zeros = 0;
  for (int r = 0; r < R; ++r) {
    auto p = sample_down({0, 2}, h, 2, rng);
    ASSERT_TRUE(p.valid());
    zeros += p.levels[1] == Chamber{0};
  }
  double f = static_cast<double>(zeros) / R;
  EXPECT_LT(std::abs(f - 0.25), 3 * std::sqrt(0.25 * 0.75 / R));
}

TEST(Pattern, LevelLabelsAndValidity) {
  EXPECT_EQ(LevelLabel::from_order(1), (LevelLabel{0, 1}));
  EXPECT_EQ(LevelLabel::from_order(2), (LevelLabel{1, 1}));
  EXPECT_EQ(LevelLabel::from_order(3), (LevelLabel{1, 2}));
  EXPECT_EQ(pattern_levels(4), 7);
  auto p = InterlacingPattern::fully_packed(3);
  EXPECT_TRUE(p.valid());
  p.levels[2] = {1, 2};  // (1,2) must interlace with (1,1) = {0}
  EXPECT_FALSE(p.valid());
}
