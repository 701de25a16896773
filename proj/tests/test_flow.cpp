#include <gtest/gtest.h>

#include <cmath>

#include "pushblock/errors.hpp"
#include "pushblock/families.hpp"
#include "pushblock/flow.hpp"

using namespace pushblock;

namespace {

RateSpec zero_birth_rates() {
  RateSpec r;
  r.birth = [](long) { return 0.0; };
  r.death = [](long) { return 0.0; };
  return r;
}

}  // namespace

TEST(Arrows, ZeroRateGivesNoArrivals) {
  Rng rng(1);
  auto f = sample_arrows(zero_birth_rates(), 0, 5, 0, 10, rng);
  for (long x = 0; x <= 10; ++x) {
    EXPECT_TRUE(f.ups(x).empty());
    EXPECT_TRUE(f.downs(x).empty());
  }
  for (long x = 0; x <= 10; ++x) EXPECT_EQ(flow_eval(f, 0, 5, x), x);
}

TEST(Arrows, MeanCountsMatchRates) {
  const int R = 10000;
  const double window = 1.5;
  auto rates = jacobi_rates(0.5, 1.5);
  Rng rng(17);
  std::vector<double> up(6, 0), down(6, 0);
  for (int r = 0; r < R; ++r) {
    auto f = sample_arrows(rates, 0, window, 0, 5, rng);
    for (long x = 0; x <= 5; ++x) {
      up[static_cast<size_t>(x)] += static_cast<double>(f.ups(x).size());
      down[static_cast<size_t>(x)] += static_cast<double>(f.downs(x).size());
    }
  }
  for (long x = 0; x <= 5; ++x) {
    double mu_up = rates.lambda(x) * window, mu_down = rates.mu(x) * window;
    EXPECT_LT(std::abs(up[static_cast<size_t>(x)] / R - mu_up), 3 * std::sqrt(mu_up / R) + 1e-12) << x;
    EXPECT_LT(std::abs(down[static_cast<size_t>(x)] / R - mu_down), 3 * std::sqrt(mu_down / R) + 1e-12) << x;
  }
}

TEST(Arrows, DualUpArrowIntensityIsNextDeathRate) {
  // A down-arrow x+1 → x acts as a dual up-arrow at x.
  const int R = 10000;
  auto rates = jacobi_rates(0.5, 1.5);
  Rng rng(23);
  double count = 0;
  for (int r = 0; r < R; ++r) count += static_cast<double>(sample_arrows(rates, 0, 1, 0, 6, rng).downs(4).size());
  double expect = siegmund_dual(rates).lambda(3);
  EXPECT_LT(std::abs(count / R - expect), 3 * std::sqrt(expect / R));
}

TEST(Arrows, SameSeedSameField) {
  Rng a(5), b(5);
  auto f = sample_arrows(chebyshev_rates(), 0, 2, 0, 30, a);
  auto g = sample_arrows(chebyshev_rates(), 0, 2, 0, 30, b);
  EXPECT_EQ(f.up, g.up);
  EXPECT_EQ(f.down, g.down);
}

TEST(Flow, EmptyFieldIsIdentity) {
  Rng rng(1);
  auto f = sample_arrows(zero_birth_rates(), 0, 3, 0, 10, rng);
  for (long y = 0; y <= 8; ++y) EXPECT_EQ(dual_flow_eval(f, 0.5, 2.5, y), y);
}

TEST(Flow, CompositionCoalescenceAndMonotonicity) {
  Rng rng(99);
  const double s = 0.0, u = 0.7, t = 2.0;
  for (int r = 0; r < 1000; ++r) {
    auto f = sample_arrows(chebyshev_rates(), s, t, 0, 60, rng);
    for (long x = 0; x <= 12; ++x) {
      EXPECT_EQ(flow_eval(f, u, t, flow_eval(f, s, u, x)), flow_eval(f, s, t, x));
      EXPECT_LE(flow_eval(f, s, t, x), flow_eval(f, s, t, x + 1));
    }
    // Two walkers that meet stay together: from the meeting site both follow one path.
    long a = flow_eval(f, s, u, 3), b = flow_eval(f, s, u, 4);
    if (a == b) EXPECT_EQ(flow_eval(f, s, t, 3), flow_eval(f, s, t, 4));
  }
}

TEST(Flow, PathwiseDualityExact) {
  Rng rng(4242);
  for (auto rates : {chebyshev_rates(), jacobi_rates(0.5, 1.5)}) {
    for (int r = 0; r < 1000; ++r) {
      auto f = sample_arrows(rates, 0, 1.5, 0, 60, rng);
      for (long x = 0; x <= 12; ++x) EXPECT_EQ(flow_inverse(f, 0.2, 1.3, x), dual_flow_eval(f, 0.2, 1.3, x));
    }
  }
}

TEST(Flow, LeavingTheSpanIsAnError) {
  RateSpec fast;
  fast.birth = [](long) { return 50.0; };
  fast.death = [](long n) { return n == 0 ? 0.0 : 1e-9; };
  Rng rng(3);
  auto f = sample_arrows(fast, 0, 2, 0, 5, rng);
  EXPECT_THROW(flow_eval(f, 0, 2, 0), SpanExceeded);
}

TEST(Flow, PaddingGrowsWithRateAndWindow) {
  EXPECT_EQ(span_padding(0.0, 1.0), 16);
  EXPECT_GT(span_padding(4.0, 9.0), span_padding(1.0, 1.0));
}

TEST(Fdd, SinglePointIsDistributionFunction) {
  ChainModel chain(chebyshev_rates(), 60);
  auto tr = chain.transition(0.7);
  for (long z = 0; z <= 5; ++z)
    for (long zp = 0; zp <= 8; ++zp) EXPECT_NEAR(fdd_determinant(tr, {z}, {zp}), tr.cdf(z, zp), 1e-15);
}

TEST(Fdd, TimeZeroDiagonalIsOne) {
  ChainModel chain(chebyshev_rates(), 30);
  auto tr = chain.transition(0.0);
  EXPECT_NEAR(fdd_determinant(tr, {0, 3, 7}, {0, 3, 7}), 1.0, 1e-15);
  EXPECT_NEAR(fdd_determinant(tr, {1, 4}, {0, 5}), 0.0, 1e-15);
}

TEST(Fdd, MarginalizesToOnePoint) {
  ChainModel chain(jacobi_rates(0.5, 1.5), 80);
  auto tr = chain.transition(0.9);
  for (long z1 = 0; z1 <= 3; ++z1)
    for (long zp = 0; zp <= 6; ++zp)
      EXPECT_NEAR(fdd_determinant(tr, {z1, z1 + 2}, {zp, 80}), tr.cdf(z1, zp), 1e-12) << z1 << "," << zp;
}

TEST(Fdd, ValueInUnitIntervalAndMatchesSimulation) {
  const int R = 100000;
  const double t = 0.5;
  auto rates = chebyshev_rates();
  ChainModel chain(rates, 60);
  double det = fdd_determinant(chain.transition(t), {0, 3}, {1, 4});
  EXPECT_GE(det, 0.0);
  EXPECT_LE(det, 1.0);
  Rng rng(2718);
  long hits = 0;
  for (int r = 0; r < R; ++r) {
    auto f = sample_arrows(rates, 0, t, 0, 40, rng);
    hits += flow_eval(f, 0, t, 0) <= 1 && flow_eval(f, 0, t, 3) <= 4;
  }
  double p = static_cast<double>(hits) / R;
  EXPECT_LT(std::abs(p - det), 3 * std::sqrt(det * (1 - det) / R));
}
