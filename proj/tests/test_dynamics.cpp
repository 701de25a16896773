#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "pushblock/dynamics.hpp"
#include "pushblock/errors.hpp"
#include "pushblock/families.hpp"
#include "pushblock/multilevel.hpp"

using namespace pushblock;

namespace {

const Move* find_move(const std::vector<Move>& moves, const TwoLevelState& target) {
  for (const auto& m : moves)
    if (m.target == target) return &m;
  return nullptr;
}

}  // namespace

TEST(PushBlockRates, DualJumpPushesUpperParticle) {
  auto rates = jacobi_rates(0.5, 1.5);
  const long z = 3;
  TwoLevelState s{{z, z + 1}, {z}};
  auto moves = pushblock_moves(InterlaceKind::NNPlus1, rates, s);
  const Move* m = find_move(moves, {{z, z + 2}, {z + 1}});
  ASSERT_NE(m, nullptr);
  EXPECT_DOUBLE_EQ(m->rate, rates.mu(z + 1));
  EXPECT_EQ(pushblock_rate(InterlaceKind::NNPlus1, rates, s, {{z, z + 1}, {z + 1}}), 0.0);
}

TEST(PushBlockRates, BlockedJumpHasRateZero) {
  auto rates = chebyshev_rates();
  TwoLevelState s{{2, 5}, {2}};
  EXPECT_EQ(pushblock_rate(InterlaceKind::NNPlus1, rates, s, {{3, 5}, {2}}), 0.0);
  EXPECT_DOUBLE_EQ(pushblock_rate(InterlaceKind::NNPlus1, rates, s, {{1, 5}, {2}}), rates.mu(2));
}

TEST(PushBlockRates, OutgoingRatesBalanceTheDiagonal) {
  auto rates = jacobi_rates(0.5, 1.5);
  for (auto kind : {InterlaceKind::NNPlus1, InterlaceKind::NN})
    for (int n = 1; n <= 2; ++n)
      for (const auto& s : two_level_states(kind, n, 6)) {
        double out = 0;
        for (const auto& m : pushblock_moves(kind, rates, s)) {
          EXPECT_GT(m.rate, 0.0);
          if (m.target.alive) EXPECT_TRUE(two_level_valid(kind, m.target));
          out += m.rate;
        }
        EXPECT_NEAR(out, -pushblock_diagonal(kind, rates, s), 1e-12);
      }
}

TEST(PushBlockRates, KillingRateFormula) {
  auto rates = chebyshev_rates();
  auto dual = siegmund_dual(rates);
  // y = (0, 1): both adjacent-pair and origin terms contribute.
  TwoLevelState s{{0, 1, 2}, {0, 1}};
  double expect = dual.lambda(0) + dual.mu(1) + dual.mu(0);
  EXPECT_NEAR(killing_rate(InterlaceKind::NNPlus1, rates, s), expect, 1e-15);
  TwoLevelState far{{3, 5, 9}, {4, 7}};
  EXPECT_EQ(killing_rate(InterlaceKind::NNPlus1, rates, far), 0.0);
}

TEST(TwoLevelKernel, DeltaAtTimeZero) {
  for (auto kind : {InterlaceKind::NNPlus1, InterlaceKind::NN}) {
    TwoLevelKernel q(chebyshev_rates(), kind, 40);
    auto states = two_level_states(kind, 1, 5);
    for (const auto& a : states)
      for (const auto& b : states) EXPECT_NEAR(q(0.0, a, b), a == b ? 1.0 : 0.0, 1e-13);
  }
}

TEST(TwoLevelKernel, MarginalIsDualDeterminant) {
  const double t = 0.6;
  auto rates = chebyshev_rates();
  TwoLevelKernel q(rates, InterlaceKind::NNPlus1, 60);
  ChainModel dual(siegmund_dual(rates), 60);
  auto P = dual.transition(t);
  for (const auto& from : two_level_states(InterlaceKind::NNPlus1, 1, 4))
    for (long y = 0; y <= 6; ++y) {
      double total = 0;
      for (const auto& x : above_nn1({y}, 45)) total += q(t, from, {x, {y}});
      EXPECT_NEAR(total, P(from.y[0], y), 1e-10);
    }
}

TEST(TwoLevelKernel, NonnegativeAndSubStochastic) {
  TwoLevelKernel q(jacobi_rates(0.5, 1.5), InterlaceKind::NN, 40);
  auto states = two_level_states(InterlaceKind::NN, 1, 24);
  for (const auto& a : two_level_states(InterlaceKind::NN, 1, 3)) {
    double total = 0;
    for (const auto& b : states) {
      double v = q(0.5, a, b);
      EXPECT_GE(v, -1e-12);
      total += v;
    }
    EXPECT_LE(total, 1 + 1e-10);
  }
}

TEST(TwoLevelKernel, BackwardsEquationInteriorAndBoundary) {
  auto rates = chebyshev_rates();
  TwoLevelKernel q(rates, InterlaceKind::NNPlus1, 40);
  TwoLevelState interior{{1, 4}, {2}}, boundary{{2, 4}, {2}}, target{{1, 3}, {2}};
  EXPECT_LT(backwards_residual(q, rates, 0.5, interior, target, 1e-4), 1e-5);
  EXPECT_LT(backwards_residual(q, rates, 0.5, boundary, target, 1e-4), 1e-5);
  double coarse = backwards_residual(q, rates, 0.5, interior, target, 4e-2);
  double fine = backwards_residual(q, rates, 0.5, interior, target, 2e-2);
  EXPECT_NEAR(coarse / fine, 4.0, 0.3);
}

TEST(TwoLevelKernel, MatchesSimulatedFrequencies) {
  const int R = 200000;
  const double t = 0.5;
  auto rates = chebyshev_rates();
  TwoLevelKernel q(rates, InterlaceKind::NNPlus1, 50);
  TwoLevelState start{{0, 2}, {1}};
  std::map<TwoLevelState, int> counts;
  Rng rng(77);
  for (int r = 0; r < R; ++r) ++counts[simulate_two_level(InterlaceKind::NNPlus1, rates, start, t, rng)];
  for (const auto& to : two_level_states(InterlaceKind::NNPlus1, 1, 4)) {
    double p = q(t, start, to), f = counts[to] / double(R);
    EXPECT_LT(std::abs(f - p), 3.5 * std::sqrt(std::max(p * (1 - p), 1e-9) / R) + 1e-6)
        << to.x[0] << "," << to.x[1] << "|" << to.y[0];
  }
}

TEST(Multilevel, ZeroHorizonLeavesPatternUnchanged) {
  MultilevelSystem sys(chebyshev_rates());
  Rng rng(1);
  auto init = InterlacingPattern::fully_packed(3);
  auto st = simulate_multilevel(sys, init, 0.0, rng);
  EXPECT_EQ(st.pattern.levels, init.levels);
}

TEST(Multilevel, PackedRightJumpPushesEveryLevel) {
  MultilevelSystem sys(chebyshev_rates());
  for (int depth = 1; depth <= 5; ++depth) {
    auto p = InterlacingPattern::fully_packed(depth);
    auto pushed = sys.apply(p, 0, 0, +1);
    EXPECT_EQ(static_cast<int>(pushed.size()) + 1, pattern_levels(depth));
    EXPECT_TRUE(p.valid());
  }
}

TEST(Multilevel, InterlacingHoldsAfterEveryEvent) {
  MultilevelSystem sys(jacobi_rates(0.5, 1.5));
  Rng rng(12);
  EventLog log;
  auto st = simulate_multilevel(sys, InterlacingPattern::fully_packed(4), 3.0, rng, &log);
  ASSERT_FALSE(log.events.empty());
  for (const auto& e : log.events) EXPECT_TRUE(log.at(e.time).valid()) << e.time;
  EXPECT_EQ(log.at(3.0).levels, st.pattern.levels);
}

TEST(Multilevel, SameSeedSameEvents) {
  MultilevelSystem sys(chebyshev_rates());
  EventLog a, b;
  Rng r1(8), r2(8);
  simulate_multilevel(sys, InterlacingPattern::fully_packed(3), 2.0, r1, &a);
  simulate_multilevel(sys, InterlacingPattern::fully_packed(3), 2.0, r2, &b);
  ASSERT_EQ(a.events.size(), b.events.size());
  for (size_t i = 0; i < a.events.size(); ++i) {
    EXPECT_EQ(a.events[i].time, b.events[i].time);
    EXPECT_EQ(a.events[i].cascade, b.events[i].cascade);
  }
}

TEST(ExactDistribution, DepthOneIsTheChainRow) {
  MultilevelSystem sys(chebyshev_rates());
  auto d = exact_distribution(sys, 1, 0.8, 30, InterlacingPattern::fully_packed(1));
  ChainModel chain(chebyshev_rates(), 30);
  auto P = transition_matrix(chain, 0.8);
  auto marg = d.marginal(0);
  for (long x = 0; x <= 10; ++x) EXPECT_NEAR(marg[{x}], P(0, x), 1e-10) << x;
}

TEST(ExactDistribution, StateSpaceGuard) {
  MultilevelSystem sys(chebyshev_rates());
  EXPECT_THROW(exact_distribution(sys, 4, 0.5, 30, InterlacingPattern::fully_packed(4), 1000), OracleTooLarge);
}

TEST(ExactDistribution, SimulationMatchesOracleAtDepthTwo) {
  const int R = 50000;
  const double T = 0.7;
  MultilevelSystem sys(chebyshev_rates());
  auto init = InterlacingPattern::fully_packed(2);
  auto d = exact_distribution(sys, 2, T, 14, init);
  auto top = d.marginal(2);
  std::map<Chamber, int> counts;
  Rng rng(606);
  for (int r = 0; r < R; ++r) ++counts[simulate_multilevel(sys, init, T, rng).pattern.levels[2]];
  for (const auto& [x, p] : top) {
    if (p < 1e-3) continue;
    double f = counts[x] / double(R);
    EXPECT_LT(std::abs(f - p), 3.5 * std::sqrt(p * (1 - p) / R)) << x[0] << "," << x[1];
  }
}
