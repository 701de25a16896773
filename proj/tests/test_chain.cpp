#include <gtest/gtest.h>

#include <cmath>

#include "pushblock/chain.hpp"
#include "pushblock/errors.hpp"
#include "pushblock/families.hpp"

using namespace pushblock;

namespace {

// Uniformization: e^{tG} = Σ_k Poisson(k; qt) (I + G/q)^k. Independent of the Padé path.
Eigen::MatrixXd uniformized(const Eigen::MatrixXd& G, double t) {
  double q = 0;
  for (Eigen::Index i = 0; i < G.rows(); ++i) q = std::max(q, -G(i, i));
  q *= 1.05;
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(G.rows(), G.cols()) + G / q;
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(G.rows(), G.cols());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(G.rows(), G.cols());
  double w = std::exp(-q * t);
  for (int k = 0; k < 2000; ++k) {
    acc += w * term;
    term = term * P;
    w *= q * t / (k + 1);
    if (k > q * t && w < 1e-18) break;
  }
  return acc;
}

RateSpec geometric_birth() {
  RateSpec r;
  r.birth = [](long n) { return std::ldexp(1.0, static_cast<int>(n)); };
  r.death = [](long n) { return n == 0 ? 0.0 : 1.0; };
  return r;
}

RateSpec mm_infinity(double lam, double mu) { return charlier_rates(lam, mu); }

}  // namespace

TEST(SymmetrizingMeasure, ChebyshevIsOneThenTwo) {
  auto pi = symmetrizing_measure(chebyshev_rates(), 30);
  EXPECT_DOUBLE_EQ(pi(0), 1.0);
  for (long n = 1; n <= 30; ++n) EXPECT_NEAR(pi(n), 2.0, 1e-14);
}

TEST(SymmetrizingMeasure, ConstantRatesGiveUniformWeight) {
  auto pi = symmetrizing_measure(constant_rates(0.7), 20);
  EXPECT_EQ(pi.lo, -20);
  for (long x = -20; x <= 20; ++x) EXPECT_NEAR(pi(x), 1.0, 1e-14);
}

TEST(SymmetrizingMeasure, MMInfinityIsPoissonShape) {
  double lam = 2.5, mu = 1.25;
  auto pi = symmetrizing_measure(mm_infinity(lam, mu), 25);
  for (long n = 0; n <= 25; ++n) {
    double expect = std::pow(lam / mu, n) / std::tgamma(n + 1.0);
    EXPECT_NEAR(pi(n) / expect, 1.0, 1e-12) << n;
  }
}

TEST(SiegmundDual, ChebyshevDualRates) {
  auto d = siegmund_dual(chebyshev_rates());
  EXPECT_TRUE(d.killing_at_origin);
  EXPECT_DOUBLE_EQ(d.mu(0), 1.0);
  for (long n = 0; n < 20; ++n) EXPECT_DOUBLE_EQ(d.lambda(n), 0.5);
  for (long n = 1; n < 20; ++n) EXPECT_DOUBLE_EQ(d.mu(n), 0.5);
  auto pihat = symmetrizing_measure(d, 20);
  for (long n = 0; n <= 20; ++n) EXPECT_NEAR(pihat(n), 1.0, 1e-14);
}

TEST(SiegmundDual, ConstantRatesKeepTheirValues) {
  RateSpec c;
  c.birth = [](long) { return 0.8; };
  c.death = [](long n) { return n == 0 ? 0.0 : 0.8; };
  auto d = siegmund_dual(c);
  EXPECT_DOUBLE_EQ(d.mu(0), 0.8);  // killing at the origin
  for (long n = 0; n < 10; ++n) EXPECT_DOUBLE_EQ(d.lambda(n), 0.8);
  EXPECT_NO_THROW(validate_rates(d));
}

TEST(Validation, RejectsNonPositiveBirth) {
  RateSpec r;
  r.birth = [](long n) { return n == 3 ? 0.0 : 1.0; };
  r.death = [](long n) { return n == 0 ? 0.0 : 1.0; };
  EXPECT_THROW(validate_rates(r), InvalidRates);
  r.birth = [](long) { return 1.0; };
  r.death = [](long) { return 1.0; };  // half line without killing needs μ(0)=0
  EXPECT_THROW(validate_rates(r), InvalidRates);
}

TEST(Wellposedness, ChebyshevSeriesDiverge) {
  auto rep = check_wellposedness(chebyshev_rates(), 10000);
  EXPECT_TRUE(rep.all_divergent);
  EXPECT_FALSE(rep.determinacy_risk);
  for (const auto& c : rep.conditions) EXPECT_GT(c.value, 1e3) << c.name;
}

TEST(Wellposedness, GeometricBirthFlagsDeterminacyRisk) {
  auto rep = check_wellposedness(geometric_birth(), 200);
  EXPECT_TRUE(rep.determinacy_risk);
  EXPECT_LE(rep.determinacy.value, 2.0);
  EXPECT_FALSE(rep.determinacy.divergent);
}

TEST(Wellposedness, MMInfinityDeterminacySumDiverges) {
  auto rep = check_wellposedness(mm_infinity(1.0, 1.0), 10000);
  EXPECT_TRUE(rep.determinacy.divergent);
  EXPECT_FALSE(rep.determinacy_risk);
}

TEST(Transition, IdentityAtTimeZero) {
  ChainModel chain(jacobi_rates(0.5, 1.5), 30);
  auto P = transition_matrix(chain, 0.0);
  EXPECT_LT((P - Eigen::MatrixXd::Identity(P.rows(), P.cols())).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Transition, ChebyshevRowsKeepMass) {
  ChainModel chain(chebyshev_rates(), 60);
  auto tr = chain.transition(1.0);
  for (long x = 0; x <= 20; ++x) EXPECT_GE(tr.row_mass(x), 1 - 1e-12) << x;
}

TEST(Transition, MatchesUniformizationOracle) {
  for (const auto& rates : {chebyshev_rates(), jacobi_rates(0.5, 1.5), charlier_rates(1.0, 1.0)}) {
    ChainModel chain(rates, 40);
    auto P = transition_matrix(chain, 0.8);
    auto Q = uniformized(chain.generator(), 0.8);
    EXPECT_LT((P - Q).cwiseAbs().maxCoeff(), 1e-11) << rates.label;
  }
}

TEST(Transition, DetailedBalanceAndChapmanKolmogorov) {
  ChainModel chain(jacobi_rates(0.5, 1.5), 50);
  auto Ps = transition_matrix(chain, 0.4), Pt = transition_matrix(chain, 0.9);
  auto Pst = transition_matrix(chain, 1.3);
  EXPECT_LT((Ps * Pt - Pst).cwiseAbs().maxCoeff(), 1e-9);
  for (long x = 0; x <= 50; ++x)
    for (long y = 0; y <= 50; ++y)
      EXPECT_NEAR(chain.pi(x) * Pst(x, y), chain.pi(y) * Pst(y, x), 1e-9);
}

TEST(Transition, StochasticMonotonicity) {
  ChainModel chain(chebyshev_rates(), 60);
  auto tr = chain.transition(1.5);
  for (long y = 0; y <= 15; ++y)
    for (long x = 0; x < 20; ++x) EXPECT_GE(tr.cdf(x, y) + 1e-13, tr.cdf(x + 1, y)) << x << "," << y;
}

TEST(Transition, AutoTruncationGrowsUntilEscapeIsSmall) {
  auto chain = ChainModel::auto_truncated(charlier_rates(3.0, 0.5), 2.0, 10);
  auto tr = chain.transition(2.0);
  for (long x = 0; x <= 10; ++x) EXPECT_GT(tr.row_mass(x), 1 - 1e-10);
}

TEST(Duality, ExactAtTimeZero) {
  for (long x = 0; x < 6; ++x)
    for (long y = 0; y < 6; ++y) EXPECT_EQ(verify_duality(chebyshev_rates(), 0.0, x, y, 30), 0.0);
}

TEST(Duality, ChebyshevAndMMInfinity) {
  EXPECT_LT(verify_duality(chebyshev_rates(), 1.0, 3, 5, 60), 1e-8);
  EXPECT_LT(verify_duality(mm_infinity(1.0, 1.0), 0.5, 2, 2, 80), 1e-8);
  for (long x = 0; x <= 20; x += 4)
    for (long y = 0; y <= 20; y += 5) EXPECT_LT(verify_duality(jacobi_rates(0.5, 1.5), 0.7, x, y, 60), 1e-8);
}

TEST(SimulatePath, SameSeedSamePath) {
  Rng a(99), b(99);
  auto p = simulate_path(chebyshev_rates(), 2, 5.0, a);
  auto q = simulate_path(chebyshev_rates(), 2, 5.0, b);
  EXPECT_EQ(p.times, q.times);
  EXPECT_EQ(p.states, q.states);
}

TEST(SimulatePath, TinyHorizonStaysPut) {
  Rng rng(5);
  int moved = 0;
  for (int i = 0; i < 1000; ++i) moved += simulate_path(chebyshev_rates(), 0, 1e-6, rng).states.size() > 1;
  EXPECT_LE(moved, 2);
}

TEST(SimulatePath, EmpiricalLawMatchesMatrixRow) {
  const int R = 100000;
  ChainModel chain(chebyshev_rates(), 60);
  auto tr = chain.transition(1.0);
  std::vector<int> hits(8, 0);
  Rng rng(2024);
  for (int r = 0; r < R; ++r) {
    long y = simulate_path(chebyshev_rates(), 0, 1.0, rng).at(1.0);
    if (y < 8) ++hits[static_cast<size_t>(y)];
  }
  for (long y = 0; y < 8; ++y) {
    double p = tr(0, y), f = hits[static_cast<size_t>(y)] / double(R);
    double se = std::sqrt(std::max(p * (1 - p), 1e-12) / R);
    EXPECT_LT(std::abs(f - p), 4 * se) << y;
  }
}

TEST(SimulatePath, DualChainCanBeKilled) {
  auto d = siegmund_dual(chebyshev_rates());
  Rng rng(7);
  int killed = 0;
  for (int i = 0; i < 200; ++i) killed += simulate_path(d, 0, 5.0, rng).killed;
  EXPECT_GT(killed, 50);
}
