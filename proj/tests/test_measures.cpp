#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "pushblock/errors.hpp"
#include "pushblock/families.hpp"
#include "pushblock/measures.hpp"
#include "pushblock/multilevel.hpp"

using namespace pushblock;

namespace {

struct Fixture {
  OrthoSystem sys;
  Harmonic h;
  explicit Fixture(OrthoSystem s) : sys(std::move(s)), h(sys) {}
};

Fixture chebyshev() { return Fixture(build_polynomials(chebyshev_rates(), 64, SpectralMeasure::jacobi(-0.5, -0.5))); }

PsiSpec psi(double t, std::vector<double> alphas = {}, std::vector<double> poly = {}) {
  return {t, std::move(alphas), std::move(poly)};
}

double det2(double a, double b, double c, double d) { return a * d - b * c; }

}  // namespace

TEST(Psi, TrivialAndExponentialRemainders) {
  auto one = psi(0);
  for (double x : {0.0, 0.5, 1.7}) {
    EXPECT_EQ(one(x), 1.0);
    EXPECT_NEAR(one.remainder(1, x), 0.0, 1e-16);
  }
  auto e = psi(0.7);
  for (double x : {0.1, 1.3}) {
    EXPECT_NEAR(e.remainder(1, x), std::exp(-0.7 * x) - 1, 1e-15);
    EXPECT_NEAR(e.remainder(0, x), e(x), 1e-16);
    EXPECT_NEAR(e.remainder(-2, x), e(x), 1e-16);
  }
}

TEST(Psi, ScaledRemainderTendsToTaylorCoefficient) {
  auto e = psi(0.9, {0.2});
  auto c = e.taylor(4);
  for (int m = 1; m <= 3; ++m) {
    double x = 1e-3;
    double v = std::pow(-x, -m) * e.remainder(m, x);
    EXPECT_NEAR(v, std::pow(-1.0, m) * static_cast<double>(c[m]), 2e-3 * std::abs(static_cast<double>(c[m])) + 1e-9);
  }
}

TEST(Psi, TaylorCoefficientsFromFactors) {
  const double t = 0.8, a = 0.3;
  auto p = psi(t, {a});
  auto c = p.taylor(8);
  for (int k = 0; k <= 8; ++k) {
    double expect = std::pow(-t, k) / std::tgamma(k + 1.0);
    if (k >= 1) expect -= a * std::pow(-t, k - 1) / std::tgamma(k);
    EXPECT_NEAR(static_cast<double>(c[k]), expect, 1e-15) << k;
  }
  auto r = p.reciprocal_taylor(8);
  for (int k = 0; k <= 8; ++k) {
    long double conv = 0;
    for (int j = 0; j <= k; ++j) conv += c[j] * r[k - j];
    EXPECT_NEAR(static_cast<double>(conv), k == 0 ? 1.0 : 0.0, 1e-15);
  }
}

TEST(Psi, ZerosAndProducts) {
  auto p = psi(0.5, {0.25}, {1.0, -0.5});
  auto z = p.zeros();
  ASSERT_EQ(z.size(), 2u);
  for (auto u : z) EXPECT_LT(std::abs(p(u)), 1e-14);
  auto q = psi(0.3, {0.1}) * psi(0.2);
  EXPECT_NEAR(q(1.2), psi(0.3, {0.1})(1.2) * psi(0.2)(1.2), 1e-15);
}

TEST(Positivity, ChebyshevAndConstantThresholds) {
  auto th = positivity_threshold(chebyshev_rates());
  EXPECT_DOUBLE_EQ(th.C, 1.0);
  EXPECT_DOUBLE_EQ(th.C_hat, 1.5);
  EXPECT_NEAR(th.a_max, 1.0 / 3.0, 1e-15);
  EXPECT_TRUE(th.bounded);
  auto c = positivity_threshold(constant_rates(0.5));
  EXPECT_DOUBLE_EQ(c.C, 1.0);
  EXPECT_NEAR(c.a_max, 0.5, 1e-15);
  EXPECT_FALSE(positivity_threshold(charlier_rates(1.0, 1.0)).bounded);
}

TEST(CoherentMeasure, TrivialPsiIsDeltaAtPacked) {
  auto f = chebyshev();
  for (int k = 1; k <= 5; ++k) {
    auto level = LevelLabel::from_order(k);
    auto M = coherent_measure(f.sys, f.h, psi(0), level, 10);
    for (const auto& [nu, w] : M.mass) EXPECT_NEAR(w, nu == packed(level.size()) ? 1.0 : 0.0, 1e-12);
  }
}

TEST(CoherentMeasure, MassIsPsiAtZeroPowered) {
  auto f = chebyshev();
  for (const auto& p : {psi(0.7, {0.3}), psi(0.5, {}, {1.0, -0.3})})
    for (int k = 1; k <= 4; ++k) {
      auto M = coherent_measure(f.sys, f.h, p, LevelLabel::from_order(k), 30);
      EXPECT_NEAR(M.total(), 1.0, 1e-9) << k;
      EXPECT_GE(M.min(), -1e-12) << k;
    }
}

TEST(CoherentMeasure, UndecayedTailIsReported) {
  auto f = chebyshev();
  EXPECT_THROW(coherent_measure(f.sys, f.h, psi(20.0), {1, 2}, 6), TruncationError);
}

TEST(Coherency, ChebyshevExamples) {
  auto f = chebyshev();
  auto one = coherency_check(f.sys, psi(0), 2, 20, 6);
  EXPECT_LT(std::max(one.upper, one.lower), 1e-14);
  for (const auto& p : {psi(0.7), psi(0.4, {}, {1.0, -0.3})}) {
    auto r = coherency_check(f.sys, p, 2, 30, 6);
    EXPECT_LT(r.upper, 1e-8);
    EXPECT_LT(r.lower, 1e-8);
  }
}

TEST(Evolution, TrivialPsiIsIdentity) {
  auto f = chebyshev();
  EvolutionOperator E(f.sys, f.h, psi(0), {1, 2}, 20);
  for (const auto& k : all_chambers(2, 5))
    for (const auto& nu : all_chambers(2, 5)) EXPECT_NEAR(E(k, nu), k == nu ? 1.0 : 0.0, 1e-12);
}

TEST(Evolution, PackedRowIsTheCoherentMeasure) {
  auto f = chebyshev();
  auto p = psi(0.6, {0.2});
  EvolutionOperator E(f.sys, f.h, p, {1, 2}, 30);
  auto M = coherent_measure(f.sys, f.h, p, {1, 2}, 30);
  for (const auto& [nu, w] : M.mass)
    if (nu[1] <= 12) EXPECT_NEAR(E(packed(2), nu), w, 1e-12);
}

TEST(Evolution, ExponentialIsHTransformedKarlinMcGregor) {
  auto f = chebyshev();
  const double t = 0.9;
  EvolutionOperator E(f.sys, f.h, psi(t), {1, 2}, 40);
  ChainModel chain(chebyshev_rates(), 80);
  auto P = transition_matrix(chain, t);
  for (const auto& k : all_chambers(2, 4))
    for (const auto& nu : all_chambers(2, 6)) {
      double km = det2(P(k[0], nu[0]), P(k[0], nu[1]), P(k[1], nu[0]), P(k[1], nu[1]));
      EXPECT_NEAR(E(k, nu), f.h.h({1, 2}, nu) / f.h.h({1, 2}, k) * km, 1e-9);
    }
}

TEST(Evolution, RowSumsAndCompositionChecks) {
  auto f = chebyshev();
  auto id = evolution_check(f.sys, psi(0.4), psi(0), {1, 2}, 30, 5);
  EXPECT_LT(id.measure, 1e-12);
  for (const auto& p2 : {psi(0.6), psi(0, {}, {1.0, -0.3})}) {
    auto r = evolution_check(f.sys, psi(0.4), p2, {1, 2}, 30, 5);
    EXPECT_LT(r.measure, 1e-8);
    EXPECT_LT(r.composition, 1e-8);
    EXPECT_LT(r.row_sum, 1e-9);
  }
}

TEST(Evolution, NonnegativeAtTheThreshold) {
  auto f = chebyshev();
  double a = positivity_threshold(chebyshev_rates()).a_max;
  EvolutionOperator E(f.sys, f.h, psi(0, {a}), {1, 2}, 40);
  for (const auto& k : all_chambers(2, 10))
    for (const auto& nu : all_chambers(2, 12)) EXPECT_GE(E(k, nu), -1e-12);
}

TEST(PsiFunctions, LowOrderValues) {
  auto f = chebyshev();
  const double t = 0.7;
  ChainModel chain(chebyshev_rates(), 80);
  auto P = transition_matrix(chain, t);
  for (int i = 0; i <= 8; ++i) {
    EXPECT_NEAR(e_function(f.sys, psi(t), false, 0, i), 1.0, 1e-10);
    EXPECT_NEAR(psi_function(f.sys, psi(t), false, 0, i), P(0, i), 1e-11);
  }
  for (int l = 0; l <= 4; ++l)
    for (int i = 0; i <= 4; ++i)
      EXPECT_NEAR(e_function(f.sys, psi(t, {0.2}), true, l, i), e_function_series(f.sys, psi(t, {0.2}), true, l, i),
                  1e-10);
}

TEST(PsiFunctions, Biorthogonality) {
  auto f = chebyshev();
  for (bool dual : {false, true}) {
    auto b = biorthogonality_check(f.sys, psi(0.7), dual, 4);
    EXPECT_LT(b.residual, 1e-8);
    EXPECT_GT(b.index_cap, 0);
  }
}

TEST(Gibbs, PropagationFromGibbsInitialLaw) {
  // Started from Gibbs(ψ1), the time-T law is Gibbs(ψ1 e^{−Tx}).
  auto f = chebyshev();
  const double t1 = 0.3, T = 0.5;
  auto init = gibbs_distribution(f.sys, f.h, psi(t1), 2, 25);
  MultilevelSystem ms(chebyshev_rates());
  auto evolved = exact_distribution(ms, 2, T, 25, init);
  auto target = gibbs_distribution(f.sys, f.h, psi(t1 + T), 2, 25);
  std::map<std::vector<Chamber>, double> want;
  for (const auto& [p, w] : target) want[p.levels] += w;
  double tv = 0;
  for (size_t s = 0; s < evolved.states.size(); ++s) {
    auto it = want.find(evolved.states[s].levels);
    double w = it == want.end() ? 0.0 : it->second;
    tv += std::abs(evolved.prob[s] - w);
    if (it != want.end()) want.erase(it);
  }
  for (const auto& [levels, w] : want) tv += std::abs(w);
  EXPECT_LT(0.5 * tv, 1e-8);
}

TEST(Gibbs, SamplerMatchesTopMeasure) {
  auto f = chebyshev();
  auto M = coherent_measure(f.sys, f.h, psi(0.8), {1, 2}, 25);
  Rng rng(4);
  const int R = 50000;
  std::map<Chamber, int> counts;
  for (int r = 0; r < R; ++r) {
    auto p = sample_gibbs(M, f.h, 2, rng);
    ASSERT_TRUE(p.valid());
    ++counts[p.levels[2]];
  }
  for (const auto& [nu, w] : M.mass) {
    if (w < 1e-3) continue;
    EXPECT_LT(std::abs(counts[nu] / double(R) - w), 3.5 * std::sqrt(w * (1 - w) / R));
  }
}
