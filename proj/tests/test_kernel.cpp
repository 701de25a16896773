#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "pushblock/errors.hpp"
#include "pushblock/families.hpp"
#include "pushblock/kernel.hpp"
#include "pushblock/multilevel.hpp"

using namespace pushblock;

namespace {

OrthoSystem chebyshev_system() { return build_polynomials(chebyshev_rates(), 64, SpectralMeasure::jacobi(-0.5, -0.5)); }

// ∫_θr^π cos(iθ) cos(jθ) dθ / π, the arcsine-measure integral of T_i T_j over [r, 2] after x = 1 − cos θ.
double cosine_overlap(int i, int j, double r) {
  double a = std::acos(1 - r), b = std::numbers::pi;
  auto prim = [&](double th) {
    double s = 0;
    int d = i - j, p = i + j;
    s += d == 0 ? th : std::sin(d * th) / d;
    s += p == 0 ? th : std::sin(p * th) / p;
    return 0.5 * s;
  };
  return (prim(b) - prim(a)) / std::numbers::pi;
}

}  // namespace

TEST(Kernel, TimeZeroIsTheFrozenPattern) {
  auto sys = chebyshev_system();
  CorrelationKernel K(sys, PsiSpec::exponential(0.0));
  EXPECT_NEAR(K({{0, 1}, 0}, {{0, 1}, 0}), 1.0, 1e-10);
  for (long j = 1; j <= 6; ++j) EXPECT_NEAR(K({{0, 1}, j}, {{0, 1}, j}), 0.0, 1e-10);
  for (int k = 2; k <= 5; ++k) {
    auto level = LevelLabel::from_order(k);
    for (long x = 0; x <= 6; ++x) EXPECT_NEAR(K({level, x}, {level, x}), x < level.size() ? 1.0 : 0.0, 1e-10);
  }
}

TEST(Kernel, LevelTraceCountsParticles) {
  auto sys = chebyshev_system();
  for (const auto& psi : {PsiSpec::exponential(0.8), PsiSpec{0.7, {0.2}, {}}}) {
    CorrelationKernel K(sys, psi);
    for (int k = 1; k <= 4; ++k) {
      auto level = LevelLabel::from_order(k);
      EXPECT_NEAR(K.level_trace(level).value, level.size(), 1e-6) << k;
    }
  }
}

TEST(Kernel, SingleLevelKernelIsAProjection) {
  auto sys = chebyshev_system();
  CorrelationKernel K(sys, PsiSpec::exponential(0.8));
  for (LevelLabel level : {LevelLabel{0, 1}, LevelLabel{1, 1}, LevelLabel{1, 2}}) {
    const int cap = 45;
    std::vector<KernelPoint> pts;
    for (long x = 0; x <= cap; ++x) pts.push_back({level, x});
    auto M = K.matrix(pts);
    Eigen::MatrixXd sq = M * M;
    EXPECT_LT((sq - M).topLeftCorner(8, 8).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Kernel, AgreesWithExactOracleAtDepthTwo) {
  auto sys = chebyshev_system();
  const double t = 0.8;
  CorrelationKernel K(sys, PsiSpec::exponential(t));
  MultilevelSystem ms(chebyshev_rates());
  auto dist = exact_distribution(ms, 2, t, 25, InterlacingPattern::fully_packed(2));
  for (int level = 0; level < 3; ++level)
    for (long x = 0; x <= 6; ++x)
      EXPECT_NEAR(K.correlation({{LevelLabel::from_order(level + 1), x}}), dist.rho1(level, x), 1e-6);
  std::vector<std::tuple<int, long, int, long>> pairs{{0, 1, 2, 3}, {1, 0, 2, 2}, {2, 1, 2, 4}, {0, 2, 1, 2}};
  for (auto [l1, x1, l2, x2] : pairs) {
    double k = K.correlation({{LevelLabel::from_order(l1 + 1), x1}, {LevelLabel::from_order(l2 + 1), x2}});
    EXPECT_NEAR(k, dist.rho2(l1, x1, l2, x2), 1e-6);
  }
}

TEST(Kernel, ContourAndResidueFormsAgree) {
  auto sys = chebyshev_system();
  CorrelationKernel K(sys, PsiSpec{0.9, {0.15}, {}});
  std::vector<KernelPoint> pts{{{0, 1}, 0}, {{1, 1}, 2}, {{1, 2}, 1}, {{2, 2}, 3}, {{2, 3}, 4}};
  for (const auto& r : pts)
    for (const auto& c : pts) {
      double a = K.contour_value(r, c), b = K.residue_value(r, c);
      EXPECT_NEAR(a, b, 1e-10 * std::max(1.0, std::abs(a)));
    }
}

TEST(Kernel, RepeatedPointAndConjugationInvariance) {
  auto sys = chebyshev_system();
  CorrelationKernel K(sys, PsiSpec::exponential(1.1));
  KernelPoint p{{1, 2}, 2};
  EXPECT_NEAR(K.correlation({p, p}), 0.0, 1e-14);
  std::vector<KernelPoint> pts{{{0, 1}, 1}, {{1, 1}, 0}, {{1, 2}, 2}, {{2, 2}, 1}};
  auto M = K.matrix(pts);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.2, 5.0);
  Eigen::VectorXd c(4);
  for (int i = 0; i < 4; ++i) c(i) = u(rng);
  Eigen::MatrixXd conj = c.asDiagonal() * M * c.cwiseInverse().asDiagonal();
  for (int k = 1; k <= 4; ++k)
    EXPECT_NEAR(conj.topLeftCorner(k, k).determinant(), M.topLeftCorner(k, k).determinant(), 1e-12);
  EXPECT_NEAR(K.correlation(pts), M.determinant(), 1e-14);
}

TEST(Kernel, ParallelMatrixMatchesSerial) {
  auto sys = chebyshev_system();
  CorrelationKernel K(sys, PsiSpec::exponential(0.6));
  std::vector<KernelPoint> pts;
  for (long x = 0; x < 5; ++x) pts.push_back({{1, 2}, x});
  EXPECT_EQ(K.matrix(pts, 1), K.matrix(pts, 3));
}

TEST(Kernel, GatesAndContourErrors) {
  auto charlier = build_polynomials(charlier_rates(1.0, 1.0), 30, SpectralMeasure::charlier(1.0, 1.0));
  EXPECT_THROW(CorrelationKernel(charlier, PsiSpec::exponential(1.0)), UnsupportedError);
  auto sys = chebyshev_system();
  EXPECT_THROW(CorrelationKernel(sys, PsiSpec{1.0, {0.8}, {}}), ContourError);
  EXPECT_THROW(kernel_contour(2.0, PsiSpec{0.0, {}, {1.0, -0.5}}), UnsupportedError);
  auto [radius, margin] = kernel_contour(2.0, PsiSpec{0.0, {0.25}, {}});
  EXPECT_NEAR(margin, 0.5, 1e-15);
  EXPECT_NEAR(radius, 2.5, 1e-15);
}

TEST(ScalingLimit, ScaledLevels) {
  EXPECT_EQ(scaled_level({0, 1}, 20, 1.5), (LevelLabel{30, 31}));
  EXPECT_EQ(scaled_level({1, 1}, 10, 0.35), (LevelLabel{4, 4}));
}

TEST(ScalingLimit, FrozenRegionStructure) {
  auto sys = chebyshev_system();
  for (LevelLabel r : {LevelLabel{0, 1}, LevelLabel{1, 1}, LevelLabel{1, 2}})
    for (LevelLabel c : {LevelLabel{0, 1}, LevelLabel{1, 1}, LevelLabel{1, 2}})
      for (int i = 0; i <= 3; ++i)
        for (int j = 0; j <= 3; ++j) {
          double v = scaling_limit_kernel(sys, {r, i}, {c, j}, 2.5);
          if (r.order() < c.order()) EXPECT_NEAR(v, 0.0, 1e-12);
          if (r == c) EXPECT_NEAR(v, i == j ? 1.0 : 0.0, 1e-10);
        }
}

TEST(ScalingLimit, NearlyEmptyJustAboveTheLowerEdge) {
  auto sys = chebyshev_system();
  for (int i = 0; i <= 4; ++i)
    for (int j = 0; j <= 4; ++j) EXPECT_NEAR(scaling_limit_kernel(sys, {{1, 2}, i}, {{1, 2}, j}, 1e-6), 0.0, 5e-2);
  EXPECT_THROW(scaling_limit_kernel(sys, {{1, 2}, 0}, {{1, 2}, 0}, 0.0), DomainError);
}

TEST(ScalingLimit, PrincipalEntryConverges) {
  auto sys = chebyshev_system();
  const double eta = 1.5;
  KernelPoint base{{0, 1}, 0};
  double limit = scaling_limit_kernel(sys, base, base, eta);
  double prev = INFINITY;
  for (int N : {20, 40, 80}) {
    CorrelationKernel K(sys, PsiSpec::exponential(N));
    KernelPoint p{scaled_level(base.level, N, eta), 0};
    double err = std::abs(K(p, p) - limit);
    EXPECT_LT(err, prev) << N;
    prev = err;
  }
  EXPECT_LT(prev, 1e-2);
}

TEST(DiscreteEnsemble, ChebyshevClosedForm) {
  auto sys = chebyshev_system();
  for (double r : {0.3, 1.0, 1.7})
    for (int i = 0; i <= 6; ++i)
      for (int j = 0; j <= 6; ++j) {
        double expect = std::sqrt(sys.pi(i) * sys.pi(j)) * cosine_overlap(i, j, r);
        EXPECT_NEAR(discrete_ensemble_kernel(sys, false, i, j, r), expect, 1e-10) << r << " " << i << "," << j;
      }
}

TEST(DiscreteEnsemble, FullSupportIsIdentity) {
  auto sys = build_polynomials(jacobi_rates(0.5, 1.5), 64, SpectralMeasure::jacobi(0.5, 1.5));
  for (bool dual : {false, true})
    for (int i = 0; i <= 5; ++i)
      for (int j = 0; j <= 5; ++j)
        EXPECT_NEAR(discrete_ensemble_kernel(sys, dual, i, j, 0.0), i == j ? 1.0 : 0.0, 1e-10);
}
