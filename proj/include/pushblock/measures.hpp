#pragma once

#include <complex>
#include <map>
#include <memory>
#include <vector>

#include "pushblock/interlacing.hpp"
#include "pushblock/multilevel.hpp"
#include "pushblock/orthopoly.hpp"

namespace pushblock {

// ψ(x) = p(x) Π (1 − α_i x) e^{−tx}; p ≡ 1 when `poly` is empty.
struct PsiSpec {
  double t = 0;
  std::vector<double> alphas;
  std::vector<double> poly;  // monomial coefficients of p

  double operator()(double x) const;
  std::complex<double> operator()(std::complex<double> u) const;
  double at_zero() const;

  // Taylor coefficients c_0..c_m at 0, from the factors.
  std::vector<long double> taylor(int m) const;
  // Taylor coefficients of 1/ψ at 0 (needs ψ(0) != 0).
  std::vector<long double> reciprocal_taylor(int m) const;
  // ψ(x) minus its Taylor polynomial of degree m−1; ψ itself for m <= 0.
  double remainder(int m, double x) const;

  // Zeros of ψ (roots of the linear factors and of p), for contour placement.
  std::vector<std::complex<double>> zeros() const;

  static PsiSpec exponential(double t) { return {t, {}, {}}; }
  friend PsiSpec operator*(const PsiSpec& a, const PsiSpec& b);
};

struct PositivityThreshold {
  double C = 0, C_hat = 0, a_max = 0;
  bool bounded = true;  // false when the rate sums still grow at the end of the probe range
};

PositivityThreshold positivity_threshold(const RateSpec& rates, long probe = 1000);

// ⟨π_i Q_i, x^p ψ⟩ over the level's measure for i <= cap, p < powers. Computed as
// row 0 of (−G)^p ψ(−G) for the level's chain generator G, which equals the inner product.
class MomentTable {
 public:
  MomentTable(const OrthoSystem& sys, const PsiSpec& psi, bool dual, int cap, int powers);
  double operator()(int i, int p) const { return table_.at(static_cast<size_t>(i))[static_cast<size_t>(p)]; }
  int cap() const { return cap_; }
  // Largest |entry| among the last five indices.
  double tail() const;

 private:
  int cap_;
  std::vector<std::vector<double>> table_;
};

struct CoherentMeasure {
  LevelLabel level;
  std::map<Chamber, double> mass;  // all chambers with coordinates <= cap
  long cap = 0;

  double total() const;
  double min() const;
  double at(const Chamber& nu) const;  // 0 outside the stored support
};

// M(ν) = det[⟨π_{ν_i}Q_{ν_i}, x^{m−1−j}ψ⟩] h(ν) / λ0^{C(m,2)} for the m particles of the level.
// Throws TruncationError when the moment table has not decayed below 1e-11 by the cap.
CoherentMeasure coherent_measure(const OrthoSystem& sys, const Harmonic& h, const PsiSpec& psi, LevelLabel level,
                                 long cap);

// 𝔓(k, ν) = h(ν)/h(k) det[⟨Q_{k_i}, π_{ν_j}Q_{ν_j}ψ⟩] with the level's polynomials;
// the inner products are the entries of ψ(−G).
class EvolutionOperator {
 public:
  EvolutionOperator(const OrthoSystem& sys, const Harmonic& h, const PsiSpec& psi, LevelLabel level, int cap);
  double operator()(const Chamber& k, const Chamber& nu) const;
  LevelLabel level() const { return level_; }
  int cap() const { return cap_; }

 private:
  const Harmonic* h_;
  LevelLabel level_;
  int cap_;
  std::vector<std::vector<double>> inner_;  // ⟨Q_a, π_b Q_b ψ⟩
};

struct CoherencyResidual {
  double upper = 0;  // M_{n,n} vs M_{n,n+1} Λ
  double lower = 0;  // M_{n−1,n} vs M_{n,n} Λ
};

// Entrywise residuals over lower-level points with coordinates <= check_cap; sums run to cap.
CoherencyResidual coherency_check(const OrthoSystem& sys, const PsiSpec& psi, int n, long cap, long check_cap);

struct EvolutionResidual {
  double measure = 0;      // M^{ψ1} 𝔓^{ψ2} vs M^{ψ1ψ2}
  double composition = 0;  // 𝔓^{ψ1} 𝔓^{ψ2} vs 𝔓^{ψ1ψ2}
  double row_sum = 0;      // Σ_ν 𝔓^{ψ2}(k, ν) vs ψ2(0)^m
};

EvolutionResidual evolution_check(const OrthoSystem& sys, const PsiSpec& psi1, const PsiSpec& psi2, LevelLabel level,
                                  long cap, long check_cap);

// Ψ_m(i) = ⟨π_iQ_i, (−x)^m ψ⟩ for m >= 0 and ⟨π_iQ_i, (−x)^m R_{−m}⟩ for m < 0, by quadrature.
// Absolute accuracy about 1e-12; MomentTable gives the m >= 0 values with relative accuracy.
double psi_function(const OrthoSystem& sys, const PsiSpec& psi, bool dual, int m, int i);
// E_l(i) = (−1)^l (1/2πi)∮ Q_i(u) / (ψ(u) u^{l+1}) du by the trapezoid rule on a circle about 0.
double e_function(const OrthoSystem& sys, const PsiSpec& psi, bool dual, int l, int i);
// Same coefficient from the exact Taylor tables (cross-check, small i only).
double e_function_series(const OrthoSystem& sys, const PsiSpec& psi, bool dual, int l, int i);

struct Biorthogonality {
  double residual = 0;
  int index_cap = 0;  // last i used
};

// max |Σ_i Ψ_k(i) E_l(i) − δ_kl| over k, l <= kmax, with Ψ from a MomentTable.
// The i-sum stops once every |Ψ_k(i) E_l(i)| stays below 1e-14 for five indices.
Biorthogonality biorthogonality_check(const OrthoSystem& sys, const PsiSpec& psi, bool dual, int kmax);

// Gibbs law on patterns of the given depth: top level (depth−1, depth) from M, lower levels from the links.
std::vector<std::pair<InterlacingPattern, double>> gibbs_distribution(const OrthoSystem& sys, const Harmonic& h,
                                                                      const PsiSpec& psi, int depth, long cap);
InterlacingPattern sample_gibbs(const CoherentMeasure& top, const Harmonic& h, int depth, Rng& rng);

}  // namespace pushblock
