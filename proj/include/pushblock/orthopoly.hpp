#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "pushblock/chain.hpp"
#include "pushblock/quadrature.hpp"

namespace pushblock {

// Polynomials Q_i of a half-line chain and Q̂_i of its Siegmund dual, with
// Q_0 = Q̂_0 = 1 and −xQ_n = μ(n)Q_{n−1} − (λ(n)+μ(n))Q_n + λ(n)Q_{n+1}.
// At n = 0 the dual's killing rate μ̂(0) enters the diagonal.
class OrthoSystem {
 public:
  OrthoSystem(RateSpec rates, int degree_cap = 64, std::optional<SpectralMeasure> measure = {},
              int index_cap = 512);

  int cap() const { return cap_; }
  int index_cap() const { return index_cap_; }
  const RateSpec& rates() const { return rates_; }
  const RateSpec& dual_rates() const { return dual_; }
  double lambda0() const { return lam_[0]; }

  double birth(int n, bool dual) const { return dual ? lamh_.at(n) : lam_.at(n); }
  double death(int n, bool dual) const { return dual ? muh_.at(n) : mu_.at(n); }
  double weight(int i, bool dual) const { return dual ? pihat_.at(i) : pi_.at(i); }
  double pi(int i) const { return pi_.at(i); }
  double pihat(int i) const { return pihat_.at(i); }

  // Monomial coefficients a_k(i), k <= i, for i <= cap.
  const std::vector<long double>& coeffs(int i, bool dual) const {
    return dual ? dcoef_.at(i) : coef_.at(i);
  }

  // Q_0..Q_n at x by the recurrence (stable on and near the support).
  template <class T>
  void eval_all(T x, int n, bool dual, T* out) const {
    out[0] = T(1);
    if (n == 0) return;
    const auto& L = dual ? lamh_ : lam_;
    const auto& M = dual ? muh_ : mu_;
    out[1] = (T(L[0] + M[0]) - x) / T(L[0]);
    for (int k = 1; k < n; ++k)
      out[k + 1] = ((T(L[k] + M[k]) - x) * out[k] - T(M[k]) * out[k - 1]) / T(L[k]);
  }

  template <class T>
  T eval(int i, T x, bool dual) const {
    T prev(1);
    if (i == 0) return prev;
    const auto& L = dual ? lamh_ : lam_;
    const auto& M = dual ? muh_ : mu_;
    T cur = (T(L[0] + M[0]) - x) / T(L[0]);
    for (int k = 1; k < i; ++k) {
      T next = ((T(L[k] + M[k]) - x) * cur - T(M[k]) * prev) / T(L[k]);
      prev = cur;
      cur = next;
    }
    return cur;
  }

  double Q(int i, double x) const { return eval(i, x, false); }
  double Qhat(int i, double x) const { return eval(i, x, true); }
  // π_i Q_i (or π̂_i Q̂_i).
  double weighted(int i, double x, bool dual) const { return weight(i, dual) * eval(i, x, dual); }

  bool has_measure() const { return measure_.has_value(); }
  bool has_compact_measure() const { return measure_ && measure_->compact(); }
  // 𝔴 or 𝔴̂ = x𝔴/λ0; throws UnsupportedError without a closed-form measure.
  const SpectralMeasure& measure(bool dual) const;

 private:
  RateSpec rates_, dual_;
  int cap_, index_cap_;
  std::vector<double> lam_, mu_, lamh_, muh_, pi_, pihat_;
  std::vector<std::vector<long double>> coef_, dcoef_;
  std::optional<SpectralMeasure> measure_, dual_measure_;
};

OrthoSystem build_polynomials(const RateSpec& rates, int degree_cap = 64,
                              std::optional<SpectralMeasure> measure = {});

double inner_product(const std::function<double(double)>& f, const std::function<double(double)>& g,
                     const SpectralMeasure& m);

struct IdentityReport {
  double partial_sum = 0;      // Σ_{i≤n} π_iQ_i = Q̂_n
  double dual_partial_sum = 0; // Σ_{k<n} π̂_kQ̂_k = (λ0/x)(1−Q_n)
  double tail = 0;             // ⟨Q̂_n, f(0)−f⟩_𝔴 = Σ_{k>n} ⟨π_kQ_k, f⟩_𝔴
  double dual_tail = 0;        // Σ_{k≥n} ⟨π̂_kQ̂_k, f⟩_𝔴̂ = ⟨Q_n, f⟩_𝔴
  double max() const;
};

// Residuals (relative to max(1,|lhs|)) over n <= n_max, 20 random x in the
// support and f = e^{−tx}, t ∈ {0.3, 1}.
IdentityReport identity_suite(const OrthoSystem& sys, int n_max, std::uint64_t seed = 7);

struct Expansion {
  std::vector<double> coeffs;  // π_k ⟨Q_k, f⟩_𝔴
  double sup_error = 0;
};

// Throws TruncationError when coefficients have not decayed below 1e-12 by K.
Expansion expansion_coeffs(const std::function<double(double)>& f, const OrthoSystem& sys, int K);

// π(j) ∫ e^{−tx} Q_i Q_j d𝔴.
double transition_spectral(const OrthoSystem& sys, double t, int i, int j, bool dual = false);

}  // namespace pushblock
