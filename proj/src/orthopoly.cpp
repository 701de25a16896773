#include "pushblock/orthopoly.hpp"

#include <fmt/format.h>

#include <cmath>
#include <random>

#include "pushblock/errors.hpp"

namespace pushblock {

OrthoSystem::OrthoSystem(RateSpec rates, int degree_cap, std::optional<SpectralMeasure> measure,
                         int index_cap)
    : rates_(std::move(rates)), cap_(degree_cap), index_cap_(std::max(index_cap, degree_cap)) {
  if (degree_cap < 1) throw DomainError("degree cap must be at least 1");
  if (!rates_.half_line()) throw UnsupportedError("orthogonal polynomials need a half-line chain");
  dual_ = siegmund_dual(rates_);
  int n = index_cap_ + 2;
  lam_.resize(n);
  mu_.resize(n);
  lamh_.resize(n);
  muh_.resize(n);
  for (int k = 0; k < n; ++k) {
    lam_[k] = rates_.lambda(k);
    mu_[k] = rates_.mu(k);
    lamh_[k] = dual_.lambda(k);
    muh_[k] = dual_.mu(k);
  }
  pi_.assign(n, 1.0);
  pihat_.assign(n, 1.0);
  for (int k = 0; k + 1 < n; ++k) {
    pi_[k + 1] = pi_[k] * lam_[k] / mu_[k + 1];
    pihat_[k + 1] = pihat_[k] * lamh_[k] / muh_[k + 1];
  }

  auto build = [&](const std::vector<double>& L, const std::vector<double>& M,
                   std::vector<std::vector<long double>>& out) {
    out.assign(cap_ + 1, {});
    out[0] = {1.0L};
    for (int k = 0; k < cap_; ++k) {
      std::vector<long double> next(k + 2, 0.0L);
      for (int j = 0; j <= k; ++j) {
        next[j] += (static_cast<long double>(L[k]) + M[k]) * out[k][j];
        next[j + 1] -= out[k][j];
      }
      if (k > 0)
        for (int j = 0; j < k; ++j) next[j] -= static_cast<long double>(M[k]) * out[k - 1][j];
      for (auto& c : next) {
        c /= L[k];
        if (!std::isfinite(static_cast<double>(c)))
          throw PrecisionError(fmt::format("coefficient overflow at degree {}; safe cap is {}", k + 1, k));
      }
      out[k + 1] = std::move(next);
    }
  };
  build(lam_, mu_, coef_);
  build(lamh_, muh_, dcoef_);

  if (measure) {
    measure_ = std::move(measure);
    dual_measure_ = measure_->tilted(lam_[0]);
  }
}

const SpectralMeasure& OrthoSystem::measure(bool dual) const {
  if (!measure_)
    throw UnsupportedError("rate family '" + rates_.label +
                           "' has no closed-form spectral measure; kernel features are unavailable");
  return dual ? *dual_measure_ : *measure_;
}

OrthoSystem build_polynomials(const RateSpec& rates, int degree_cap,
                              std::optional<SpectralMeasure> measure) {
  return OrthoSystem(rates, degree_cap, std::move(measure));
}

double inner_product(const std::function<double(double)>& f, const std::function<double(double)>& g,
                     const SpectralMeasure& m) {
  return m.integrate([&](double x) { return f(x) * g(x); });
}

double IdentityReport::max() const {
  return std::max({partial_sum, dual_partial_sum, tail, dual_tail});
}

namespace {

double rel(double lhs, double rhs) { return std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)); }

// Σ_{k=from}^{∞} π_k ⟨Q_k, f⟩ truncated once three terms in a row fall below 1e-13·max(1, π_k);
// the quadrature floor grows with π_k, so an absolute cut may never trigger.
double tail_sum(const OrthoSystem& sys, const std::function<double(double)>& f, int from, bool dual) {
  const auto& m = sys.measure(dual);
  double s = 0.0;
  int small = 0;
  for (int k = from; k <= sys.index_cap(); ++k) {
    double weight = sys.weight(k, dual);
    double term = weight * m.integrate([&](double x) { return sys.eval(k, x, dual) * f(x); });
    s += term;
    small = std::abs(term) < 1e-13 * std::max(1.0, weight) ? small + 1 : 0;
    if (small >= 3) return s;
  }
  throw TruncationError("polynomial tail sum did not decay");
}

}  // namespace

IdentityReport identity_suite(const OrthoSystem& sys, int n_max, std::uint64_t seed) {
  if (sys.cap() < n_max + 2) throw DomainError("degree cap must exceed n by at least 2");
  const auto& w = sys.measure(false);
  IdentityReport rep;
  std::mt19937_64 rng(seed);
  double hi = w.compact() ? w.upper() : 10.0;
  std::uniform_real_distribution<double> pick(w.lower(), hi);
  double l0 = sys.lambda0();
  for (int draw = 0; draw < 20; ++draw) {
    double x = pick(rng);
    if (x == 0.0) x = 0.5 * hi;
    for (int n = 0; n <= n_max; ++n) {
      double s = 0.0;
      for (int i = 0; i <= n; ++i) s += sys.pi(i) * sys.Q(i, x);
      rep.partial_sum = std::max(rep.partial_sum, rel(s, sys.Qhat(n, x)));
      double sh = 0.0;
      for (int k = 0; k < n; ++k) sh += sys.pihat(k) * sys.Qhat(k, x);
      rep.dual_partial_sum = std::max(rep.dual_partial_sum, rel(sh, l0 / x * (1.0 - sys.Q(n, x))));
    }
  }
  for (double t : {0.3, 1.0}) {
    auto f = [t](double x) { return std::exp(-t * x); };
    for (int n = 0; n <= n_max; ++n) {
      double lhs = w.integrate([&](double x) { return sys.Qhat(n, x) * (1.0 - f(x)); });
      rep.tail = std::max(rep.tail, rel(lhs, tail_sum(sys, f, n + 1, false)));
      double rhs = w.integrate([&](double x) { return sys.Q(n, x) * f(x); });
      rep.dual_tail = std::max(rep.dual_tail, rel(tail_sum(sys, f, n, true), rhs));
    }
  }
  return rep;
}

Expansion expansion_coeffs(const std::function<double(double)>& f, const OrthoSystem& sys, int K) {
  const auto& m = sys.measure(false);
  Expansion e;
  for (int k = 0; k <= K; ++k)
    e.coeffs.push_back(sys.pi(k) * m.integrate([&](double x) { return sys.Q(k, x) * f(x); }));
  double lastmax = 0.0;
  for (int k = std::max(0, K - 2); k <= K; ++k) lastmax = std::max(lastmax, std::abs(e.coeffs[k]));
  if (lastmax >= 1e-12)
    throw TruncationError(fmt::format("expansion coefficients have not decayed by K={} ({})", K, lastmax));
  double hi = m.compact() ? m.upper() : 10.0;
  std::vector<double> vals(K + 1);
  for (int g = 0; g <= 100; ++g) {
    double x = m.lower() + (hi - m.lower()) * g / 100.0;
    sys.eval_all(x, K, false, vals.data());
    double s = 0.0;
    for (int k = 0; k <= K; ++k) s += e.coeffs[k] * vals[k];
    e.sup_error = std::max(e.sup_error, std::abs(s - f(x)));
  }
  return e;
}

double transition_spectral(const OrthoSystem& sys, double t, int i, int j, bool dual) {
  if (t < 0.0) throw DomainError("time must be nonnegative");
  const auto& m = sys.measure(dual);
  return sys.weight(j, dual) *
         m.integrate([&](double x) { return std::exp(-t * x) * sys.eval(i, x, dual) * sys.eval(j, x, dual); });
}

}  // namespace pushblock
