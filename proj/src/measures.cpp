#include "pushblock/measures.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <numbers>

#include "pushblock/errors.hpp"

namespace pushblock {

namespace {

template <class T>
T evaluate(const PsiSpec& s, T x) {
  T v = std::exp(-T(s.t) * x);
  for (double a : s.alphas) v *= T(1.0) - T(a) * x;
  if (!s.poly.empty()) {
    T p(0.0);
    for (size_t k = s.poly.size(); k-- > 0;) p = p * x + T(s.poly[k]);
    v *= p;
  }
  return v;
}

long binomial2(long m) { return m * (m - 1) / 2; }

}  // namespace

double PsiSpec::operator()(double x) const { return evaluate(*this, x); }
std::complex<double> PsiSpec::operator()(std::complex<double> u) const { return evaluate(*this, u); }
double PsiSpec::at_zero() const { return poly.empty() ? 1.0 : poly[0]; }

std::vector<long double> PsiSpec::taylor(int m) const {
  if (m < 0) return {};
  std::vector<long double> c(static_cast<size_t>(m) + 1);
  long double term = 1.0L;
  for (int k = 0; k <= m; ++k) {
    c[static_cast<size_t>(k)] = term;
    term *= -static_cast<long double>(t) / (k + 1);
  }
  for (double a : alphas)
    for (int k = m; k >= 1; --k) c[static_cast<size_t>(k)] -= static_cast<long double>(a) * c[static_cast<size_t>(k - 1)];
  if (!poly.empty()) {
    std::vector<long double> out(c.size(), 0.0L);
    for (size_t k = 0; k < c.size(); ++k)
      for (size_t j = 0; j <= k && j < poly.size(); ++j) out[k] += static_cast<long double>(poly[j]) * c[k - j];
    c.swap(out);
  }
  return c;
}

std::vector<long double> PsiSpec::reciprocal_taylor(int m) const {
  if (m < 0) return {};
  // e^{tx} and each 1/(1 − αx) have nonnegative series, so only p needs a true inversion.
  std::vector<long double> r(static_cast<size_t>(m) + 1);
  long double term = 1.0L;
  for (int k = 0; k <= m; ++k) {
    r[static_cast<size_t>(k)] = term;
    term *= static_cast<long double>(t) / (k + 1);
  }
  for (double a : alphas)
    for (int k = 1; k <= m; ++k) r[static_cast<size_t>(k)] += static_cast<long double>(a) * r[static_cast<size_t>(k - 1)];
  if (!poly.empty()) {
    if (poly[0] == 0.0) throw DomainError("ψ vanishes at the origin");
    std::vector<long double> out(r.size());
    for (size_t k = 0; k < r.size(); ++k) {
      long double s = r[k];
      for (size_t j = 1; j <= k && j < poly.size(); ++j) s -= static_cast<long double>(poly[j]) * out[k - j];
      out[k] = s / static_cast<long double>(poly[0]);
    }
    r.swap(out);
  }
  return r;
}

namespace {

// R_k(x) / x^k by summing the Taylor tail; exact at x = 0.
double scaled_remainder(const PsiSpec& s, int k, double x) {
  if (k <= 0) return s(x);
  if (std::abs(s.t * x) > 30.0 || std::abs(x) > 4.0) {
    auto c = s.taylor(k - 1);
    long double head = 0.0L;
    for (int j = k - 1; j >= 0; --j) head = head * x + c[static_cast<size_t>(j)];
    return static_cast<double>((static_cast<long double>(s(x)) - head) / std::pow(static_cast<long double>(x), k));
  }
  int K = k + 40 + static_cast<int>(s.poly.size() + s.alphas.size()) + static_cast<int>(4 * std::abs(s.t * x));
  auto c = s.taylor(K);
  long double sum = 0.0L, xp = 1.0L;
  for (int j = k; j <= K; ++j) {
    sum += c[static_cast<size_t>(j)] * xp;
    xp *= x;
  }
  return static_cast<double>(sum);
}

}  // namespace

double PsiSpec::remainder(int m, double x) const {
  if (m <= 0) return (*this)(x);
  return scaled_remainder(*this, m, x) * std::pow(x, m);
}

std::vector<std::complex<double>> PsiSpec::zeros() const {
  std::vector<std::complex<double>> z;
  for (double a : alphas)
    if (a != 0.0) z.emplace_back(1.0 / a, 0.0);
  size_t deg = poly.size();
  while (deg > 0 && poly[deg - 1] == 0.0) --deg;
  if (deg >= 2) {
    long d = static_cast<long>(deg) - 1;
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(d, d);
    for (long i = 1; i < d; ++i) companion(i, i - 1) = 1.0;
    for (long i = 0; i < d; ++i) companion(i, d - 1) = -poly[static_cast<size_t>(i)] / poly[deg - 1];
    Eigen::EigenSolver<Eigen::MatrixXd> es(companion);
    for (long i = 0; i < d; ++i) z.push_back(es.eigenvalues()(i));
  }
  return z;
}

PsiSpec operator*(const PsiSpec& a, const PsiSpec& b) {
  PsiSpec out;
  out.t = a.t + b.t;
  out.alphas = a.alphas;
  out.alphas.insert(out.alphas.end(), b.alphas.begin(), b.alphas.end());
  std::sort(out.alphas.begin(), out.alphas.end(), std::greater<>());
  if (a.poly.empty()) {
    out.poly = b.poly;
  } else if (b.poly.empty()) {
    out.poly = a.poly;
  } else {
    out.poly.assign(a.poly.size() + b.poly.size() - 1, 0.0);
    for (size_t i = 0; i < a.poly.size(); ++i)
      for (size_t j = 0; j < b.poly.size(); ++j) out.poly[i + j] += a.poly[i] * b.poly[j];
  }
  return out;
}

PositivityThreshold positivity_threshold(const RateSpec& rates, long probe) {
  RateSpec dual = siegmund_dual(rates);
  PositivityThreshold th;
  double first_half = 0.0, second_half = 0.0;
  for (long x = 0; x <= probe; ++x) {
    double s = rates.lambda(x) + rates.mu(x);
    double sh = dual.lambda(x) + dual.mu(x);
    th.C = std::max(th.C, s);
    th.C_hat = std::max(th.C_hat, sh);
    double& half = x <= probe / 2 ? first_half : second_half;
    half = std::max({half, s, sh});
  }
  double end = std::max(rates.lambda(probe) + rates.mu(probe), dual.lambda(probe) + dual.mu(probe));
  double mid = std::max(rates.lambda(probe / 2) + rates.mu(probe / 2), dual.lambda(probe / 2) + dual.mu(probe / 2));
  if (second_half > first_half * (1.0 + 1e-9) && end > mid * 1.01) th.bounded = false;
  th.a_max = th.bounded ? 1.0 / (2.0 * std::max(th.C, th.C_hat)) : 0.0;
  return th;
}

namespace {

void require_cap(const OrthoSystem& sys, long cap, int margin) {
  if (cap < 0 || cap + margin > sys.index_cap())
    throw InvalidParameters(fmt::format("cap {} plus margin {} exceeds the index cap {}", cap, margin, sys.index_cap()));
}

// Generator of the level's chain on [0, N]; killing at 0 sits on the dual diagonal.
Eigen::MatrixXd generator_block(const OrthoSystem& sys, bool dual, int N) {
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N + 1, N + 1);
  for (int i = 0; i <= N; ++i) {
    double up = sys.birth(i, dual), down = sys.death(i, dual);
    G(i, i) = -(up + down);
    if (i < N) G(i, i + 1) = up;
    if (i > 0) G(i, i - 1) = down;
  }
  return G;
}

// Indices beyond the requested cap that the truncated exponential needs to stay exact.
int exponential_margin(const OrthoSystem& sys, const PsiSpec& psi, bool dual, int cap) {
  double rate = 0.0;
  for (int i = 0; i <= cap + 40; ++i) rate = std::max(rate, sys.birth(i, dual) + sys.death(i, dual));
  return 40 + static_cast<int>(std::ceil(4.0 * rate * psi.t)) + static_cast<int>(psi.alphas.size() + psi.poly.size());
}

// X ψ(−G) for a block of rows X. e^{tG} comes from uniformization, a sum of
// nonnegative terms, so small entries keep their relative accuracy.
Eigen::MatrixXd apply_psi(const Eigen::MatrixXd& G, const PsiSpec& psi, Eigen::MatrixXd X) {
  long n = G.rows();
  if (psi.t > 0.0) {
    double rate = 0.0;
    for (long i = 0; i < n; ++i) rate = std::max(rate, -G(i, i));
    if (rate > 0.0) {
      Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n) + G / rate;
      double mean = rate * psi.t, weight = std::exp(-mean), cumulative = 0.0;
      long kmax = static_cast<long>(mean + 12.0 * std::sqrt(mean) + 60.0);
      Eigen::MatrixXd sum = weight * X;
      cumulative += weight;
      for (long k = 1; k <= kmax && cumulative < 1.0 - 1e-17; ++k) {
        X = X * P;
        weight *= mean / static_cast<double>(k);
        sum += weight * X;
        cumulative += weight;
      }
      X = sum;
    }
  }
  for (double a : psi.alphas) X = X + a * (X * G);
  if (!psi.poly.empty()) {
    Eigen::MatrixXd R = psi.poly.back() * X;
    for (size_t k = psi.poly.size() - 1; k-- > 0;) R = -(R * G) + psi.poly[k] * X;
    X = R;
  }
  return X;
}

}  // namespace

MomentTable::MomentTable(const OrthoSystem& sys, const PsiSpec& psi, bool dual, int cap, int powers) : cap_(cap) {
  int margin = exponential_margin(sys, psi, dual, cap) + powers;
  require_cap(sys, cap, margin);
  int N = cap + margin;
  Eigen::MatrixXd G = generator_block(sys, dual, N);
  Eigen::MatrixXd row = Eigen::MatrixXd::Zero(1, N + 1);
  row(0, 0) = 1.0;
  row = apply_psi(G, psi, row);
  table_.assign(static_cast<size_t>(cap) + 1, std::vector<double>(static_cast<size_t>(powers), 0.0));
  for (int p = 0; p < powers; ++p) {
    for (int i = 0; i <= cap; ++i) table_[static_cast<size_t>(i)][static_cast<size_t>(p)] = row(0, i);
    row = -(row * G);
  }
}

double MomentTable::tail() const {
  double worst = 0.0;
  for (int i = std::max(0, cap_ - 4); i <= cap_; ++i)
    for (double v : table_[static_cast<size_t>(i)]) worst = std::max(worst, std::abs(v));
  return worst;
}

double CoherentMeasure::total() const {
  double s = 0.0;
  for (const auto& [nu, m] : mass) s += m;
  return s;
}

double CoherentMeasure::min() const {
  double lo = mass.empty() ? 0.0 : mass.begin()->second;
  for (const auto& [nu, m] : mass) lo = std::min(lo, m);
  return lo;
}

double CoherentMeasure::at(const Chamber& nu) const {
  auto it = mass.find(nu);
  return it == mass.end() ? 0.0 : it->second;
}

CoherentMeasure coherent_measure(const OrthoSystem& sys, const Harmonic& h, const PsiSpec& psi, LevelLabel level,
                                 long cap) {
  int m = level.size();
  bool dual = level.dual();
  MomentTable T(sys, psi, dual, static_cast<int>(cap), m);
  if (T.tail() > 1e-11)
    throw TruncationError(fmt::format("moments at the cap {} are still {:.3g}; raise the support cap", cap, T.tail()));
  double norm = std::pow(sys.lambda0(), -static_cast<double>(binomial2(m)));
  CoherentMeasure out;
  out.level = level;
  out.cap = cap;
  Eigen::MatrixXd G(m, m);
  for (const auto& nu : all_chambers(m, cap)) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) G(i, j) = T(static_cast<int>(nu[static_cast<size_t>(i)]), m - 1 - j);
    double d = m == 1 ? G(0, 0) : G.determinant();
    out.mass.emplace(nu, d == 0.0 ? 0.0 : d * h.h(level, nu) * norm);
  }
  return out;
}

EvolutionOperator::EvolutionOperator(const OrthoSystem& sys, const Harmonic& h, const PsiSpec& psi, LevelLabel level,
                                     int cap)
    : h_(&h), level_(level), cap_(cap) {
  bool dual = level.dual();
  int margin = exponential_margin(sys, psi, dual, cap);
  require_cap(sys, cap, margin);
  int N = cap + margin;
  Eigen::MatrixXd G = generator_block(sys, dual, N);
  Eigen::MatrixXd rows = Eigen::MatrixXd::Identity(cap + 1, N + 1);
  Eigen::MatrixXd A = apply_psi(G, psi, rows);
  size_t n = static_cast<size_t>(cap) + 1;
  inner_.assign(n, std::vector<double>(n, 0.0));
  for (size_t a = 0; a < n; ++a)
    for (size_t b = 0; b < n; ++b) inner_[a][b] = A(static_cast<long>(a), static_cast<long>(b));
}

double EvolutionOperator::operator()(const Chamber& k, const Chamber& nu) const {
  long m = static_cast<long>(k.size());
  if (m != level_.size() || static_cast<long>(nu.size()) != m) throw DomainError("configuration size does not match level");
  for (const auto* v : {&k, &nu})
    for (long c : *v)
      if (c < 0 || c > cap_) throw TruncationError(fmt::format("index {} beyond the operator cap {}", c, cap_));
  Eigen::MatrixXd G(m, m);
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < m; ++j) G(i, j) = inner_[static_cast<size_t>(k[static_cast<size_t>(i)])][static_cast<size_t>(nu[static_cast<size_t>(j)])];
  double d = m == 1 ? G(0, 0) : G.determinant();
  if (d == 0.0) return 0.0;
  return d * h_->h(level_, nu) / h_->h(level_, k);
}

CoherencyResidual coherency_check(const OrthoSystem& sys, const PsiSpec& psi, int n, long cap, long check_cap) {
  if (n < 1) throw InvalidParameters("coherency needs n >= 1");
  Harmonic H(sys);
  LevelLabel top{n, n + 1}, mid{n, n}, low{n - 1, n};
  auto Mtop = coherent_measure(sys, H, psi, top, cap);
  auto Mmid = coherent_measure(sys, H, psi, mid, cap);
  auto Mlow = coherent_measure(sys, H, psi, low, cap);
  CoherencyResidual res;
  for (const auto& y : all_chambers(n, check_cap)) {
    double w = link_weight(H, top, y) * H.h(mid, y), s = 0.0;
    for (const auto& x : above_nn1(y, cap)) s += Mtop.at(x) * w / H.h(top, x);
    res.upper = std::max(res.upper, std::abs(s - Mmid.at(y)));
    w = link_weight(H, mid, y) * H.h(low, y);
    s = 0.0;
    for (const auto& x : above_nn(y, cap)) s += Mmid.at(x) * w / H.h(mid, x);
    res.lower = std::max(res.lower, std::abs(s - Mlow.at(y)));
  }
  return res;
}

EvolutionResidual evolution_check(const OrthoSystem& sys, const PsiSpec& psi1, const PsiSpec& psi2, LevelLabel level,
                                  long cap, long check_cap) {
  Harmonic H(sys);
  PsiSpec both = psi1 * psi2;
  auto M1 = coherent_measure(sys, H, psi1, level, cap);
  auto M12 = coherent_measure(sys, H, both, level, cap);
  int c = static_cast<int>(cap);
  EvolutionOperator P1(sys, H, psi1, level, c), P2(sys, H, psi2, level, c), P12(sys, H, both, level, c);
  auto all = all_chambers(level.size(), cap);
  auto checked = all_chambers(level.size(), check_cap);
  EvolutionResidual res;
  for (const auto& nu : checked) {
    double s = 0.0;
    for (const auto& k : all) s += M1.at(k) * P2(k, nu);
    res.measure = std::max(res.measure, std::abs(s - M12.at(nu)));
  }
  double row_target = std::pow(psi2.at_zero(), level.size());
  auto starts = all_chambers(level.size(), std::min<long>(check_cap, level.size() + 1));
  for (const auto& k : starts) {
    double row = 0.0;
    std::vector<double> first(all.size());
    for (size_t j = 0; j < all.size(); ++j) {
      first[j] = P1(k, all[j]);
      row += P2(k, all[j]);
    }
    res.row_sum = std::max(res.row_sum, std::abs(row - row_target));
    for (const auto& nu : checked) {
      double s = 0.0;
      for (size_t j = 0; j < all.size(); ++j)
        if (first[j] != 0.0) s += first[j] * P2(all[j], nu);
      res.composition = std::max(res.composition, std::abs(s - P12(k, nu)));
    }
  }
  return res;
}

double psi_function(const OrthoSystem& sys, const PsiSpec& psi, bool dual, int m, int i) {
  const auto& meas = sys.measure(dual);
  double sign = (m % 2 == 0) ? 1.0 : -1.0;
  if (m >= 0)
    return meas.integrate([&](double x) { return sys.weighted(i, x, dual) * sign * std::pow(x, m) * psi(x); }, 1e-12);
  return meas.integrate([&](double x) { return sys.weighted(i, x, dual) * sign * scaled_remainder(psi, -m, x); }, 1e-12);
}

namespace {

double e_radius(const PsiSpec& psi) {
  double r = 0.5;
  for (const auto& z : psi.zeros()) r = std::min(r, 0.5 * std::abs(z));
  if (!(r > 0.0)) throw ContourError("ψ vanishes at the origin");
  return r;
}

}  // namespace

double e_function(const OrthoSystem& sys, const PsiSpec& psi, bool dual, int l, int i) {
  if (l < 0) return 0.0;
  double r = e_radius(psi);
  double biggest = 0.0;
  auto trapezoid = [&](int N) {
    std::complex<double> s = 0.0;
    for (int k = 0; k < N; ++k) {
      std::complex<double> u = std::polar(r, 2.0 * std::numbers::pi * (k + 0.5) / N);
      std::complex<double> term = sys.eval(i, u, dual) / (psi(u) * std::pow(u, l));
      biggest = std::max(biggest, std::abs(term));
      s += term;
    }
    return s.real() / N;
  };
  double prev = trapezoid(128);
  for (int N = 256; N <= 1 << 16; N *= 2) {
    double cur = trapezoid(N);
    // Settled when the change is below 1e-10 relative or at the rounding floor of the terms.
    double tol = std::max(1e-10 * std::abs(cur), 1e3 * std::numeric_limits<double>::epsilon() * biggest);
    if (std::abs(cur - prev) <= tol) return (l % 2 == 0 ? 1.0 : -1.0) * cur;
    prev = cur;
  }
  throw ContourError(fmt::format("contour quadrature for E_{}({}) did not settle", l, i));
}

double e_function_series(const OrthoSystem& sys, const PsiSpec& psi, bool dual, int l, int i) {
  if (l < 0) return 0.0;
  if (i > sys.cap()) throw InvalidParameters("index beyond the coefficient table");
  const auto& a = sys.coeffs(i, dual);
  auto r = psi.reciprocal_taylor(l);
  long double s = 0.0L;
  for (int k = 0; k <= std::min(l, i); ++k) s += a[static_cast<size_t>(k)] * r[static_cast<size_t>(l - k)];
  return static_cast<double>((l % 2 == 0 ? 1.0L : -1.0L) * s);
}

Biorthogonality biorthogonality_check(const OrthoSystem& sys, const PsiSpec& psi, bool dual, int kmax) {
  size_t K = static_cast<size_t>(kmax) + 1;
  int cap = std::min(200, sys.index_cap() - exponential_margin(sys, psi, dual, 200) - kmax - 1);
  MomentTable moments(sys, psi, dual, cap, kmax + 1);
  std::vector<std::vector<double>> S(K, std::vector<double>(K, 0.0));
  Biorthogonality out;
  int quiet = 0;
  for (int i = 0; i <= cap; ++i) {
    std::vector<double> Psi(K), E(K);
    for (size_t k = 0; k < K; ++k) {
      Psi[k] = (k % 2 == 0 ? 1.0 : -1.0) * moments(i, static_cast<int>(k));
      E[k] = e_function(sys, psi, dual, static_cast<int>(k), i);
    }
    double biggest = 0.0;
    for (size_t k = 0; k < K; ++k)
      for (size_t l = 0; l < K; ++l) {
        S[k][l] += Psi[k] * E[l];
        biggest = std::max(biggest, std::abs(Psi[k] * E[l]));
      }
    out.index_cap = i;
    quiet = biggest < 1e-14 ? quiet + 1 : 0;
    if (quiet >= 5 && i > kmax) break;
  }
  if (quiet < 5) throw TruncationError("biorthogonality sums did not settle within the index cap");
  for (size_t k = 0; k < K; ++k)
    for (size_t l = 0; l < K; ++l) out.residual = std::max(out.residual, std::abs(S[k][l] - (k == l ? 1.0 : 0.0)));
  return out;
}

std::vector<std::pair<InterlacingPattern, double>> gibbs_distribution(const OrthoSystem& sys, const Harmonic& h,
                                                                      const PsiSpec& psi, int depth, long cap) {
  if (depth < 1) throw InvalidParameters("depth must be positive");
  int levels = pattern_levels(depth);
  LevelLabel top = LevelLabel::from_order(levels);
  auto M = coherent_measure(sys, h, psi, top, cap);
  std::vector<std::pair<InterlacingPattern, double>> out;
  InterlacingPattern cur;
  cur.levels.resize(static_cast<size_t>(levels));
  std::function<void(int, double)> down = [&](int k, double w) {
    if (k == 0) {
      out.emplace_back(cur, w);
      return;
    }
    for (auto& [lower, p] : link_kernel(h, cur.label(static_cast<size_t>(k)), cur.levels[static_cast<size_t>(k)])) {
      cur.levels[static_cast<size_t>(k - 1)] = lower;
      down(k - 1, w * p);
    }
  };
  for (const auto& [nu, w] : M.mass) {
    if (w == 0.0) continue;
    cur.levels[static_cast<size_t>(levels - 1)] = nu;
    down(levels - 1, w);
  }
  return out;
}

InterlacingPattern sample_gibbs(const CoherentMeasure& top, const Harmonic& h, int depth, Rng& rng) {
  double total = 0.0;
  for (const auto& [nu, w] : top.mass) total += std::max(0.0, w);
  if (!(total > 0.0)) throw DomainError("coherent measure has no positive mass");
  double u = uniform01(rng) * total, acc = 0.0;
  const Chamber* pick = &top.mass.rbegin()->first;
  for (const auto& [nu, w] : top.mass) {
    acc += std::max(0.0, w);
    if (u < acc) {
      pick = &nu;
      break;
    }
  }
  return sample_down(*pick, h, depth, rng);
}

}  // namespace pushblock
