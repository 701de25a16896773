#include "pushblock/kernel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include <boost/multiprecision/mpfr.hpp>

#include "pushblock/errors.hpp"

namespace pushblock {

std::pair<double, double> kernel_contour(double upper_edge, const PsiSpec& psi) {
  if (!psi.poly.empty()) throw UnsupportedError("the kernel is defined for ψ = Π(1 − α_i x) e^{−tx}");
  double margin = 0.25 * std::max(upper_edge, 1.0);
  for (const auto& z : psi.zeros()) {
    double gap = std::abs(z) - upper_edge;
    if (!(gap > 0.0))
      throw ContourError(fmt::format("zero of ψ at {} lies inside the disc of radius I⁺ = {}", std::abs(z), upper_edge));
    margin = std::min(margin, 0.5 * gap);
  }
  return {upper_edge + margin, margin};
}

CorrelationKernel::CorrelationKernel(const OrthoSystem& sys, PsiSpec psi, KernelMethod method)
    : sys_(&sys), psi_(std::move(psi)), method_(method) {
  if (!sys.has_compact_measure()) throw UnsupportedError("the correlation kernel needs a compactly supported measure");
  if (psi_.t < 0.0) throw DomainError("ψ needs t >= 0");
  for (double a : psi_.alphas)
    if (a < 0.0) throw DomainError("ψ needs nonnegative α");
  upper_ = sys.measure(false).upper();
  std::tie(radius_, margin_) = kernel_contour(upper_, psi_);
  // Enough nodes for e^{−tx} times polynomials of moderate degree on the support.
  spectral_nodes_ = 256 + 64 * static_cast<int>(std::ceil(psi_.t * upper_ / 32.0));
  for (bool dual : {false, true}) {
    const auto& rule = sys.measure(dual).rule(spectral_nodes_);
    Side& s = dual ? dual_side_ : primal_side_;
    s.nodes = rule.nodes;
    s.weights = rule.weights;
    s.psi.resize(s.nodes.size());
    for (size_t k = 0; k < s.nodes.size(); ++k) s.psi[k] = psi_(s.nodes[k]);
  }
}

KernelMetadata CorrelationKernel::metadata() const {
  std::lock_guard<std::mutex> lock(mu_);
  return {upper_, radius_, margin_, spectral_nodes_, max_nodes_used_};
}

double CorrelationKernel::gram(const KernelPoint& row, const KernelPoint& col) const {
  int power = row.level.n2 - col.level.n2;
  if (power < 0) throw DomainError("gram term needs the row level at or above the column level");
  bool rdual = row.level.dual(), cdual = col.level.dual();
  const Side& s = side(rdual);
  double sum = 0.0;
  for (size_t k = 0; k < s.nodes.size(); ++k) {
    double x = s.nodes[k];
    sum += s.weights[k] * pbar(static_cast<int>(row.x), x, rdual) * std::pow(x, power) *
           sys_->eval(static_cast<int>(col.x), x, cdual);
  }
  return sum;
}

const std::vector<std::complex<double>>& CorrelationKernel::inner_transform(bool dual, int n2, long i, int nodes) const {
  auto key = std::make_tuple(dual, n2, i, nodes);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = transforms_.find(key);
    if (it != transforms_.end()) return it->second;
  }
  const Side& s = side(dual);
  std::vector<double> g(s.nodes.size());
  for (size_t k = 0; k < s.nodes.size(); ++k)
    g[k] = s.weights[k] * pbar(static_cast<int>(i), s.nodes[k], dual) * std::pow(s.nodes[k], n2) * s.psi[k];
  std::vector<std::complex<double>> F(static_cast<size_t>(nodes));
  for (int q = 0; q < nodes; ++q) {
    std::complex<double> u = std::polar(radius_, 2.0 * std::numbers::pi * q / nodes), acc = 0.0;
    for (size_t k = 0; k < g.size(); ++k) acc += g[k] / (s.nodes[k] - u);
    F[static_cast<size_t>(q)] = acc;
  }
  std::lock_guard<std::mutex> lock(mu_);
  return transforms_.emplace(key, std::move(F)).first->second;
}

// (1/2πi)∮ P̃_j(u) F_i(u) / (u^{m2} ψ(u)) du on `nodes` equally spaced points.
double CorrelationKernel::contour_sum(const KernelPoint& row, const KernelPoint& col, int nodes, double* scale) const {
  const auto& F = inner_transform(row.level.dual(), row.level.n2, row.x, nodes);
  bool cdual = col.level.dual();
  int m2 = col.level.n2;
  std::complex<double> acc = 0.0;
  double mag = 0.0;
  for (int q = 0; q < nodes; ++q) {
    std::complex<double> u = std::polar(radius_, 2.0 * std::numbers::pi * q / nodes);
    std::complex<double> f = sys_->eval(static_cast<int>(col.x), u, cdual) * F[static_cast<size_t>(q)] /
                             (std::pow(u, m2) * psi_(u)) * u;
    acc += f;
    mag += std::abs(f);
  }
  *scale = mag / nodes;
  return acc.real() / nodes;
}

double CorrelationKernel::contour_value(const KernelPoint& row, const KernelPoint& col) const {
  double scale = 0.0;
  int nodes = 128;
  double prev = contour_sum(row, col, nodes, &scale);
  for (;;) {
    if (nodes >= (1 << 12))
      throw PrecisionError(fmt::format("contour quadrature for ((({},{}),{}), (({},{}),{})) did not settle by {} nodes",
                                       row.level.n1, row.level.n2, row.x, col.level.n1, col.level.n2, col.x, nodes));
    nodes *= 2;
    double cur = contour_sum(row, col, nodes, &scale);
    bool settled = std::abs(cur - prev) <= 1e-10 * std::abs(cur) || std::abs(cur - prev) <= 1e-13 * scale;
    prev = cur;
    if (settled) break;
  }
  {
    std::lock_guard<std::mutex> lock(mu_);
    max_nodes_used_ = std::max(max_nodes_used_, nodes);
  }
  double value = prev;
  if (row.level.order() >= col.level.order()) value += gram(row, col);
  return value;
}

namespace {

template <class Real>
std::vector<Real> coefficients(const OrthoSystem& sys, int j, bool dual) {
  // Monomial coefficients of Q_j from the recurrence, carried in Real.
  std::vector<Real> prev(1, Real(1)), cur(1, Real(1));
  if (j == 0) return cur;
  Real l0 = sys.birth(0, dual), d0 = sys.death(0, dual);
  cur = {(l0 + d0) / l0, Real(-1) / l0};
  for (int k = 1; k < j; ++k) {
    Real lk = sys.birth(k, dual), dk = sys.death(k, dual);
    std::vector<Real> next(cur.size() + 1, Real(0));
    for (size_t q = 0; q < cur.size(); ++q) {
      next[q] += (lk + dk) * cur[q];
      next[q + 1] -= cur[q];
    }
    for (size_t q = 0; q < prev.size(); ++q) next[q] -= dk * prev[q];
    for (auto& c : next) c /= lk;
    prev.swap(cur);
    cur.swap(next);
  }
  return cur;
}

// ψ(x) Σ_{first≤l≤last} b_l x^{l−first} at each node, b_l the Taylor coefficients of Q_j/ψ.
// The alternating coefficients of Q_j cancel here, so Real carries enough digits.
template <class Real>
std::vector<double> residue_profile(const OrthoSystem& sys, const PsiSpec& psi, const std::vector<double>& nodes,
                                    bool cdual, int j, int first, int last) {
  auto a = coefficients<Real>(sys, j, cdual);
  std::vector<Real> r(static_cast<size_t>(last) + 1);
  Real term(1), t(psi.t);
  for (int k = 0; k <= last; ++k) {
    r[static_cast<size_t>(k)] = term;
    term = term * t / Real(k + 1);
  }
  for (double al : psi.alphas)
    for (int k = 1; k <= last; ++k) r[static_cast<size_t>(k)] += Real(al) * r[static_cast<size_t>(k - 1)];
  std::vector<Real> b(static_cast<size_t>(last - first + 1));
  for (int l = first; l <= last; ++l) {
    Real s(0);
    for (int k = 0; k <= j && k <= l; ++k) s += a[static_cast<size_t>(k)] * r[static_cast<size_t>(l - k)];
    b[static_cast<size_t>(l - first)] = s;
  }
  std::vector<double> out(nodes.size());
  for (size_t q = 0; q < nodes.size(); ++q) {
    Real x(nodes[q]), acc(0);
    for (size_t l = b.size(); l-- > 0;) acc = acc * x + b[l];
    Real factor = psi.t == 0.0 ? Real(1) : Real(exp(-t * x));
    for (double al : psi.alphas) factor *= Real(1) - Real(al) * x;
    out[q] = static_cast<double>(acc * factor);
  }
  return out;
}

}  // namespace

const std::vector<double>& CorrelationKernel::profile(bool rdual, const KernelPoint& col, bool head) const {
  int m = col.level.n2, j = static_cast<int>(col.x);
  bool cdual = col.level.dual();
  auto key = std::make_tuple(rdual, head ? -m : m, cdual, j);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = profiles_.find(key);
    if (it != profiles_.end()) return it->second;
  }
  if (j > sys_->index_cap() - 2) throw InvalidParameters(fmt::format("column index {} beyond the rate table", j));
  double peak = psi_.t * upper_;
  int extra = 0;
  for (double al : psi_.alphas) {
    double ratio = al * upper_;
    if (ratio >= 1.0) throw ContourError("α·I⁺ >= 1: the Taylor tail of 1/ψ diverges on the support");
    if (ratio > 0.0) extra += static_cast<int>(std::ceil(45.0 / -std::log(ratio)));
  }
  int first = head ? 0 : m;
  int last = head ? m - 1 : m + j + static_cast<int>(std::ceil(peak + 12.0 * std::sqrt(peak + 1.0))) + 60 + extra;
  // Size of the cancelling sum: Σ_k |a_k| (I⁺)^k.
  long double size = 0.0L;
  {
    auto a = coefficients<long double>(*sys_, j, cdual);
    for (size_t k = a.size(); k-- > 0;) size = size * upper_ + std::abs(a[k]);
  }
  const auto& nodes = side(rdual).nodes;
  std::vector<double> prof;
  if (size < 10.0L)
    prof = residue_profile<long double>(*sys_, psi_, nodes, cdual, j, first, last);
  else if (size < 1e30L)
    prof = residue_profile<boost::multiprecision::mpfr_float_50>(*sys_, psi_, nodes, cdual, j, first, last);
  else if (size < 1e80L)
    prof = residue_profile<boost::multiprecision::mpfr_float_100>(*sys_, psi_, nodes, cdual, j, first, last);
  else
    throw PrecisionError(fmt::format("column index {} needs more than 100 digits in the residue form", j));
  std::lock_guard<std::mutex> lock(mu_);
  return profiles_.emplace(key, std::move(prof)).first->second;
}

// The u-integral done by residues at 0 and x leaves −∫ P̄_i x^{n2−m2} ψ R_{m2}[P̃_j/ψ] d𝔪.
// When row ≥ col the P̃_j part of R cancels the Gram term, leaving the Taylor head
// ∫ P̄_i x^{n2−m2} ψ Σ_{l<m2} b_l x^l d𝔪; otherwise the tail Σ_{l≥m2} is integrated.
double CorrelationKernel::residue_value(const KernelPoint& row, const KernelPoint& col) const {
  bool rdual = row.level.dual();
  bool head = row.level.order() >= col.level.order();
  const auto& prof = profile(rdual, col, head);
  const Side& sd = side(rdual);
  int power = head ? row.level.n2 - col.level.n2 : row.level.n2;
  long double integral = 0.0L;
  for (size_t k = 0; k < sd.nodes.size(); ++k)
    integral += static_cast<long double>(sd.weights[k] * pbar(static_cast<int>(row.x), sd.nodes[k], rdual) *
                                         std::pow(sd.nodes[k], power) * prof[k]);
  return head ? static_cast<double>(integral) : -static_cast<double>(integral);
}

KernelMethod CorrelationKernel::chosen_method(const KernelPoint& row, const KernelPoint& col) const {
  if (method_ != KernelMethod::Auto) return method_;
  // Size of the contour integrand against an O(1) answer: |P̃_j| on the circle,
  // the inner integral bounded by Σ|g_k| / margin, and 1/(u^{m2} ψ(u)).
  bool rdual = row.level.dual();
  const Side& s = side(rdual);
  double inner = 0.0;
  for (size_t k = 0; k < s.nodes.size(); ++k)
    inner += std::abs(s.weights[k] * pbar(static_cast<int>(row.x), s.nodes[k], rdual)) *
             std::pow(s.nodes[k], row.level.n2) * s.psi[k];
  double outer = 0.0;
  for (int q = 0; q < 64; ++q) {
    std::complex<double> u = std::polar(radius_, 2.0 * std::numbers::pi * q / 64);
    outer = std::max(outer, std::abs(sys_->eval(static_cast<int>(col.x), u, col.level.dual()) / psi_(u)));
  }
  double log_size = std::log(outer) + std::log(inner) - std::log(margin_) - col.level.n2 * std::log(radius_);
  return log_size < std::log(1e5) ? KernelMethod::Contour : KernelMethod::Residue;
}

double CorrelationKernel::operator()(const KernelPoint& row, const KernelPoint& col) const {
  if (row.x < 0 || col.x < 0) throw DomainError("kernel sites must be nonnegative");
  if (chosen_method(row, col) != KernelMethod::Contour) return residue_value(row, col);
  if (method_ == KernelMethod::Contour) return contour_value(row, col);
  // Auto: a contour sum stuck at its round-off floor falls back to the residue form.
  try {
    return contour_value(row, col);
  } catch (const PrecisionError&) {
    return residue_value(row, col);
  }
}

Eigen::MatrixXd CorrelationKernel::matrix(const std::vector<KernelPoint>& points, int threads) const {
  long n = static_cast<long>(points.size());
  Eigen::MatrixXd K(n, n);
  auto work = [&](long start, long stride) {
    for (long r = start; r < n; r += stride)
      for (long c = 0; c < n; ++c) K(r, c) = (*this)(points[static_cast<size_t>(r)], points[static_cast<size_t>(c)]);
  };
  if (threads <= 1 || n < 2) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w) pool.emplace_back(work, w, threads);
    for (auto& th : pool) th.join();
  }
  return K;
}

double CorrelationKernel::correlation(const std::vector<KernelPoint>& points) const {
  if (points.empty()) return 1.0;
  return matrix(points).determinant();
}

CorrelationKernel::Trace CorrelationKernel::level_trace(LevelLabel level, double tol, int max_index) const {
  Trace tr;
  int quiet = 0;
  for (int i = 0; i <= max_index; ++i) {
    double d = (*this)({level, i}, {level, i});
    tr.value += d;
    tr.index_cap = i;
    quiet = std::abs(d) < tol ? quiet + 1 : 0;
    if (quiet >= 5 && i >= level.n2) return tr;
  }
  throw TruncationError(fmt::format("diagonal of level ({},{}) still above {} at site {}", level.n1, level.n2, tol,
                                    max_index));
}

LevelLabel scaled_level(LevelLabel offset, int N, double eta) {
  int shift = static_cast<int>(std::floor(N * eta));
  LevelLabel out{shift + offset.n1, shift + offset.n2};
  if (out.n1 < 0 || out.n2 < 1) throw DomainError("scaled level falls below the bottom of the pattern");
  return out;
}

double scaling_limit_kernel(const OrthoSystem& sys, const KernelPoint& row, const KernelPoint& col, double alpha) {
  if (!(alpha > 0.0)) throw DomainError("the scaling limit needs α > 0");
  bool rdual = row.level.dual(), cdual = col.level.dual();
  const SpectralMeasure& m = sys.measure(rdual);
  int power = row.level.n2 - col.level.n2;
  int i = static_cast<int>(row.x), j = static_cast<int>(col.x);
  auto integrand = [&](double x) { return sys.weighted(i, x, rdual) * std::pow(x, power) * sys.eval(j, x, cdual); };
  double value = 0.0;
  if (row.level.order() >= col.level.order()) value += m.integrate(integrand, 1e-12);
  if (alpha < m.upper()) value -= m.integrate_range(integrand, std::max(alpha, m.lower()), m.upper(), 1e-12);
  return value;
}

double discrete_ensemble_kernel(const OrthoSystem& sys, bool dual, int i, int j, double r) {
  const SpectralMeasure& m = sys.measure(dual);
  if (r >= m.upper()) return 0.0;
  double norm = std::sqrt(sys.weight(i, dual) * sys.weight(j, dual));
  return norm * m.integrate_range([&](double x) { return sys.eval(i, x, dual) * sys.eval(j, x, dual); },
                                  std::max(r, m.lower()), m.upper(), 1e-12);
}

}  // namespace pushblock
