#include "pushblock/interlacing.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "pushblock/errors.hpp"

namespace pushblock {

bool is_chamber(const Chamber& x, bool half_line) {
  if (half_line && !x.empty() && x.front() < 0) return false;
  for (size_t i = 1; i < x.size(); ++i)
    if (x[i] <= x[i - 1]) return false;
  return true;
}

bool interlace_check(InterlaceKind kind, const Chamber& x, const Chamber& y) {
  size_t n = y.size();
  if (kind == InterlaceKind::NNPlus1) {
    if (x.size() != n + 1) throw DomainError("W^{n,n+1} needs |x| = |y| + 1");
    for (size_t i = 0; i < n; ++i)
      if (!(x[i] <= y[i] && y[i] < x[i + 1])) return false;
    return true;
  }
  if (x.size() != n) throw DomainError("W^{n,n} needs |x| = |y|");
  for (size_t i = 0; i < n; ++i) {
    if (!(y[i] <= x[i])) return false;
    if (i + 1 < n && !(x[i] < y[i + 1])) return false;
  }
  return true;
}

double interlace_det(InterlaceKind kind, const Chamber& x, const Chamber& y) {
  long n = static_cast<long>(x.size());
  Eigen::MatrixXd M(n, n);
  if (kind == InterlaceKind::NNPlus1) {
    if (y.size() + 1 != x.size()) throw DomainError("W^{n,n+1} needs |x| = |y| + 1");
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j) M(i, j) = (j == n - 1 || x[i] <= y[j]) ? 1.0 : 0.0;
  } else {
    if (y.size() != x.size()) throw DomainError("W^{n,n} needs |x| = |y|");
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j) M(i, j) = y[i] <= x[j] ? 1.0 : 0.0;
  }
  return M.determinant();
}

namespace {

// Cartesian product of integer ranges [lo_i, hi_i].
std::vector<Chamber> product(const std::vector<std::pair<long, long>>& ranges) {
  std::vector<Chamber> out;
  for (const auto& [a, b] : ranges)
    if (b < a) return out;
  Chamber cur(ranges.size());
  std::function<void(size_t)> rec = [&](size_t i) {
    if (i == ranges.size()) {
      out.push_back(cur);
      return;
    }
    for (long v = ranges[i].first; v <= ranges[i].second; ++v) {
      cur[i] = v;
      rec(i + 1);
    }
  };
  rec(0);
  return out;
}

}  // namespace

std::vector<Chamber> below_nn1(const Chamber& x) {
  std::vector<std::pair<long, long>> r;
  for (size_t i = 0; i + 1 < x.size(); ++i) r.emplace_back(x[i], x[i + 1] - 1);
  return product(r);
}

std::vector<Chamber> below_nn(const Chamber& x) {
  std::vector<std::pair<long, long>> r;
  for (size_t i = 0; i < x.size(); ++i) r.emplace_back(i == 0 ? 0 : x[i - 1] + 1, x[i]);
  return product(r);
}

std::vector<Chamber> above_nn1(const Chamber& y, long cap) {
  std::vector<std::pair<long, long>> r;
  size_t n = y.size();
  r.emplace_back(0, n == 0 ? cap : y[0]);
  for (size_t i = 0; i < n; ++i) r.emplace_back(y[i] + 1, i + 1 < n ? y[i + 1] : cap);
  return product(r);
}

std::vector<Chamber> above_nn(const Chamber& y, long cap) {
  std::vector<std::pair<long, long>> r;
  size_t n = y.size();
  for (size_t i = 0; i < n; ++i) r.emplace_back(y[i], i + 1 < n ? y[i + 1] - 1 : cap);
  return product(r);
}

std::vector<Chamber> all_chambers(int n, long cap, long lo) {
  std::vector<Chamber> out;
  Chamber cur(static_cast<size_t>(n));
  std::function<void(int, long)> rec = [&](int i, long start) {
    if (i == n) {
      out.push_back(cur);
      return;
    }
    for (long v = start; v <= cap - (n - 1 - i); ++v) {
      cur[static_cast<size_t>(i)] = v;
      rec(i + 1, v + 1);
    }
  };
  rec(0, lo);
  return out;
}

Chamber packed(int n) {
  Chamber c(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) c[static_cast<size_t>(i)] = i;
  return c;
}

namespace {

// Divided-difference form: det(f_i(x_j))/Δ(x) = det(f_i[x_1..x_j]), where a
// polynomial's divided difference over j points is Σ_k a_k h_{k−j+1}(x_1..x_j)
// with h_m the complete homogeneous symmetric polynomials.
double confluent_ratio(const OrthoSystem& sys, const Chamber& nu, const std::vector<double>& x, bool dual) {
  long n = static_cast<long>(nu.size());
  long maxdeg = 0;
  for (long v : nu) maxdeg = std::max(maxdeg, v);
  if (maxdeg > sys.cap()) throw SingularityError("confluent path needs degrees within the coefficient cap");
  // hom[j][m] = h_m(x_1..x_{j+1})
  std::vector<std::vector<long double>> hom(static_cast<size_t>(n),
                                            std::vector<long double>(static_cast<size_t>(maxdeg + 1), 0.0L));
  for (long j = 0; j < n; ++j) {
    for (long m = 0; m <= maxdeg; ++m) {
      long double prev = j > 0 ? hom[j - 1][m] : (m == 0 ? 1.0L : 0.0L);
      long double lower = m > 0 ? hom[j][m - 1] : 0.0L;
      hom[j][m] = prev + static_cast<long double>(x[j]) * lower;
      if (j == 0) hom[j][m] = std::pow(static_cast<long double>(x[0]), m);
    }
  }
  Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> M(n, n);
  for (long i = 0; i < n; ++i) {
    const auto& a = sys.coeffs(static_cast<int>(nu[i]), dual);
    for (long j = 0; j < n; ++j) {
      long double s = 0.0L;
      for (long k = j; k < static_cast<long>(a.size()); ++k) s += a[k] * hom[j][k - j];
      M(i, j) = s;
    }
  }
  return static_cast<double>(M.determinant());
}

}  // namespace

double km_polynomial(const OrthoSystem& sys, const Chamber& nu, const std::vector<double>& x, bool dual,
                     bool allow_confluent) {
  long n = static_cast<long>(nu.size());
  if (static_cast<long>(x.size()) != n) throw DomainError("need as many points as indices");
  double gap = INFINITY;
  for (long i = 0; i < n; ++i)
    for (long j = i + 1; j < n; ++j) gap = std::min(gap, std::abs(x[j] - x[i]));
  if (gap < 1e-6) {
    if (!allow_confluent) throw SingularityError("coincident points in Vandermonde ratio");
    return confluent_ratio(sys, nu, x, dual);
  }
  Eigen::MatrixXd M(n, n);
  double vander = 1.0;
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) M(i, j) = sys.eval(static_cast<int>(nu[i]), x[j], dual);
  for (long i = 0; i < n; ++i)
    for (long j = i + 1; j < n; ++j) vander *= x[j] - x[i];
  return M.determinant() / vander;
}

double confluent_at_zero(const OrthoSystem& sys, const Chamber& nu, bool dual) {
  long n = static_cast<long>(nu.size());
  Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> M(n, n);
  for (long i = 0; i < n; ++i) {
    if (nu[i] > sys.cap()) throw SingularityError("index exceeds the coefficient cap");
    const auto& a = sys.coeffs(static_cast<int>(nu[i]), dual);
    for (long j = 0; j < n; ++j) M(i, j) = j < static_cast<long>(a.size()) ? a[j] : 0.0L;
  }
  long pairs = n * (n - 1) / 2;
  long double norm = std::pow(-static_cast<long double>(sys.lambda0()), pairs);
  return static_cast<double>(norm * M.determinant());
}

Harmonic::Harmonic(const OrthoSystem& sys) : sys_(&sys) {}

double Harmonic::pi(long x) const { return sys_->pi(static_cast<int>(x)); }
double Harmonic::pihat(long x) const { return sys_->pihat(static_cast<int>(x)); }

double link_weight(const Harmonic& h, LevelLabel level, const Chamber& lower) {
  double w = 1.0;
  for (long k : lower) w *= level.dual() ? h.pi(k) : h.pihat(k);
  return w;
}

double Harmonic::h(LevelLabel level, const Chamber& nu) const {
  if (static_cast<int>(nu.size()) != level.size()) throw DomainError("configuration size does not match level");
  if (level.order() == 1) return 1.0;
  auto key = std::make_pair(level.order(), nu);
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
  }
  LevelLabel below = LevelLabel::from_order(level.order() - 1);
  double s = 0.0;
  for (const auto& k : level.dual() ? below_nn(nu) : below_nn1(nu)) s += link_weight(*this, level, k) * h(below, k);
  std::lock_guard<std::mutex> lock(mu_);
  memo_.emplace(key, s);
  return s;
}

LinkRow link_kernel(const Harmonic& h, LevelLabel level, const Chamber& nu) {
  if (level.order() <= 1) throw DomainError("the bottom level has no link below it");
  LevelLabel below = LevelLabel::from_order(level.order() - 1);
  double hn = h.h(level, nu);
  LinkRow row;
  for (const auto& k : level.dual() ? below_nn(nu) : below_nn1(nu))
    row.emplace_back(k, link_weight(h, level, k) * h.h(below, k) / hn);
  return row;
}

int pattern_levels(int depth) { return 2 * depth - 1; }

bool InterlacingPattern::valid() const {
  for (size_t k = 0; k < levels.size(); ++k) {
    if (static_cast<int>(levels[k].size()) != label(k).size() || !is_chamber(levels[k])) return false;
    if (k == 0) continue;
    InterlaceKind kind = label(k).dual() ? InterlaceKind::NN : InterlaceKind::NNPlus1;
    if (!interlace_check(kind, levels[k], levels[k - 1])) return false;
  }
  return true;
}

InterlacingPattern InterlacingPattern::fully_packed(int depth) {
  InterlacingPattern p;
  for (int k = 0; k < pattern_levels(depth); ++k) p.levels.push_back(packed(p.label(k).size()));
  return p;
}

InterlacingPattern sample_down(const Chamber& top, const Harmonic& h, int depth, Rng& rng) {
  if (depth < 1) throw DomainError("depth must be at least 1");
  InterlacingPattern p;
  int L = pattern_levels(depth);
  p.levels.resize(static_cast<size_t>(L));
  p.levels.back() = top;
  for (int k = L - 1; k >= 1; --k) {
    LinkRow row = link_kernel(h, p.label(static_cast<size_t>(k)), p.levels[static_cast<size_t>(k)]);
    double u = uniform01(rng), acc = 0.0;
    size_t pick = row.size() - 1;
    for (size_t r = 0; r < row.size(); ++r) {
      acc += row[r].second;
      if (u < acc) {
        pick = r;
        break;
      }
    }
    p.levels[static_cast<size_t>(k - 1)] = row[pick].first;
  }
  return p;
}

BranchingResidual branching_check(const OrthoSystem& sys, const Chamber& nu, const std::vector<double>& x) {
  size_t n = x.size();
  if (nu.size() != n + 1) throw DomainError("branching check needs |nu| = |x| + 1");
  auto rel = [](double l, double r) { return std::abs(l - r) / std::max(1.0, std::abs(l)); };
  BranchingResidual res;
  std::vector<double> x0{0.0};
  x0.insert(x0.end(), x.begin(), x.end());
  double lhs = km_polynomial(sys, nu, x0, false);
  double rhs = 0.0;
  for (const auto& k : below_nn1(nu)) {
    double w = 1.0;
    for (long v : k) w *= sys.pihat(static_cast<int>(v));
    rhs += w * km_polynomial(sys, k, x, true);
  }
  rhs *= std::pow(-1.0 / sys.lambda0(), static_cast<double>(n));
  res.restriction = rel(lhs, rhs);

  Chamber mu(nu.begin(), nu.begin() + static_cast<long>(n));
  double lhs2 = km_polynomial(sys, mu, x, true);
  double rhs2 = 0.0;
  for (const auto& k : below_nn(mu)) {
    double w = 1.0;
    for (long v : k) w *= sys.pi(static_cast<int>(v));
    rhs2 += w * km_polynomial(sys, k, x, false);
  }
  res.dual = rel(lhs2, rhs2);
  return res;
}

}  // namespace pushblock
