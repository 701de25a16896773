#include "pushblock/intertwining.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <map>

#include "pushblock/errors.hpp"

namespace pushblock {

double km_kernel(const Transition& p, const Chamber& x, const Chamber& xp) {
  long n = static_cast<long>(x.size());
  if (n != static_cast<long>(xp.size())) throw DomainError("Karlin-McGregor kernel needs equal particle counts");
  if (n == 1) return p(x[0], xp[0]);
  Eigen::MatrixXd m(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) m(i, j) = p(x[static_cast<size_t>(i)], xp[static_cast<size_t>(j)]);
  return m.determinant();
}

namespace {

using Entries = std::vector<std::pair<Chamber, double>>;
using Kernel = std::function<double(const Chamber&, const Chamber&)>;

struct Problem {
  int upper_size = 0, lower_size = 0;
  Kernel upper, lower;
  std::function<Entries(const Chamber&)> column;  // Λ(x', y) over all x' <= L
  std::function<Entries(const Chamber&)> row;     // Λ(x, y') over all y'
};

IntertwiningReport compare(const Problem& pr, long cap) {
  IntertwiningReport rep;
  auto xs = all_chambers(pr.upper_size, cap);
  auto ys = all_chambers(pr.lower_size, cap);
  std::vector<Entries> cols;
  cols.reserve(ys.size());
  for (const auto& y : ys) cols.push_back(pr.column(y));
  for (const auto& x : xs) {
    std::map<Chamber, double> right;
    for (const auto& [yp, w] : pr.row(x))
      for (const auto& y : ys) right[y] += w * pr.lower(yp, y);
    for (size_t k = 0; k < ys.size(); ++k) {
      double left = 0.0;
      for (const auto& [xp, w] : cols[k]) left += pr.upper(x, xp) * w;
      rep.residual = std::max(rep.residual, std::abs(left - right[ys[k]]));
      rep.scale = std::max(rep.scale, std::abs(left));
      ++rep.entries;
    }
  }
  return rep;
}

double row_defect(const Kernel& k, int size, long cap, long L) {
  double worst = 0.0;
  auto targets = all_chambers(size, L);
  for (const auto& x : all_chambers(size, cap)) {
    double s = 0.0;
    for (const auto& xp : targets) s += k(x, xp);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

double vandermonde(const Chamber& x) {
  double p = 1.0;
  for (size_t i = 0; i < x.size(); ++i)
    for (size_t j = i + 1; j < x.size(); ++j) p *= static_cast<double>(x[j] - x[i]);
  return p;
}

double product(const Chamber& y, const std::function<double(long)>& w) {
  double p = 1.0;
  for (long v : y) p *= w(v);
  return p;
}

void check_sizes(int n, long cap, long L) {
  if (n < 1) throw InvalidParameters("need at least one particle on the lower level");
  if (cap < 0 || L <= cap) throw InvalidParameters("need 0 <= cap < L");
}

}  // namespace

IntertwiningReport master_intertwining(const RateSpec& rates, InterlaceKind kind, int n, double t, long L, long cap) {
  check_sizes(n, cap, L);
  if (!rates.half_line()) throw UnsupportedError("intertwining checks are implemented on the half line");
  RateSpec dual = siegmund_dual(rates);
  auto pi = symmetrizing_measure(rates, L);
  auto pihat = symmetrizing_measure(dual, L);
  Transition p = ChainModel(rates, L).transition(t);
  Transition ph = ChainModel(dual, L).transition(t);
  Problem pr;
  if (kind == InterlaceKind::NNPlus1) {
    auto w = [&](long v) { return pihat(v); };
    pr.upper_size = n + 1;
    pr.lower_size = n;
    pr.upper = [&](const Chamber& a, const Chamber& b) { return km_kernel(p, a, b); };
    pr.lower = [&](const Chamber& a, const Chamber& b) { return km_kernel(ph, a, b); };
    pr.column = [&, w](const Chamber& y) {
      Entries e;
      double wy = product(y, w);
      for (auto& xp : above_nn1(y, L)) e.emplace_back(std::move(xp), wy);
      return e;
    };
    pr.row = [&, w](const Chamber& x) {
      Entries e;
      for (auto& yp : below_nn1(x)) {
        double wy = product(yp, w);
        e.emplace_back(std::move(yp), wy);
      }
      return e;
    };
  } else {
    auto w = [&](long v) { return pi(v); };
    pr.upper_size = n;
    pr.lower_size = n;
    pr.upper = [&](const Chamber& a, const Chamber& b) { return km_kernel(ph, a, b); };
    pr.lower = [&](const Chamber& a, const Chamber& b) { return km_kernel(p, a, b); };
    pr.column = [&, w](const Chamber& y) {
      Entries e;
      double wy = product(y, w);
      for (auto& xp : above_nn(y, L)) e.emplace_back(std::move(xp), wy);
      return e;
    };
    pr.row = [&, w](const Chamber& x) {
      Entries e;
      for (auto& yp : below_nn(x)) {
        double wy = product(yp, w);
        e.emplace_back(std::move(yp), wy);
      }
      return e;
    };
  }
  return compare(pr, cap);
}

IntertwiningReport h_intertwining(const OrthoSystem& sys, InterlaceKind kind, int n, double t, long L, long cap) {
  check_sizes(n, cap, L);
  const RateSpec& rates = sys.rates();
  if (!rates.half_line()) throw UnsupportedError("intertwining checks are implemented on the half line");
  Harmonic H(sys);
  Transition p = ChainModel(rates, L).transition(t);
  Transition ph = ChainModel(sys.dual_rates(), L).transition(t);
  bool nn1 = kind == InterlaceKind::NNPlus1;
  LevelLabel up = nn1 ? LevelLabel{n, n + 1} : LevelLabel{n, n};
  LevelLabel low = nn1 ? LevelLabel{n, n} : LevelLabel{n - 1, n};
  const Transition& pu = nn1 ? p : ph;
  const Transition& pl = nn1 ? ph : p;
  Problem pr;
  pr.upper_size = up.size();
  pr.lower_size = low.size();
  pr.upper = [&](const Chamber& a, const Chamber& b) {
    double k = km_kernel(pu, a, b);
    return k == 0.0 ? 0.0 : k * H.h(up, b) / H.h(up, a);
  };
  pr.lower = [&](const Chamber& a, const Chamber& b) {
    double k = km_kernel(pl, a, b);
    return k == 0.0 ? 0.0 : k * H.h(low, b) / H.h(low, a);
  };
  pr.column = [&](const Chamber& y) {
    Entries e;
    double wy = link_weight(H, up, y) * H.h(low, y);
    for (auto& xp : nn1 ? above_nn1(y, L) : above_nn(y, L)) {
      double hx = H.h(up, xp);
      e.emplace_back(std::move(xp), wy / hx);
    }
    return e;
  };
  pr.row = [&](const Chamber& x) { return link_kernel(H, up, x); };
  IntertwiningReport rep = compare(pr, cap);
  rep.row_defect = std::max(row_defect(pr.upper, pr.upper_size, cap, L), row_defect(pr.lower, pr.lower_size, cap, L));
  return rep;
}

double h_generator_residual(const OrthoSystem& sys, LevelLabel level, long cap) {
  Harmonic H(sys);
  const RateSpec& r = level.dual() ? sys.dual_rates() : sys.rates();
  auto hval = [&](const Chamber& x) { return is_chamber(x) ? H.h(level, x) : 0.0; };
  double worst = 0.0;
  for (const auto& x : all_chambers(level.size(), cap)) {
    double hx = hval(x), acc = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      Chamber up = x, down = x;
      ++up[i];
      --down[i];
      acc += r.lambda(x[i]) * (hval(up) - hx);
      if (x[i] > 0 || r.killing_at_origin) acc += r.mu(x[i]) * (hval(down) - hx);
    }
    worst = std::max(worst, std::abs(acc) / std::abs(hx));
  }
  return worst;
}

IntertwiningReport vandermonde_intertwining(double a, double b, double c, double bbar, int n, double t, long L,
                                            long cap) {
  check_sizes(n, cap, L);
  RateSpec top = quadratic_rates(a, b, c, bbar, 0.0);
  RateSpec shifted = quadratic_rates(a, b + 2 * a, a + b + c, bbar, 0.0);
  double decay_top = std::exp(-vandermonde_eigenvalue(a, b, bbar, n + 1) * t);
  double decay_low = std::exp(-vandermonde_eigenvalue(a, b + 2 * a, bbar, n) * t);
  Transition p = ChainModel(top, L).transition(t);
  Transition pt = ChainModel(shifted, L).transition(t);
  double nfact = std::tgamma(n + 1.0);
  Problem pr;
  pr.upper_size = n + 1;
  pr.lower_size = n;
  pr.upper = [&](const Chamber& x, const Chamber& xp) {
    return decay_top * km_kernel(p, x, xp) * vandermonde(xp) / vandermonde(x);
  };
  pr.lower = [&](const Chamber& y, const Chamber& yp) {
    return decay_low * km_kernel(pt, y, yp) * vandermonde(yp) / vandermonde(y);
  };
  pr.column = [&](const Chamber& y) {
    Entries e;
    double wy = nfact * vandermonde(y);
    for (auto& xp : above_nn1(y, L)) {
      double d = vandermonde(xp);
      e.emplace_back(std::move(xp), wy / d);
    }
    return e;
  };
  pr.row = [&](const Chamber& x) {
    Entries e;
    double dx = vandermonde(x);
    for (auto& y : below_nn1(x)) {
      double w = nfact * vandermonde(y) / dx;
      e.emplace_back(std::move(y), w);
    }
    return e;
  };
  IntertwiningReport rep = compare(pr, cap);
  double link = 0.0;
  for (const auto& x : all_chambers(n + 1, cap)) {
    double s = 0.0;
    for (const auto& [y, w] : pr.row(x)) s += w;
    link = std::max(link, std::abs(s - 1.0));
  }
  rep.row_defect = std::max({link, row_defect(pr.upper, n + 1, cap, L), row_defect(pr.lower, n, cap, L)});
  return rep;
}

IntertwiningReport bc_intertwining(const BcFamily& bc, int n, double t, long L, long cap) {
  check_sizes(n, cap, L);
  double decay_top = std::exp(-bc.eigenvalue(n + 1, bc.u + 1, bc.uprime + 1) * t);
  double decay_low = std::exp(-bc.eigenvalue(n, bc.u, bc.uprime) * t);
  Transition p = ChainModel(bc.shifted_rates(), L).transition(t);
  Transition pl = ChainModel(bc.rates(), L).transition(t);
  double norm = std::exp(n * std::log(2.0) + std::lgamma(n + 1.0) + std::lgamma(n + bc.a + 1) - std::lgamma(bc.a + 1));
  auto half_f = [&](long z) { return 0.5 * bc.f(z); };
  auto g = [&](long y) { return bc.g(y); };
  Problem pr;
  pr.upper_size = n + 1;
  pr.lower_size = n;
  pr.upper = [&](const Chamber& x, const Chamber& xp) {
    return decay_top * km_kernel(p, x, xp) * bc.F(xp) / bc.F(x);
  };
  pr.lower = [&](const Chamber& y, const Chamber& yp) {
    return decay_low * km_kernel(pl, y, yp) * bc.F(yp) / bc.F(y);
  };
  // Composite link through the intermediate level z with y ≺ z ≺ x.
  pr.column = [&](const Chamber& y) {
    std::map<Chamber, double> acc;
    for (const auto& z : above_nn(y, L)) {
      double wz = product(z, half_f);
      for (auto& xp : above_nn1(z, L)) acc[xp] += wz;
    }
    double wy = norm * bc.F(y) * product(y, g);
    Entries e;
    for (auto& [xp, w] : acc) e.emplace_back(xp, wy * w / bc.F(xp));
    return e;
  };
  pr.row = [&](const Chamber& x) {
    std::map<Chamber, double> acc;
    for (const auto& z : below_nn1(x)) {
      double wz = product(z, half_f);
      for (auto& y : below_nn(z)) acc[y] += wz;
    }
    double fx = bc.F(x);
    Entries e;
    for (auto& [y, w] : acc) e.emplace_back(y, norm * bc.F(y) * product(y, g) * w / fx);
    return e;
  };
  IntertwiningReport rep = compare(pr, cap);
  double link = 0.0;
  for (const auto& x : all_chambers(n + 1, cap)) {
    double s = 0.0;
    for (const auto& [y, w] : pr.row(x)) s += w;
    link = std::max(link, std::abs(s - 1.0));
  }
  rep.row_defect = std::max({link, row_defect(pr.upper, n + 1, cap, L), row_defect(pr.lower, n, cap, L)});
  return rep;
}

}  // namespace pushblock
