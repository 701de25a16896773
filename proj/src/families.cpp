#include "pushblock/families.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>

#include "pushblock/errors.hpp"
#include "pushblock/quadrature.hpp"

namespace pushblock {

namespace {

void probe_positive(const RateSpec& r, long probe) {
  try {
    validate_rates(r, probe);
  } catch (const InvalidRates& e) {
    throw InvalidParameters(e.what());
  }
}

}  // namespace

RateSpec chebyshev_rates() {
  RateSpec r;
  r.birth = [](long n) { return n == 0 ? 1.0 : 0.5; };
  r.death = [](long n) { return n == 0 ? 0.0 : 0.5; };
  r.label = "chebyshev";
  return r;
}

RateSpec jacobi_rates(double alpha, double beta) {
  if (!(alpha > -1.0) || !(beta > -1.0)) throw InvalidParameters("jacobi needs alpha, beta > -1");
  RateSpec r;
  double s = alpha + beta;
  r.birth = [alpha, s](long n) {
    double x = static_cast<double>(n);
    // At n=0 the first factor is 1 (its limit when alpha+beta = -1).
    double first = n == 0 ? 1.0 : (x + s + 1.0) / (2.0 * x + s + 1.0);
    return first * 2.0 * (x + alpha + 1.0) / (2.0 * x + s + 2.0);
  };
  r.death = [beta, s](long n) {
    if (n == 0) return 0.0;
    double x = static_cast<double>(n);
    return (x + beta) / (2.0 * x + s) * 2.0 * x / (2.0 * x + s + 1.0);
  };
  r.label = fmt::format("jacobi({},{})", alpha, beta);
  probe_positive(r, 1000);
  return r;
}

RateSpec charlier_rates(double lam, double mu) {
  if (!(lam > 0.0) || !(mu > 0.0)) throw InvalidParameters("charlier needs positive rates");
  RateSpec r;
  r.birth = [lam](long) { return lam; };
  r.death = [mu](long n) { return mu * static_cast<double>(n); };
  r.label = fmt::format("charlier({},{})", lam, mu);
  return r;
}

RateSpec quadratic_rates(double a, double b, double c, double bbar, double cbar) {
  RateSpec r;
  r.lattice = cbar == 0.0 ? Lattice::HalfLine : Lattice::FullLine;
  r.birth = [a, b, c](long n) {
    double x = static_cast<double>(n);
    return (a * x + b) * x + c;
  };
  r.death = [a, bbar, cbar](long n) {
    double x = static_cast<double>(n);
    return (a * x + bbar) * x + cbar;
  };
  r.label = fmt::format("quadratic({},{},{},{},{})", a, b, c, bbar, cbar);
  probe_positive(r, 1000);
  return r;
}

RateSpec theta_rates(double theta) { return quadratic_rates(0.0, 1.0, theta, 1.0, 0.0); }

RateSpec constant_rates(double c) { return quadratic_rates(0.0, 0.0, c, 0.0, c); }

double vandermonde_eigenvalue(double a, double b, double bbar, int n) {
  double nn = n;
  return a * nn * (nn - 1) * (nn - 2) / 3.0 + (b - bbar) * nn * (nn - 1) / 2.0;
}

bool quadratic_characterization_check(const RateSpec& r, long probe) {
  auto c0 = [&](long x) { return r.lambda(x + 1) + r.mu(x) - r.mu(x + 1) - r.lambda(x); };
  auto c1 = [&](long x) { return r.lambda(x + 2) + r.mu(x) - r.mu(x + 1) - r.lambda(x + 1); };
  double ref0 = c0(1), ref1 = c1(1);
  for (long x = 2; x <= probe; ++x) {
    double scale = 1.0 + std::abs(r.lambda(x)) + std::abs(r.mu(x));
    if (std::abs(c0(x) - ref0) > 1e-9 * scale || std::abs(c1(x) - ref1) > 1e-9 * scale) return false;
  }
  return true;
}

double BcFamily::beta(double u_, double up_, long n) const {
  double x = static_cast<double>(n);
  return (x + a + b + 1) * (x + a + 1) * (x - u_) * (x - up_) /
         ((2 * x + a + b + 1) * (2 * x + a + b + 2));
}

double BcFamily::delta(double u_, double up_, long n) const {
  if (n == 0) return 0.0;
  double x = static_cast<double>(n);
  return x * (x + b) * (x + u_ + a + b + 1) * (x + up_ + a + b + 1) /
         ((2 * x + a + b + 1) * (2 * x + a + b));
}

double BcFamily::log_f(long n) const {
  double x = static_cast<double>(n);
  return std::log(2 * x + a + b + 2) + std::lgamma(x + 1) + std::lgamma(x + b + 1) -
         std::lgamma(x + a + b + 2) - std::lgamma(x + a + 2);
}

double BcFamily::log_g(long n) const {
  double y = static_cast<double>(n);
  return std::log(2 * y + a + b + 1) + std::lgamma(y + a + b + 1) + std::lgamma(y + a + 1) -
         std::lgamma(y + 1) - std::lgamma(y + b + 1);
}

double BcFamily::f(long x) const { return std::exp(log_f(x)); }
double BcFamily::g(long y) const { return std::exp(log_g(y)); }
double BcFamily::f_ratio(long x) const { return std::exp(log_f(x + 1) - log_f(x)); }
double BcFamily::g_ratio(long x) const { return std::exp(log_g(x + 1) - log_g(x)); }

double BcFamily::F(const std::vector<long>& x) const {
  double s = (a + b + 1) / 2.0, p = 1.0;
  for (size_t i = 0; i < x.size(); ++i)
    for (size_t j = i + 1; j < x.size(); ++j) {
      double xi = x[i] + s, xj = x[j] + s;
      p *= xj * xj - xi * xi;
    }
  return p;
}

double BcFamily::eigenvalue(int n, double u_, double up_) const {
  double nn = n;
  return nn * (nn - 1) * (nn - 2) / 3.0 - nn * (nn - 1) / 2.0 * (u_ + up_ + b);
}

RateSpec BcFamily::rates() const {
  RateSpec r;
  BcFamily self = *this;
  r.birth = [self](long x) { return self.beta(self.u, self.uprime, x); };
  r.death = [self](long x) { return self.delta(self.u, self.uprime, x); };
  r.label = "bc";
  return r;
}

RateSpec BcFamily::shifted_rates() const {
  RateSpec r;
  BcFamily self = *this;
  r.birth = [self](long x) { return self.beta(self.u + 1, self.uprime + 1, x); };
  r.death = [self](long x) { return self.delta(self.u + 1, self.uprime + 1, x); };
  r.label = "bc-shifted";
  return r;
}

RateSpec BcFamily::linked_rates() const {
  RateSpec r;
  BcFamily self = *this;
  r.birth = [self](long x) { return self.g_ratio(x) * self.delta(self.u, self.uprime, x + 1); };
  r.death = [self](long x) {
    if (x == 0) return 0.0;
    return self.beta(self.u, self.uprime, x - 1) / self.g_ratio(x - 1);
  };
  r.label = "bc-linked";
  return r;
}

double BcFamily::compatibility_residual(long xmax) const {
  double worst = 0.0;
  auto rel = [](double l, double r) { return std::abs(l - r) / std::max(1.0, std::abs(l)); };
  for (long x = 0; x <= xmax; ++x) {
    double mu_next = beta(u + 1, uprime + 1, x + 1) * f_ratio(x);
    worst = std::max(worst, rel(mu_next, beta(u, uprime, x) / g_ratio(x)));
    double lam_right = delta(u, uprime, x + 1) * g_ratio(x);
    double lam_left;
    if (x == 0) {
      // δ_{u+1,u'+1}(x)·f(x−1)/f(x) with the vanishing factors x(x+b) cancelled.
      lam_left = (u + a + b + 2) * (uprime + a + b + 2) * (a + b + 1) * (a + 1) /
                 ((a + b + 1) * (a + b + 2));
    } else {
      lam_left = delta(u + 1, uprime + 1, x) / f_ratio(x - 1);
    }
    worst = std::max(worst, rel(lam_left, lam_right));
  }
  return worst;
}

BcFamily bc_rates(double u, double uprime, double a, double b, long probe) {
  if (!(a > -1.0) || !(b > -1.0) || !(a + b + 1 > 0.0))
    throw InvalidParameters("bc family needs a, b > -1 and a+b+1 > 0");
  BcFamily fam{a, b, u, uprime};
  for (long x = 0; x <= probe; ++x) {
    for (double shift : {0.0, 1.0}) {
      double be = fam.beta(u + shift, uprime + shift, x);
      double de = fam.delta(u + shift, uprime + shift, x);
      if (!(be > 0.0) || !std::isfinite(be))
        throw InvalidParameters(fmt::format("bc birth rate not positive at x={}", x));
      if (x > 0 && (!(de > 0.0) || !std::isfinite(de)))
        throw InvalidParameters(fmt::format("bc death rate not positive at x={}", x));
    }
  }
  return fam;
}

RateSpec piecewise_rates(std::vector<Segment> segments) {
  if (segments.empty()) throw InvalidParameters("piecewise rates need at least one segment");
  for (const auto& s : segments)
    if (!(s.birth > 0.0) || !(s.death > 0.0) || s.to < s.from)
      throw InvalidParameters("piecewise segments need positive rates and from <= to");
  auto find = [segments](long n) -> const Segment& {
    for (const auto& s : segments)
      if (n >= s.from && n <= s.to) return s;
    return segments.back();
  };
  RateSpec r;
  r.birth = [find](long n) { return find(n).birth; };
  r.death = [find](long n) { return n == 0 ? 0.0 : find(n).death; };
  r.label = "piecewise";
  probe_positive(r, 1000);
  return r;
}

RateSpec slow_region_rates(double r, long nstar) {
  constexpr long kInf = std::numeric_limits<long>::max() / 4;
  return piecewise_rates({{0, nstar, r, 1.0}, {nstar + 1, kInf, 1.0, 1.0}});
}

RateSpec periodic_rates(double r) {
  if (!(r > 0.0)) throw InvalidParameters("periodic rate must be positive");
  RateSpec s;
  s.birth = [r](long n) { return (n % 2 == 0) ? 1.0 : r; };
  s.death = [](long n) { return n == 0 ? 0.0 : 1.0; };
  s.label = "periodic";
  return s;
}

RateSpec table_rates(std::vector<double> birth, std::vector<double> death) {
  if (birth.empty() || death.empty()) throw InvalidParameters("rate tables must be nonempty");
  RateSpec r;
  // Values past the end of a table repeat its last entry.
  r.birth = [birth](long n) { return birth[std::min<size_t>(static_cast<size_t>(n), birth.size() - 1)]; };
  r.death = [death](long n) { return death[std::min<size_t>(static_cast<size_t>(n), death.size() - 1)]; };
  r.label = "table";
  probe_positive(r, static_cast<long>(std::max(birth.size(), death.size())) + 2);
  return r;
}

double FamilyParams::get(const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end()) throw InvalidParameters(fmt::format("family '{}' needs parameter '{}'", family, key));
  return it->second;
}

double FamilyParams::get(const std::string& key, double fallback) const {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

RateSpec make_rates(const FamilyParams& fp) {
  const auto& f = fp.family;
  if (f == "chebyshev") return chebyshev_rates();
  if (f == "jacobi") return jacobi_rates(fp.get("alpha"), fp.get("beta"));
  if (f == "charlier") return charlier_rates(fp.get("lambda"), fp.get("mu"));
  if (f == "quadratic")
    return quadratic_rates(fp.get("a"), fp.get("b"), fp.get("c"), fp.get("bbar"), fp.get("cbar"));
  if (f == "theta") return theta_rates(fp.get("theta"));
  if (f == "bc_type") return bc_rates(fp.get("u"), fp.get("uprime"), fp.get("a"), fp.get("b")).rates();
  if (f == "piecewise") {
    if (!fp.segments.empty()) return piecewise_rates(fp.segments);
    return slow_region_rates(fp.get("r"), static_cast<long>(fp.get("nstar")));
  }
  if (f == "periodic") return periodic_rates(fp.get("r"));
  if (f == "table") return table_rates(fp.birth_table, fp.death_table);
  throw InvalidParameters(fmt::format("unknown rate family '{}'", f));
}

std::optional<SpectralMeasure> make_measure(const FamilyParams& fp) {
  if (fp.family == "chebyshev") return SpectralMeasure::jacobi(-0.5, -0.5);
  if (fp.family == "jacobi") return SpectralMeasure::jacobi(fp.get("alpha"), fp.get("beta"));
  if (fp.family == "charlier") return SpectralMeasure::charlier(fp.get("lambda"), fp.get("mu"));
  return std::nullopt;
}

}  // namespace pushblock
