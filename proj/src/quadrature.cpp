#include "pushblock/quadrature.hpp"

#include <fmt/format.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <cmath>

#include "pushblock/errors.hpp"

namespace pushblock {

namespace {

QuadratureRule fixed_rule(const gsl_integration_fixed_type* type, int n, double a, double b,
                          double p, double q) {
  gsl_integration_fixed_workspace* w =
      gsl_integration_fixed_alloc(type, static_cast<size_t>(n), a, b, p, q);
  if (!w) throw PrecisionError("quadrature rule allocation failed");
  QuadratureRule r;
  const double* x = gsl_integration_fixed_nodes(w);
  const double* wt = gsl_integration_fixed_weights(w);
  r.nodes.assign(x, x + n);
  r.weights.assign(wt, wt + n);
  gsl_integration_fixed_free(w);
  return r;
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

}  // namespace

QuadratureRule gauss_legendre(int n, double a, double b) {
  return fixed_rule(gsl_integration_fixed_legendre, n, a, b, 0.0, 0.0);
}

QuadratureRule gauss_jacobi(int n, double a, double b, double p, double q) {
  return fixed_rule(gsl_integration_fixed_jacobi, n, a, b, p, q);
}

SpectralMeasure SpectralMeasure::jacobi(double alpha, double beta) {
  if (!(alpha > -1.0) || !(beta > -1.0)) throw InvalidParameters("jacobi weight needs alpha, beta > -1");
  SpectralMeasure m;
  m.kind_ = Kind::Continuous;
  m.alpha_ = alpha;
  m.beta_ = beta;
  m.lower_ = 0.0;
  m.upper_ = 2.0;
  m.compact_ = true;
  // Total mass of x^α(2−x)^β on [0,2], taken from a Gauss-Jacobi rule (weights sum to it).
  QuadratureRule r = gauss_jacobi(64, 0.0, 2.0, beta, alpha);
  double total = 0.0;
  for (double w : r.weights) total += w;
  m.log_norm_ = -std::log(total);
  return m;
}

SpectralMeasure SpectralMeasure::atoms(std::vector<double> x, std::vector<double> w, bool compact) {
  if (x.size() != w.size() || x.empty()) throw InvalidParameters("atom lists must match and be nonempty");
  SpectralMeasure m;
  m.kind_ = Kind::Discrete;
  m.atom_x_ = std::move(x);
  m.atom_w_ = std::move(w);
  m.lower_ = m.atom_x_.front();
  m.upper_ = compact ? m.atom_x_.back() : INFINITY;
  m.compact_ = compact;
  return m;
}

SpectralMeasure SpectralMeasure::charlier(double lam, double mu) {
  double a = lam / mu;
  std::vector<double> x, w;
  // log-space Poisson weights. A mass cut near 1e-16 is not enough once the
  // integrand is a high-degree polynomial, so atoms run until the weight underflows.
  for (long n = 0;; ++n) {
    double lw = n * std::log(a) - a - std::lgamma(n + 1.0);
    if (n > a + 1 && lw < -700.0) break;
    x.push_back(mu * n);
    w.push_back(std::exp(lw));
    if (n > 100000) throw PrecisionError("poisson atoms did not decay");
  }
  return atoms(std::move(x), std::move(w), false);
}

SpectralMeasure SpectralMeasure::tilted(double lambda0) const {
  if (tilt_ != 0.0) throw UnsupportedError("measure is already tilted");
  SpectralMeasure m = *this;
  m.cache_ = std::make_shared<Cache>();
  m.tilt_ = 1.0 / lambda0;
  return m;
}

const QuadratureRule& SpectralMeasure::rule(int n) const {
  std::lock_guard<std::mutex> lock(cache_->mu);
  int key = kind_ == Kind::Discrete ? 0 : n;
  auto it = cache_->rules.find(key);
  if (it != cache_->rules.end()) return *it->second;
  auto r = std::make_unique<QuadratureRule>();
  if (kind_ == Kind::Discrete) {
    r->nodes = atom_x_;
    r->weights = atom_w_;
  } else {
    // GSL's Jacobi weight is (b−x)^p (x−a)^q, so p pairs with (2−x)^β.
    *r = gauss_jacobi(n, 0.0, 2.0, beta_, alpha_);
    double scale = std::exp(log_norm_);
    for (auto& w : r->weights) w *= scale;
  }
  if (tilt_ != 0.0)
    for (size_t k = 0; k < r->nodes.size(); ++k) r->weights[k] *= r->nodes[k] * tilt_;
  auto& ref = *r;
  cache_->rules.emplace(key, std::move(r));
  return ref;
}

double SpectralMeasure::density(double x) const {
  if (kind_ == Kind::Discrete) throw UnsupportedError("discrete measure has no density");
  if (x <= lower_ || x >= upper_) return 0.0;
  return density_parts(x, x - lower_, upper_ - x);
}

double SpectralMeasure::density_parts(double x, double from_lower, double to_upper) const {
  if (!(from_lower > 0.0) || !(to_upper > 0.0)) return 0.0;
  double d = std::exp(log_norm_ + alpha_ * std::log(from_lower) + beta_ * std::log(to_upper));
  return tilt_ != 0.0 ? d * x * tilt_ : d;
}

double SpectralMeasure::integrate(const std::function<double(double)>& f, double tol) const {
  if (kind_ == Kind::Discrete) return rule(0).apply(f);
  double prev = rule(64).apply(f);
  for (int n = 128; n <= 4096; n *= 2) {
    double cur = rule(n).apply(f);
    if (!std::isfinite(cur)) throw PrecisionError("non-finite integrand at quadrature nodes");
    if (close(cur, prev, tol)) return cur;
    prev = cur;
  }
  throw PrecisionError("quadrature did not converge with 4096 nodes");
}

double SpectralMeasure::integrate_range(const std::function<double(double)>& f, double a, double b,
                                        double tol) const {
  a = std::max(a, lower_);
  b = std::min(b, upper_);
  if (kind_ == Kind::Discrete) {
    double s = 0.0;
    const auto& r = rule(0);
    for (size_t k = 0; k < r.nodes.size(); ++k)
      if (r.nodes[k] >= a && r.nodes[k] <= b) s += r.weights[k] * f(r.nodes[k]);
    return s;
  }
  if (!(b > a)) return 0.0;
  // x = a + (b−a)sin²θ absorbs inverse-square-root endpoint singularities.
  auto at = [&](int n) {
    QuadratureRule g = gauss_legendre(n, 0.0, M_PI / 2.0);
    double s = 0.0;
    for (size_t k = 0; k < g.nodes.size(); ++k) {
      double th = g.nodes[k], sn = std::sin(th), cs = std::cos(th);
      double x = a + (b - a) * sn * sn;
      double jac = (b - a) * std::sin(2.0 * th);
      // Distances to the support edges without cancellation.
      double from_lower = (a - lower_) + (b - a) * sn * sn, to_upper = (upper_ - b) + (b - a) * cs * cs;
      s += g.weights[k] * f(x) * density_parts(x, from_lower, to_upper) * jac;
    }
    return s;
  };
  double prev = at(64);
  for (int n = 128; n <= 8192; n *= 2) {
    double cur = at(n);
    if (close(cur, prev, tol)) return cur;
    prev = cur;
  }
  throw PrecisionError("range quadrature did not converge");
}

double SpectralMeasure::mass() const {
  return integrate([](double) { return 1.0; });
}

}  // namespace pushblock
