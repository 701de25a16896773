#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace pushblock {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  template <class F>
  double apply(F&& f) const {
    double s = 0.0;
    for (size_t k = 0; k < nodes.size(); ++k) s += weights[k] * f(nodes[k]);
    return s;
  }
};

QuadratureRule gauss_legendre(int n, double a, double b);
// Nodes/weights for ∫_a^b (b−x)^p (x−a)^q f(x) dx.
QuadratureRule gauss_jacobi(int n, double a, double b, double p, double q);

// A probability measure on [0, ∞) with either a density on a compact interval
// or finitely many atoms (an infinite atom list is cut once its tail is negligible).
class SpectralMeasure {
 public:
  enum class Kind { Continuous, Discrete };

  // Z x^α (2−x)^β dx on [0,2], Z fixing total mass 1.
  static SpectralMeasure jacobi(double alpha, double beta);
  static SpectralMeasure atoms(std::vector<double> x, std::vector<double> w, bool compact);
  // Poisson(λ/μ) atoms at μn.
  static SpectralMeasure charlier(double lam, double mu);

  // The measure x·m(dx)/λ0.
  SpectralMeasure tilted(double lambda0) const;

  Kind kind() const { return kind_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  bool compact() const { return compact_; }

  // Gauss rule with about n nodes (atoms for discrete measures).
  const QuadratureRule& rule(int n) const;
  const QuadratureRule& default_rule() const { return rule(default_nodes_); }
  void set_default_nodes(int n) { default_nodes_ = n; }

  double density(double x) const;

  // Node count doubled from 64 until two successive values differ by < tol.
  double integrate(const std::function<double(double)>& f, double tol = 1e-12) const;
  // Integral over [a,b] ∩ support; continuous case uses x = a+(b−a)sin²θ.
  double integrate_range(const std::function<double(double)>& f, double a, double b,
                         double tol = 1e-12) const;
  double mass() const;

 private:
  double density_parts(double x, double from_lower, double to_upper) const;

  Kind kind_ = Kind::Continuous;
  double alpha_ = 0, beta_ = 0, log_norm_ = 0;
  double tilt_ = 0;  // 0: none; otherwise weights carry x * tilt_
  double lower_ = 0, upper_ = 2;
  bool compact_ = true;
  int default_nodes_ = 256;
  std::vector<double> atom_x_, atom_w_;
  struct Cache {
    std::mutex mu;
    std::map<int, std::unique_ptr<QuadratureRule>> rules;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

}  // namespace pushblock
