#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pushblock/chain.hpp"

namespace pushblock {

class SpectralMeasure;

RateSpec chebyshev_rates();
RateSpec jacobi_rates(double alpha, double beta);
RateSpec charlier_rates(double lam, double mu);
RateSpec quadratic_rates(double a, double b, double c, double bbar, double cbar);
RateSpec theta_rates(double theta);
RateSpec constant_rates(double c);

// Eigenvalue of Σ_i L_{x_i} acting on the n-point Vandermonde determinant.
double vandermonde_eigenvalue(double a, double b, double bbar, int n);

// True iff λ(x+1)+μ(x)−μ(x+1)−λ(x) and λ(x+2)+μ(x)−μ(x+1)−λ(x+1) are
// constant for 1 <= x <= probe.
bool quadratic_characterization_check(const RateSpec& rates, long probe);

// Four-parameter family with rates β_{u,u'} (birth) and δ_{u,u'} (death).
struct BcFamily {
  double a = 0, b = 0, u = 0, uprime = 0;

  double beta(double u_, double up_, long x) const;
  double delta(double u_, double up_, long x) const;
  double log_f(long x) const;
  double log_g(long y) const;
  double f(long x) const;
  double g(long y) const;
  // Ratios from the Gamma-function definitions.
  double f_ratio(long x) const;  // f(x+1)/f(x)
  double g_ratio(long x) const;  // g(x+1)/g(x)
  double F(const std::vector<long>& x) const;
  double eigenvalue(int n, double u_, double up_) const;

  RateSpec rates() const;          // (β_{u,u'}, δ_{u,u'})
  RateSpec shifted_rates() const;  // (β_{u+1,u'+1}, δ_{u+1,u'+1})
  RateSpec linked_rates() const;   // λ = g(x+1)δ(x+1)/g(x), μ = g(x−1)β(x−1)/g(x)

  // Max residual of both compatibility relations over 0 <= x <= xmax.
  double compatibility_residual(long xmax) const;
};

BcFamily bc_rates(double u, double uprime, double a, double b, long probe = 1000);

struct Segment {
  long from = 0;
  long to = 0;  // inclusive; use a large value for an open-ended tail
  double birth = 1.0;
  double death = 1.0;
};

RateSpec piecewise_rates(std::vector<Segment> segments);
RateSpec slow_region_rates(double r, long nstar);
RateSpec periodic_rates(double r);
RateSpec table_rates(std::vector<double> birth, std::vector<double> death);

// Named family with parameters, as it appears in run configs.
struct FamilyParams {
  std::string family;
  std::map<std::string, double> params;
  std::vector<double> birth_table, death_table;
  std::vector<Segment> segments;

  double get(const std::string& key) const;
  double get(const std::string& key, double fallback) const;
};

RateSpec make_rates(const FamilyParams& fp);
// Spectral measure for families with a closed-form weight; nullopt otherwise.
std::optional<SpectralMeasure> make_measure(const FamilyParams& fp);

}  // namespace pushblock
