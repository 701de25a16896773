#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "pushblock/rng.hpp"

namespace pushblock {

enum class Lattice { HalfLine, FullLine };

// Birth (up) and death (down) rates of a nearest-neighbour chain.
// On the half line a dual chain may carry a killing rate at the origin:
// its "death" at 0 then sends the chain to the cemetery below the lattice.
struct RateSpec {
  Lattice lattice = Lattice::HalfLine;
  std::function<double(long)> birth;
  std::function<double(long)> death;
  bool killing_at_origin = false;
  std::string label;

  double lambda(long x) const { return birth(x); }
  double mu(long x) const { return death(x); }
  bool half_line() const { return lattice == Lattice::HalfLine; }
};

// Throws InvalidRates if a rate is negative, non-finite, or zero where it must be positive.
void validate_rates(const RateSpec& rates, long probe = 1000);

RateSpec siegmund_dual(const RateSpec& rates);

// Values indexed by lattice position, stored from `lo` upward.
struct LatticeVector {
  long lo = 0;
  std::vector<double> values;
  double operator()(long x) const { return values.at(static_cast<size_t>(x - lo)); }
  long hi() const { return lo + static_cast<long>(values.size()) - 1; }
};

// π(0)=1 and π(x)λ(x) = π(x+1)μ(x+1) on [l, L] (l = 0 or −L).
LatticeVector symmetrizing_measure(const RateSpec& rates, long L);

struct SeriesDiagnostic {
  std::string name;
  std::vector<std::pair<long, double>> checkpoints;  // (terms summed, partial sum)
  double value = 0.0;
  bool divergent = false;
};

struct WellposednessReport {
  long horizon = 0;
  std::vector<SeriesDiagnostic> conditions;
  SeriesDiagnostic determinacy;  // Σ 1/λ(n)
  bool all_divergent = false;
  bool determinacy_risk = false;
};

WellposednessReport check_wellposedness(const RateSpec& rates, long horizon);

// Transition data of a truncated chain. Mass leaving through the bottom
// (killing, or below −L on the full line) and past L is kept in two sinks.
struct Transition {
  long lo = 0;
  Eigen::MatrixXd p;
  Eigen::VectorXd below;
  Eigen::VectorXd above;

  double operator()(long x, long y) const { return p(x - lo, y - lo); }
  long hi() const { return lo + p.rows() - 1; }
  // P_t 1_{[l,y]}(x), counting the bottom sink.
  double cdf(long x, long y) const;
  // P_t 1_{[y,∞)}(x), counting the top sink.
  double tail(long x, long y) const;
  double row_mass(long x) const { return p.row(x - lo).sum(); }
};

class ChainModel {
 public:
  ChainModel(RateSpec rates, long L);

  // Doubles L from L0 until the mass escaping past the window within time t
  // from every start |x| <= max_query is below tol.
  static ChainModel auto_truncated(const RateSpec& rates, double t, long max_query, long L0 = 32,
                                   double tol = 1e-10, long L_max = 4096);

  const RateSpec& rates() const { return rates_; }
  long lower() const { return lo_; }
  long upper() const { return L_; }
  long cutoff() const { return L_; }
  long size() const { return L_ - lo_ + 1; }
  bool contains(long x) const { return x >= lo_ && x <= L_; }
  long index(long x) const;
  double pi(long x) const { return pi_(x); }
  const LatticeVector& pi() const { return pi_; }

  // Sub-Markov generator on [l, L]: off-diagonal rates, diagonal −(λ+μ).
  Eigen::MatrixXd generator() const;
  Transition transition(double t) const;

 private:
  RateSpec rates_;
  long L_;
  long lo_;
  LatticeVector pi_;
};

Eigen::MatrixXd transition_matrix(const ChainModel& chain, double t);

struct Path {
  std::vector<double> times;  // jump times, times[0] = 0
  std::vector<long> states;   // state held from times[k]
  bool killed = false;
  long at(double s) const;    // right-continuous evaluation
};

Path simulate_path(const RateSpec& rates, long x0, double T, Rng& rng,
                   long max_events = 10'000'000);

// |Σ_{z≤y} p_t(x,z) − Σ_{w≥x} p̂_t(y,w)| on truncation L.
double verify_duality(const RateSpec& rates, double t, long x, long y, long L);

}  // namespace pushblock
