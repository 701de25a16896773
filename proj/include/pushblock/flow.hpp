#pragma once

#include <vector>

#include "pushblock/chain.hpp"
#include "pushblock/rng.hpp"

namespace pushblock {

// Poisson arrival times of up-arrows (rate λ(x)) and down-arrows (rate μ(x))
// at every site of [lo, hi] during [s0, t0].
struct ArrowField {
  double s0 = 0, t0 = 0;
  long lo = 0, hi = 0;
  bool half_line = true;
  std::vector<std::vector<double>> up, down;

  const std::vector<double>& ups(long x) const;
  const std::vector<double>& downs(long x) const;
  bool in_span(long x) const { return x >= lo && x <= hi; }
};

ArrowField sample_arrows(const RateSpec& rates, double s0, double t0, long lo, long hi, Rng& rng);

// Sites of padding beyond queried starts: 4·sqrt(rate·window) + 16.
long span_padding(double max_rate, double window);

// Φ_{s,t}(x): follow arrows forward from (s, x); right-continuous in t.
long flow_eval(const ArrowField& field, double s, double t, long x);

// Start at time t at y and follow the transformed arrows backwards to s
// (an up-arrow x→x+1 acts as a down-arrow at x, a down-arrow x+1→x as an
// up-arrow at x). Returns l−1 on the half line once the walk leaves through 0.
long dual_flow_eval(const ArrowField& field, double s, double t, long y);

// sup{w : Φ_{s,t}(w) <= x}, or l−1 on the half line if the set is empty.
long flow_inverse(const ArrowField& field, double s, double t, long x);

// det(P_t 1_{[l,z'_j]}(z_i) − 1(i<j)).
double fdd_determinant(const Transition& p, const std::vector<long>& z, const std::vector<long>& zprime);

}  // namespace pushblock
