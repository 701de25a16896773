#pragma once

#include <vector>

#include "pushblock/chain.hpp"
#include "pushblock/families.hpp"
#include "pushblock/interlacing.hpp"

namespace pushblock {

// det[p_t(x_i, x'_j)] for particles moving by a one-particle transition.
double km_kernel(const Transition& p, const Chamber& x, const Chamber& xp);

struct IntertwiningReport {
  double residual = 0;    // max entrywise |left − right|
  double scale = 0;       // max |left|
  double row_defect = 0;  // max |row sum − 1| of the Markov kernels involved (0 when unnormalized)
  long entries = 0;
};

// NNPlus1: P^{n+1}_t Λ = Λ P̂^n_t with Λ(x, y) = Π π̂(y_i) on W^{n,n+1}.
// NN:      P̂^n_t Λ = Λ P^n_t with Λ(x, y) = Π π(y_i) on W^{n,n}.
// Entries are compared for x, y with coordinates <= cap; inner sums run to L.
IntertwiningReport master_intertwining(const RateSpec& rates, InterlaceKind kind, int n, double t, long L, long cap);

// The same relation for the h-transformed semigroups and normalized links.
IntertwiningReport h_intertwining(const OrthoSystem& sys, InterlaceKind kind, int n, double t, long L, long cap);

// max over interior x of |Σ_i 𝖫_{x_i} h(x)| / h(x) for the level's particle chain.
double h_generator_residual(const OrthoSystem& sys, LevelLabel level, long cap);

// Quadratic rates (a x² + b x + c, a x² + b̄ x) on the half line: the Δ-transformed
// n+1 particle semigroup against n particles with birth rate λ(x+1).
IntertwiningReport vandermonde_intertwining(double a, double b, double c, double bbar, int n, double t, long L,
                                            long cap);

// F-transformed semigroups with (u+1, u'+1) on top and (u, u') below, composite link.
IntertwiningReport bc_intertwining(const BcFamily& bc, int n, double t, long L, long cap);

}  // namespace pushblock
