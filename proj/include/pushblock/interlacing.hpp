#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "pushblock/orthopoly.hpp"
#include "pushblock/rng.hpp"

namespace pushblock {

using Chamber = std::vector<long>;

// Level (n1, n2) of a symplectic pattern holds n2 particles. Levels (n, n+1)
// carry chain particles, levels (n, n) dual-chain particles; the pattern
// order is by n1 + n2: (0,1), (1,1), (1,2), (2,2), ...
struct LevelLabel {
  int n1 = 0, n2 = 1;
  int size() const { return n2; }
  bool dual() const { return n1 == n2; }
  int order() const { return n1 + n2; }
  static LevelLabel from_order(int k) { return {k / 2, (k + 1) / 2}; }
  bool operator==(const LevelLabel&) const = default;
  auto operator<=>(const LevelLabel& o) const { return order() <=> o.order(); }
};

enum class InterlaceKind { NNPlus1, NN };

bool is_chamber(const Chamber& x, bool half_line = true);

// NNPlus1: x ∈ W^{n+1}, y ∈ W^n with x1 <= y1 < x2 <= ... <= yn < x_{n+1}.
// NN:      x, y ∈ W^n with y1 <= x1 < y2 <= ... <= yn <= xn.
bool interlace_check(InterlaceKind kind, const Chamber& x, const Chamber& y);
// det(1(x_i <= y_j)) (with y_{n+1} = +∞) or det(1(y_i <= x_j)); always 0 or 1.
double interlace_det(InterlaceKind kind, const Chamber& x, const Chamber& y);

std::vector<Chamber> below_nn1(const Chamber& x);              // y with (x, y) ∈ W^{n,n+1}
std::vector<Chamber> below_nn(const Chamber& x);               // y >= 0 with (x, y) ∈ W^{n,n}
std::vector<Chamber> above_nn1(const Chamber& y, long cap);    // x <= cap with (x, y) ∈ W^{n,n+1}
std::vector<Chamber> above_nn(const Chamber& y, long cap);     // x <= cap with (x, y) ∈ W^{n,n}
std::vector<Chamber> all_chambers(int n, long cap, long lo = 0);

Chamber packed(int n);  // (0, 1, ..., n−1)

// det(Q_{ν_i}(x_j)) / Δ(x). Nearly coincident points (gap < 1e-6) use the
// divided-difference form built from coefficient tables.
double km_polynomial(const OrthoSystem& sys, const Chamber& nu, const std::vector<double>& x, bool dual,
                     bool allow_confluent = true);

// (−λ0)^{C(n,2)} det[a_{j−1}(ν_i)], the x → 0 limit of the Karlin-McGregor
// polynomial scaled to match the harmonic functions.
double confluent_at_zero(const OrthoSystem& sys, const Chamber& nu, bool dual);

// Harmonic functions built by the alternating link recursion
// h_{n,n}(ν) = Σ_{k ≺ ν} Π π(k_i) h_{n−1,n}(k),
// h_{n,n+1}(ν) = Σ_{k ≺ ν} Π π̂(k_i) h_{n,n}(k), h_{0,1} = 1.
class Harmonic {
 public:
  explicit Harmonic(const OrthoSystem& sys);
  explicit Harmonic(OrthoSystem&&) = delete;  // keeps a pointer to the system
  double h(LevelLabel level, const Chamber& nu) const;
  double pi(long x) const;
  double pihat(long x) const;

 private:
  const OrthoSystem* sys_;
  mutable std::mutex mu_;
  mutable std::map<std::pair<int, Chamber>, double> memo_;
};

using LinkRow = std::vector<std::pair<Chamber, double>>;

// Normalized link from `level` down to the level below it.
LinkRow link_kernel(const Harmonic& h, LevelLabel level, const Chamber& nu);

// Unnormalized link weights Π π̂(k_i) (from an (n,n+1) level) or Π π(k_i).
double link_weight(const Harmonic& h, LevelLabel level, const Chamber& lower);

struct InterlacingPattern {
  std::vector<Chamber> levels;  // levels[k] has label LevelLabel::from_order(k + 1)
  LevelLabel label(size_t k) const { return LevelLabel::from_order(static_cast<int>(k) + 1); }
  int depth() const { return static_cast<int>((levels.size() + 1) / 2); }
  bool valid() const;
  static InterlacingPattern fully_packed(int depth);
};

int pattern_levels(int depth);  // 2·depth − 1

// Samples the levels below `top` (at level (depth−1, depth)) from the links.
InterlacingPattern sample_down(const Chamber& top, const Harmonic& h, int depth, Rng& rng);

struct BranchingResidual {
  double restriction = 0;  // 𝔔_ν(0, x) vs (−1)^n λ0^{−n} Σ Π π̂(k_i) 𝔔̂_k(x)
  double dual = 0;         // 𝔔̂_μ(x) vs Σ Π π(k_i) 𝔔_k(x)
};

// ν has n+1 entries and x has n entries; the dual identity uses the first n entries of ν.
BranchingResidual branching_check(const OrthoSystem& sys, const Chamber& nu, const std::vector<double>& x);

}  // namespace pushblock
