#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "pushblock/chain.hpp"
#include "pushblock/interlacing.hpp"
#include "pushblock/rng.hpp"

namespace pushblock {

// Two-level state. NNPlus1: x has n+1 chain particles, y has n dual-chain
// particles. NN: x has n dual-chain particles, y has n chain particles.
struct TwoLevelState {
  Chamber x, y;
  bool alive = true;
  bool operator==(const TwoLevelState&) const = default;
  auto operator<=>(const TwoLevelState&) const = default;
};

bool two_level_valid(InterlaceKind kind, const TwoLevelState& s);

// All interlacing states with coordinates in [0, cap] and |y| = n.
std::vector<TwoLevelState> two_level_states(InterlaceKind kind, int n, long cap);

struct Move {
  TwoLevelState target;  // target.alive == false for the cemetery
  double rate = 0;
};

// Off-diagonal push-block rates out of `s`, the cemetery included.
// Blocked moves are omitted.
std::vector<Move> pushblock_moves(InterlaceKind kind, const RateSpec& rates, const TwoLevelState& s);
double pushblock_rate(InterlaceKind kind, const RateSpec& rates, const TwoLevelState& from, const TwoLevelState& to);
// S: minus the total outgoing rate.
double pushblock_diagonal(InterlaceKind kind, const RateSpec& rates, const TwoLevelState& s);
double killing_rate(InterlaceKind kind, const RateSpec& rates, const TwoLevelState& s);

// Block-determinant kernel q_t built from truncated transition matrices of the
// chain and its dual. Transitions are cached per time.
class TwoLevelKernel {
 public:
  TwoLevelKernel(const RateSpec& rates, InterlaceKind kind, long L);

  InterlaceKind kind() const { return kind_; }
  long cutoff() const { return L_; }
  double pi(long x) const { return pi_.at(static_cast<size_t>(x)); }
  double pihat(long x) const { return pihat_.at(static_cast<size_t>(x)); }

  double operator()(double t, const TwoLevelState& from, const TwoLevelState& to) const;

 private:
  struct Pair {
    Transition primal, dual;
  };
  const Pair& at(double t) const;

  RateSpec rates_;
  InterlaceKind kind_;
  long L_;
  ChainModel primal_, dual_;
  std::vector<double> pi_, pihat_;
  mutable std::mutex mu_;
  mutable std::map<double, std::unique_ptr<Pair>> cache_;
};

// |(q_{t+dt} − q_{t−dt})/(2dt) − (𝔇 q_t)(from, to)|.
double backwards_residual(const TwoLevelKernel& q, const RateSpec& rates, double t, const TwoLevelState& from,
                          const TwoLevelState& to, double dt);

// Event-driven simulation of the two-level push-block process up to T.
// A killed run returns a state with alive == false.
TwoLevelState simulate_two_level(InterlaceKind kind, const RateSpec& rates, TwoLevelState s, double T, Rng& rng,
                                 long max_events = 10'000'000);

}  // namespace pushblock
