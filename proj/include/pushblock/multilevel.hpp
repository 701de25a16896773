#pragma once

#include <map>
#include <string>
#include <vector>

#include "pushblock/chain.hpp"
#include "pushblock/interlacing.hpp"
#include "pushblock/rng.hpp"

namespace pushblock {

// One pushed particle: pattern level index (0 = level (0,1)) and particle index.
struct PushedParticle {
  int level = 0;
  int index = 0;
  bool operator==(const PushedParticle&) const = default;
};

struct PatternEvent {
  double time = 0;
  int level = 0;  // pattern level index of the particle that rang
  int index = 0;
  int direction = 0;                  // +1 or −1
  std::vector<PushedParticle> cascade;  // particles pushed at the same instant, in order
};

struct EventLog {
  InterlacingPattern initial;
  double horizon = 0;
  std::vector<PatternEvent> events;

  // Pattern at time t by replaying events with time <= t.
  InterlacingPattern at(double t) const;
};

struct MultilevelState {
  InterlacingPattern pattern;
  double time = 0;
};

// Alternating construction: levels (n,n+1) move with (λ, μ), levels (n,n)
// with the dual rates (λ̂, μ̂). A jump that would break interlacing with the
// level below is suppressed; one that breaks it with the level above pushes.
class MultilevelSystem {
 public:
  explicit MultilevelSystem(RateSpec rates);
  const RateSpec& rates() const { return rates_; }
  const RateSpec& dual_rates() const { return dual_; }

  double up_rate(const InterlacingPattern& p, int level, int index) const;
  double down_rate(const InterlacingPattern& p, int level, int index) const;

  struct Candidate {
    int level, index, direction;
    double rate;
  };
  // All unblocked jumps with positive rate.
  std::vector<Candidate> candidates(const InterlacingPattern& p) const;

  // Applies a jump and its push cascade in place; returns the pushed particles.
  std::vector<PushedParticle> apply(InterlacingPattern& p, int level, int index, int direction) const;

 private:
  RateSpec rates_, dual_;
};

MultilevelState simulate_multilevel(const MultilevelSystem& sys, InterlacingPattern init, double T, Rng& rng,
                                    EventLog* log = nullptr, long max_events = 10'000'000);

// Exact time-T law over all patterns with coordinates <= L, by uniformization
// of the full multilevel generator. Mass pushed past L is reported as leaked.
struct PatternDistribution {
  int depth = 0;
  std::vector<InterlacingPattern> states;
  std::vector<double> prob;
  double leaked = 0;

  std::map<Chamber, double> marginal(int level) const;
  // P(site x of level k occupied) and joint occupation of two sites.
  double rho1(int level, long x) const;
  double rho2(int level1, long x1, int level2, long x2) const;
};

// Throws OracleTooLarge once more than `limit` patterns turn up.
std::vector<InterlacingPattern> enumerate_patterns(int depth, long L,
                                                   std::size_t limit = static_cast<std::size_t>(-1));

PatternDistribution exact_distribution(const MultilevelSystem& sys, int depth, double T, long L,
                                       const InterlacingPattern& init, std::size_t max_states = 200'000);

// Same, started from a distribution over patterns (pairs of pattern and weight).
PatternDistribution exact_distribution(const MultilevelSystem& sys, int depth, double T, long L,
                                       const std::vector<std::pair<InterlacingPattern, double>>& init,
                                       std::size_t max_states = 200'000);

}  // namespace pushblock
