#include "pushblock/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "pushblock/errors.hpp"

namespace pushblock {

bool occupied(const InterlacingPattern& p, const KernelPoint& point) {
  size_t k = static_cast<size_t>(point.level.order() - 1);
  if (k >= p.levels.size()) return false;
  const auto& lv = p.levels[k];
  return std::find(lv.begin(), lv.end(), point.x) != lv.end();
}

std::vector<McEstimate> mc_correlations(const MultilevelSystem& sys, const PatternSampler& init, double T,
                                        const std::vector<std::vector<KernelPoint>>& sets, long replicas,
                                        std::uint64_t seed, int threads) {
  if (replicas < 2) throw InvalidParameters("need at least two replicas");
  threads = std::max(1, threads);
  std::vector<std::vector<long>> counts(static_cast<size_t>(threads), std::vector<long>(sets.size(), 0));
  auto work = [&](int tid) {
    auto& mine = counts[static_cast<size_t>(tid)];
    for (long r = tid; r < replicas; r += threads) {
      Rng rng = make_stream(seed, static_cast<std::uint64_t>(r));
      InterlacingPattern start = init(rng);
      auto st = simulate_multilevel(sys, std::move(start), T, rng);
      for (size_t s = 0; s < sets.size(); ++s)
        if (std::all_of(sets[s].begin(), sets[s].end(), [&](const KernelPoint& q) { return occupied(st.pattern, q); }))
          ++mine[s];
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  std::vector<McEstimate> out;
  const double R = static_cast<double>(replicas);
  for (size_t s = 0; s < sets.size(); ++s) {
    long hits = 0;
    for (const auto& c : counts) hits += c[s];
    double p = static_cast<double>(hits) / R;
    double var = p * (1 - p) * R / (R - 1);
    out.push_back({sets[s], p, std::sqrt(var / R), replicas});
  }
  return out;
}

}  // namespace pushblock
