#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pushblock/kernel.hpp"
#include "pushblock/multilevel.hpp"

namespace pushblock {

// Frequency of "every point in the set is occupied" over replicas.
struct McEstimate {
  std::vector<KernelPoint> points;
  double estimate = 0;
  double std_error = 0;  // sample standard deviation / √replicas
  long replicas = 0;
};

using PatternSampler = std::function<InterlacingPattern(Rng&)>;

bool occupied(const InterlacingPattern& p, const KernelPoint& point);

// Replica r draws its initial pattern and its path from make_stream(seed, r).
// Counts are integers, so the result does not depend on the thread count.
std::vector<McEstimate> mc_correlations(const MultilevelSystem& sys, const PatternSampler& init, double T,
                                        const std::vector<std::vector<KernelPoint>>& sets, long replicas,
                                        std::uint64_t seed, int threads = 1);

}  // namespace pushblock
