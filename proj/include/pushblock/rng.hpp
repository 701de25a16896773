#pragma once

#include <cstdint>
#include <random>

namespace pushblock {

using Rng = std::mt19937_64;

// Independent stream for replica `stream` under a master seed. The mapping is
// fixed so aggregate results do not depend on how replicas are scheduled.
inline Rng make_stream(std::uint64_t master, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x5eedu};
  return Rng(seq);
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double exponential(Rng& rng, double rate) {
  return std::exponential_distribution<double>(rate)(rng);
}

}  // namespace pushblock
