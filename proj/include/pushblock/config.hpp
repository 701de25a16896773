#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pushblock/families.hpp"
#include "pushblock/kernel.hpp"
#include "pushblock/measures.hpp"

namespace pushblock {

struct Caps {
  long truncation = 60;   // chain cutoff L for transition matrices
  long sites = 12;        // kernel sites per level in table output
  int degree = 64;        // polynomial degree cap
  long support = 30;      // coherent-measure support cap (Gibbs initial data)
  long oracle = 25;       // exact-distribution cutoff
};

// Run configuration read from a YAML file; the schema is documented in configs/README.md.
struct RunConfig {
  FamilyParams family;
  int depth = 2;
  std::optional<double> time;  // simulation horizon; defaults to psi.t
  PsiSpec psi;
  Caps caps;
  long replicas = 1000;
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<KernelPoint> points;
  std::string out_dir = "out";
  std::string prefix = "run";
  std::string source;  // text the config was parsed from

  double horizon() const { return time.value_or(psi.t); }
};

// Throws ConfigError naming the offending line and column.
RunConfig parse_config(const std::string& text, const std::string& origin = "<config>");
RunConfig load_config(const std::string& path);
// Default config (Chebyshev, depth 2, t = 1) when no file is given.
RunConfig default_config();

// Canonical YAML rendering of the parsed fields; the config hash is taken over it.
std::string canonical_config(const RunConfig& cfg);

}  // namespace pushblock
