#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace pushblock {

struct CheckResult {
  std::string identity;
  double residual = 0;
  double tolerance = 0;
  bool pass = false;            // residual <= tolerance and finite
  bool informational = false;   // reported but not counted toward the suite verdict
  int criterion = 0;            // acceptance criterion the check belongs to, 0 if none
  bool timing = false;          // residual is wall time in seconds; left out of JSON reports
  std::string note;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;
  double seconds = 0;
  bool pass() const;
  nlohmann::json to_json() const;
};

struct VerifyOptions {
  std::uint64_t seed = 20241;
  long replicas = 0;  // 0 keeps each suite's default sample size
  int threads = 1;
};

// duality, flow, two-level, intertwining, orthopoly, branching, coherency,
// evolution, biorthogonality, kernel-oracle, kernel-mc, scaling.
const std::vector<std::string>& suite_names();
// Throws InvalidParameters for an unknown name.
SuiteReport run_suite(const std::string& name, const VerifyOptions& opts = {});

}  // namespace pushblock
