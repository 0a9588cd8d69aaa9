#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pairsim/error.hpp"
#include "pairsim/simulator.hpp"

namespace pairsim {

inline constexpr const char* kToolVersion = "0.1.0";

/// Process exit codes.
enum ExitCode : int {
  exit_ok = 0,
  exit_usage = 2,     // bad arguments or schema violation
  exit_data = 3,      // unreadable or unsuitable data, failed self-test
  exit_internal = 4,
};

int exit_code_for(Errc code);

/// Runs the command line tool; argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct SelftestOptions {
  bool mutate_correlator = false;  // feed the fast correlator a corrupted stream
};

struct SuiteStatus {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Thermal light on both arms with no pair process: default-config singles,
/// both arms split onto detector pairs. F cannot exceed 1.
ExperimentConfig classical_config(double duration_s, std::uint64_t seed);

/// Small-scale oracle, null-hypothesis, classical-bound and determinism suites.
std::vector<SuiteStatus> run_selftest(const SelftestOptions& opt);

}  // namespace pairsim
