#pragma once

// Command-line driver. Every subcommand reads a RunConfig file and writes
// report.csv, report.json and angles.txt (plus *.svg when emit_plots is set)
// into the configured output directory.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration or usage error,
// 3 an acceptance assertion failed under --assert.

#include <cstddef>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tmera/circuit.hpp"
#include "tmera/config.hpp"
#include "tmera/ground.hpp"
#include "tmera/report.hpp"

namespace tmera {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitAssert = 3;

/// Accumulates named pass/fail checks for --assert.
class AssertionLog {
 public:
  void check(bool ok, std::string what) {
    if (!ok) failures_.push_back(std::move(what));
    ++count_;
  }
  bool ok() const noexcept { return failures_.empty(); }
  std::size_t count() const noexcept { return count_; }
  const std::vector<std::string>& failures() const noexcept { return failures_; }

  nlohmann::json to_json() const { return {{"checked", count_}, {"failures", failures_}}; }

 private:
  std::vector<std::string> failures_;
  std::size_t count_ = 0;
};

/// Minimum global fidelity asserted for a depth (none below D = 3).
inline double fidelity_floor(std::size_t depth) {
  if (depth >= 6) return 0.35;
  if (depth >= 3) return 0.15;
  return 0.0;
}

inline constexpr double kSiteInfidelityBound = 1e-2;

namespace cli {

struct Context {
  RunConfig config;
  OutputDir out;
  std::ostream& log;
  std::string timestamp;
};

DmeraCircuit ground_circuit(Context& ctx, GroundResult* result = nullptr);
void write_json(const Context& ctx, nlohmann::json doc, const AssertionLog& asserts);

AssertionLog cmd_optimize_ground(Context& ctx);
AssertionLog cmd_sweep(Context& ctx);
AssertionLog cmd_curve(Context& ctx);
AssertionLog cmd_correlations(Context& ctx);
AssertionLog cmd_wavelets(Context& ctx);
AssertionLog cmd_tfd_check(Context& ctx);
AssertionLog cmd_effective_h(Context& ctx);

using Command = AssertionLog (*)(Context&);

/// Subcommand name to handler and help text.
const std::map<std::string, std::pair<Command, std::string>>& commands();

}  // namespace cli

/// Parses argv, runs one subcommand and returns its exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

}  // namespace tmera
