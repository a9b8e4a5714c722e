#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "setcon/collection.hpp"
#include "setcon/protocols.hpp"
#include "setcon/runtime.hpp"
#include "setcon/verify.hpp"

namespace setcon {

/// One protocol run as configured on the command line.
struct RunConfig {
  std::string protocol;                // static | adaptive | l-agreement:K
  std::optional<std::string> collection;
  int n = 0;
  std::string inputs;    // "" (1..n), "A..B", "v,v,...", "v@p0,v@p3" (sparse)
  std::string schedule = "random";  // rr | random | scripted=p,p,...
  std::uint64_t seed = 0;
  std::string crashes;   // "proc:step,proc:step"
  std::string policy = "adversarial";  // adversarial | first-wins
  std::int64_t budget = 0;             // 0: SETCON_BUDGET env or 10^6
  std::vector<std::string> checks;     // kset:K | lagree:L | adaptive
  std::string trace_path;              // write the trace TSV when non-empty
};

struct RunOutput {
  int exit_code = 0;  // 0 checks pass, 1 check failure, 3 budget exhausted
  RunResult result;
  std::vector<CheckReport> reports;
  std::string diagnostic;
  std::vector<std::int64_t> decisions;  // distinct decision payloads
};

/// Parses "v" as an integer or a single letter a..z (= 1..26).
std::int64_t parse_input_value(const std::string& tok);

/// Expands the --inputs syntax to one optional value per process.
std::vector<std::optional<Value>> parse_inputs(const std::string& text, int n);

/// Parses "proc:step,..." crash scripts.
std::vector<CrashPoint> parse_crashes(const std::string& text);

/// Parses the --schedule/--seed pair (with crash points attached).
Schedule parse_schedule(const std::string& text, std::uint64_t seed,
                        const std::string& crashes);

/// Default step budget: SETCON_BUDGET when set, otherwise 10^6.
std::int64_t default_budget();

/// Builds the world, runs it, writes the trace, evaluates the checks.
RunOutput execute_run(const RunConfig& cfg);

}  // namespace setcon
