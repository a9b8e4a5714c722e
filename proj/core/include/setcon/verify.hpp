#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "setcon/agreement.hpp"
#include "setcon/bg.hpp"
#include "setcon/collection.hpp"
#include "setcon/runtime.hpp"

namespace setcon {

/// Outcome of one trace validator.  Pure over (inputs, trace): re-running a
/// check yields an identical report.
struct CheckReport {
  std::string name;
  bool pass = true;
  std::vector<std::string> witnesses;  // at least one on failure
  std::vector<std::pair<std::string, std::int64_t>> stats;

  void fail(std::string witness);
  void stat(std::string key, std::int64_t v);
  /// check \t verdict \t key=value... \t witness=...
  std::string tsv() const;
};

/// Validity (decisions come from non-absent inputs), at most k distinct
/// decisions, and termination of every participating non-crashed process.
CheckReport check_k_set_consensus(const std::vector<std::optional<Value>>& inputs,
                                  const Trace& trace, int k);

/// Validity against the instance's A-writes, at most l distinct decisions,
/// and termination whenever fewer than l participants stalled between their
/// A-write and B-write.  Objects are found by label (default "A"/"B").
CheckReport check_l_agreement(const Trace& trace, int l,
                              std::string_view a_label = "A",
                              std::string_view b_label = "B");

/// Distinct decisions bounded by the agreement level of the participation
/// size, and termination of every correct participant.
CheckReport check_adaptive_optimality(const Collection& c, const Trace& trace,
                                      const std::set<int>& participants);

/// Progress of the simulation: fewer crashed simulators than the simulated
/// agreement level forces at least one simulated decision, and the blocked
/// inventory stays within the crash budget.
CheckReport check_bg_progress(const Collection& c, int n, const BgResult& result,
                              int crashed_simulators);

}  // namespace setcon
