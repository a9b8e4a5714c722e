#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "setcon/collection.hpp"
#include "setcon/protocols.hpp"
#include "setcon/runtime.hpp"

namespace setcon {

/// A protocol expressible to the simulator: deterministic per process given
/// the sequence of agreed outcomes (hist[0] is the agreed input; snapshot
/// outcomes are arena tokens carried in the value payload).
struct SimAction {
  enum class Kind { ScAccess, SnapshotRead, Decide };
  Kind kind = Kind::Decide;
  int object = -1;        // ScAccess: simulated object id; SnapshotRead: simulated snapshot id
  ObjectSpec species{};   // ScAccess only
  Value proposal{};       // ScAccess: value proposed to the object
  Value decision{};       // Decide only
};

class SimulatedProgram {
 public:
  virtual ~SimulatedProgram() = default;
  virtual int processes() const = 0;
  virtual int snapshot_objects() const { return 0; }
  /// Next agreement-requiring step (or the decision) after `hist`.  Simulated
  /// snapshot outcomes in `hist` are arena tokens; `arena` decodes them.
  virtual SimAction next(int pid, std::span<const Value> hist,
                         const Arena& arena) const = 0;
  /// Latest value `pid` wrote to simulated snapshot object `object` along
  /// `hist` (for reconstructing simulated snapshot contents).
  virtual std::optional<Value> last_update(int pid, std::span<const Value> hist,
                                           int object) const;
};

/// The static set-consensus algorithm as a simulated program: propose the
/// input to the witness-group object, decide the outcome.
class StaticSimProgram : public SimulatedProgram {
 public:
  StaticSimProgram(const Collection& c, int n);
  explicit StaticSimProgram(StaticLayout layout);

  int processes() const override { return layout_.n; }
  SimAction next(int pid, std::span<const Value> hist,
                 const Arena& arena) const override;

  const StaticLayout& layout() const { return layout_; }

 private:
  StaticLayout layout_;
};

struct BlockedEntry {
  ObjectSpec tag;      // (1,1) for input/snapshot/outcome agreements
  std::string label;   // instance label
  int mid_crashed = 0;
};

struct BgResult {
  World world;  // simulators' world, post-run (trace, slots, objects)
  RunResult run;
  std::vector<std::optional<Value>> simulator_returns;    // per simulator
  std::vector<std::optional<Value>> simulated_decisions;  // per simulated process
  std::vector<BlockedEntry> blocked;                      // blocked-instance inventory
  int crashed_simulators = 0;

  int simulated_decision_count() const;
};

/// Runs `m` simulators executing `program` (an n-process protocol over
/// update/snapshot/sc-propose steps) on snapshot memory plus 1-/s-agreement
/// instances.  Each simulator proposes its own input for every simulated
/// input agreement and returns the first simulated decision it observes.
BgResult bg_run(std::shared_ptr<const SimulatedProgram> program, int m,
                std::vector<Value> sim_inputs, Schedule schedule,
                RunOptions options = {});

/// Agreement instances left undecided with at least their parameter's worth
/// of simulators crashed between the A-write and the B-write.  The world
/// must host a BG run.
std::vector<BlockedEntry> blocked_inventory(const World& w);

}  // namespace setcon
