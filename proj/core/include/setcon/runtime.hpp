#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "setcon/collection.hpp"

namespace setcon {

/// An opaque proposable token.  Totally ordered by (payload, origin) so that
/// "return the minimum" steps are deterministic; two values with the same
/// payload are the same value for agreement counting.
struct Value {
  std::int64_t payload = 0;
  std::int32_t origin = -1;

  friend constexpr auto operator<=>(const Value&, const Value&) = default;
};

std::string to_string(const Value& v);

/// One position of a snapshot object.  `aux` is protocol-interpreted side
/// data (e.g. a participation level).  Versions only ever advance.
struct Cell {
  bool set = false;
  Value value{};
  std::int64_t aux = 0;
  std::uint64_t version = 0;
};

using SnapVector = std::vector<Cell>;

/// Append-only interning table for structured payloads (snapshot contents,
/// state estimates).  Tokens are dense and assigned in first-seen order, so
/// equal content always yields equal tokens within one world.
class Arena {
 public:
  std::int64_t intern(std::vector<std::int64_t> blob);
  std::span<const std::int64_t> blob(std::int64_t token) const;
  std::size_t size() const { return blobs_.size(); }

 private:
  struct BlobHash {
    std::size_t operator()(const std::vector<std::int64_t>& b) const;
  };
  std::vector<std::vector<std::int64_t>> blobs_;
  std::unordered_map<std::vector<std::int64_t>, std::int64_t, BlobHash> index_;
};

/// Flattens logical snapshot content (set/value/aux per cell, versions
/// excluded) for interning.
std::vector<std::int64_t> encode_snapshot(const SnapVector& cells);
SnapVector decode_snapshot(std::span<const std::int64_t> blob);

enum class EventKind { Update, Snapshot, ScPropose, ScReturn, Decide, Crash };
std::string_view to_string(EventKind k);

using ObjectId = std::int32_t;

struct TraceEvent {
  std::int64_t step = 0;  // global event index
  std::int32_t pid = -1;
  EventKind kind = EventKind::Update;
  ObjectId object = -1;
  Value value{};
  std::int64_t aux = 0;

  friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

/// Ordered event log of one run.  Self-contained: carries the object label
/// table so it can be serialized and inspected without the world.
struct Trace {
  std::vector<TraceEvent> events;
  std::vector<std::string> object_labels;

  std::string_view label(ObjectId id) const;
  /// One event per line: step\tproc\tkind\tobject\tpayload.
  void write_tsv(std::ostream& os) const;

  friend bool operator==(const Trace&, const Trace&) = default;
};

struct ProcessSlot {
  enum class Status { NotStarted, Running, Decided, Crashed };
  Status status = Status::NotStarted;
  int step_count = 0;
  std::optional<Value> decision;
};

/// Crash injection point: the process halts permanently once it has taken
/// `after_steps` steps (0 = before its first step).
struct CrashPoint {
  int pid = 0;
  int after_steps = 0;
};

struct Schedule {
  enum class Policy { RoundRobin, SeededRandom, Scripted };
  Policy policy = Policy::SeededRandom;
  std::uint64_t seed = 0;
  std::vector<int> script;  // Scripted: consumed left to right, then round-robin
  std::vector<CrashPoint> crashes;

  static Schedule round_robin();
  static Schedule seeded(std::uint64_t seed);
  static Schedule scripted(std::vector<int> order);
};

/// Decision semantics of set-consensus objects.  Adversarial spreads
/// decisions toward the j bound under a seeded coin; FirstWins locks the
/// first proposal (the benign extreme).
enum class ScPolicy { Adversarial, FirstWins };

/// State of one set-consensus object instance.
class ScObject {
 public:
  ScObject(ObjectSpec spec, ScPolicy policy, std::uint64_t seed,
           bool enforce_capacity = true);

  /// First half of a propose: registers the proposal and the accessor.
  /// Throws std::logic_error on a capacity fault (more than ell distinct
  /// accessors) — that is a protocol bug, not legal object behavior.
  void register_proposal(int pid, Value v);
  /// Second half: fixes and returns pid's output, a member of decided().
  Value resolve_return(int pid);
  /// Both halves at once (single-event convenience for direct use).
  Value propose(int pid, Value v);

  const ObjectSpec& spec() const { return spec_; }
  const std::vector<int>& accessors() const { return accessors_; }
  const std::vector<std::pair<int, Value>>& proposals() const { return proposals_; }
  const std::vector<Value>& decided() const { return decided_; }
  bool has_returned(int pid) const;
  std::optional<Value> returned_value(int pid) const;

 private:
  bool in_decided(const Value& v) const;

  ObjectSpec spec_;
  ScPolicy policy_;
  bool enforce_capacity_;
  std::mt19937_64 rng_;
  std::vector<int> accessors_;                    // distinct pids, propose order
  std::vector<std::pair<int, Value>> proposals_;  // (pid, value), propose order
  std::vector<Value> decided_;                    // decision order
  std::unordered_map<int, Value> returned_;
};

struct SnapshotObject {
  std::string label;
  SnapVector cells;
};

struct RunOptions {
  ScPolicy sc_policy = ScPolicy::Adversarial;
  std::uint64_t object_seed = 0;
  std::int64_t step_budget = 1'000'000;
  bool record_snapshots = false;  // keep full snapshot results for audits
  bool enforce_capacity = true;
};

class World;

/// Per-step operation surface handed to a process body.  A body must perform
/// exactly one operation (update / snapshot / sc_propose / sc_return /
/// decide) per step; the world enforces the count.
class StepCtx {
 public:
  int pid() const { return pid_; }
  const Value& input() const;
  int world_size() const;

  void update(ObjectId obj, Value v, std::int64_t aux = 0);
  SnapVector snapshot(ObjectId obj);
  void sc_propose(ObjectId obj, Value v);
  Value sc_return(ObjectId obj);
  void decide(Value v);

  Arena& arena();
  World& world() { return w_; }

 private:
  friend class World;
  StepCtx(World& w, int pid) : w_(w), pid_(pid) {}
  World& w_;
  int pid_;
  int ops_ = 0;
};

class ProcessBody {
 public:
  virtual ~ProcessBody() = default;
  /// Advance this process by exactly one operation.
  virtual void step(StepCtx& ctx) = 0;
  /// Canonical encoding of the local state, for state-space exploration.
  /// Empty means the body does not support introspection.  Implementations
  /// must avoid world-local identifiers (arena tokens); object ids may be
  /// included only via their labels.
  virtual std::vector<std::int64_t> state_key(const World& w) const {
    (void)w;
    return {};
  }
};

/// A protocol instantiates shared objects and per-process step machines.
/// Implementations must not hold pointers into the world; they address
/// shared state through ObjectIds only.
class Protocol {
 public:
  virtual ~Protocol() = default;
  virtual std::string name() const = 0;
  /// Throws std::invalid_argument when the protocol cannot run at size n.
  virtual void validate(int n) const;
  virtual void setup(World& w) = 0;
  virtual std::unique_ptr<ProcessBody> make_body(World& w, int pid) = 0;
};

enum class StepOutcome { Progressed, Quiescent };

struct RunResult {
  bool quiescent = false;
  bool budget_exhausted = false;
  std::int64_t steps = 0;
  std::string diagnostic;  // non-empty when budget_exhausted
};

/// Deterministic single-threaded execution of one protocol instance:
/// scheduler, shared objects, crash injection, and the trace.  Processes
/// with an absent input never run (non-participating).
class World {
 public:
  World(int n, std::vector<std::optional<Value>> inputs, Schedule schedule,
        RunOptions options = {});

  World(World&&) = default;
  World& operator=(World&&) = default;

  /// Installs the protocol: validates n, allocates shared objects, builds
  /// bodies, and applies crash points at step 0.
  void install(std::unique_ptr<Protocol> protocol);

  // -- object allocation (protocol setup, or lazily during a run) --
  ObjectId alloc_snapshot(std::string label, int cells);
  ObjectId alloc_sc(std::string label, ObjectSpec spec);

  // -- execution --
  StepOutcome step();
  RunResult run();  // to quiescence or budget exhaustion
  bool quiescent() const;

  // -- introspection --
  int size() const { return n_; }
  const std::vector<std::optional<Value>>& inputs() const { return inputs_; }
  const std::vector<ProcessSlot>& slots() const { return slots_; }
  const Trace& trace() const { return trace_; }
  Trace take_trace() { return std::move(trace_); }
  Arena& arena() { return arena_; }
  const Arena& arena() const { return arena_; }
  const RunOptions& options() const { return options_; }
  Protocol& protocol() { return *protocol_; }
  const Protocol& protocol() const { return *protocol_; }

  bool is_sc_object(ObjectId id) const;
  const ScObject& sc_object(ObjectId id) const;
  const SnapshotObject& snapshot_object(ObjectId id) const;
  std::vector<ObjectId> object_ids() const;
  /// Local-state encoding of a participating process (see ProcessBody).
  std::vector<std::int64_t> body_state_key(int pid) const;
  /// Full results of every snapshot op on `id` (record_snapshots only).
  const std::vector<std::pair<std::int64_t, SnapVector>>& snapshot_history(
      ObjectId id) const;

 private:
  friend class StepCtx;

  int pick_next();
  void record(EventKind kind, int pid, ObjectId obj, Value v, std::int64_t aux);
  void apply_crash_points(int pid);
  void crash(int pid);

  struct ObjRecord {
    bool is_sc = false;
    std::size_t index = 0;
  };

  int n_;
  std::vector<std::optional<Value>> inputs_;
  Schedule schedule_;
  RunOptions options_;
  std::unique_ptr<Protocol> protocol_;
  std::vector<ProcessSlot> slots_;
  std::vector<std::unique_ptr<ProcessBody>> bodies_;
  std::vector<ObjRecord> objects_;
  std::vector<SnapshotObject> snapshots_;
  std::vector<std::vector<std::pair<std::int64_t, SnapVector>>> snapshot_histories_;
  std::vector<ScObject> scs_;
  Trace trace_;
  Arena arena_;
  std::mt19937_64 sched_rng_;
  int rr_cursor_ = 0;
  std::size_t script_pos_ = 0;
  std::int64_t steps_taken_ = 0;
};

World new_world(int n, std::unique_ptr<Protocol> protocol,
                std::vector<std::optional<Value>> inputs, Schedule schedule,
                RunOptions options = {});

/// Per-object accessor audit over a trace: distinct proposers must not
/// exceed the object's capacity.
struct CapacityReport {
  struct Row {
    ObjectId object;
    std::string label;
    ObjectSpec spec;
    int distinct_accessors = 0;
    bool violation = false;
  };
  std::vector<Row> rows;

  bool ok() const;
  std::vector<Row> violations() const;
};

CapacityReport record_and_validate_capacity(const World& w);

/// Convenience: distinct decision payloads in a trace.
std::vector<std::int64_t> distinct_decisions(const Trace& t);

}  // namespace setcon
