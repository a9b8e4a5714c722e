#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "setcon/agreement.hpp"
#include "setcon/collection.hpp"
#include "setcon/runtime.hpp"

namespace setcon {

// ---------------------------------------------------------------------------
// l-agreement: at most l distinct decisions; termination unless l or more
// participants stall between their A-write and their B-write.
// ---------------------------------------------------------------------------

/// Shared half of one l-agreement instance: parameter, the two snapshot
/// objects, and per-participant progress marks used by liveness diagnostics.
struct LAgreementInstance {
  int param = 1;
  ObjectId a = -1;
  ObjectId b = -1;
  std::string label;

  struct Mark {
    bool a_written = false;
    bool b_written = false;
    bool done = false;
  };
  std::vector<Mark> marks;  // by pid
  bool decided = false;     // some participant completed

  int mid_window_count(const std::vector<ProcessSlot>& slots) const;
};

LAgreementInstance make_lagreement_instance(World& w, std::string label, int param);

/// Per-participant cursor over an instance.  Each advance() performs exactly
/// one shared operation.  The scan-B loop is resumable: a failed exit test
/// parks the machine and the next advance re-polls B.
class LAgreementMachine {
 public:
  enum class Phase { WriteA, ScanA, WriteB, ScanB, Done };
  enum class Outcome { Progress, Parked, Done };

  LAgreementMachine(LAgreementInstance* inst, Value proposal);

  Outcome advance(StepCtx& ctx);
  Phase phase() const { return phase_; }
  bool done() const { return phase_ == Phase::Done; }
  /// Between the A-write and the B-write: crashing here may block others.
  bool mid_window() const { return phase_ == Phase::ScanA || phase_ == Phase::WriteB; }
  const Value& result() const;
  const SnapVector& scanned_a() const { return u_; }

 private:
  LAgreementInstance* inst_;
  Value proposal_;
  Phase phase_ = Phase::WriteA;
  SnapVector u_;
  Value result_{};
};

/// Top-level protocol: every participant proposes its input to a single
/// l-agreement instance (objects labeled "A" and "B") and decides the result.
class LAgreementProtocol : public Protocol {
 public:
  explicit LAgreementProtocol(int l);

  std::string name() const override;
  void setup(World& w) override;
  std::unique_ptr<ProcessBody> make_body(World& w, int pid) override;

  int l() const { return l_; }
  const LAgreementInstance& instance() const { return inst_; }

 private:
  int l_;
  LAgreementInstance inst_;
};

/// Picks the adoption candidate from a snapshot of (value, level) pairs:
/// the greatest level present, and the minimum value carrying it.  Throws
/// std::invalid_argument on an all-empty vector.
std::pair<Value, std::int64_t> tie_break_adopt(const SnapVector& r);

// ---------------------------------------------------------------------------
// Static set consensus: partition n processes into witness groups, one fresh
// object per non-trivial group.
// ---------------------------------------------------------------------------

struct StaticLayout {
  int n = 1;
  Witness w;

  struct Group {
    ObjectSpec species;
    int first = 0;  // first process index (0-based)
    int count = 0;  // group size (<= species.ell)
  };
  std::vector<Group> groups;

  int group_of(int index) const;        // 0-based process position
  int position_in_group(int index) const;
  bool trivial(int group) const;        // (1,1) groups decide locally
};

StaticLayout build_static(const Collection& c, int n);
StaticLayout build_static(const Witness& w, int n);

class StaticProtocol : public Protocol {
 public:
  StaticProtocol(Collection c, int n);
  StaticProtocol(StaticLayout layout);

  std::string name() const override;
  void validate(int n) const override;
  void setup(World& w) override;
  std::unique_ptr<ProcessBody> make_body(World& w, int pid) override;

  const StaticLayout& layout() const { return layout_; }
  ObjectId group_object(int group) const { return objects_.at(group); }

 private:
  StaticLayout layout_;
  std::vector<ObjectId> objects_;  // -1 for trivial groups
};

// ---------------------------------------------------------------------------
// Optimally adaptive set consensus: snapshot the participation, run the
// static algorithm sized to it, retry while the participation grows.
// ---------------------------------------------------------------------------

class AdaptiveProtocol : public Protocol {
 public:
  AdaptiveProtocol(Collection c, int n);

  std::string name() const override;
  void setup(World& w) override;
  std::unique_ptr<ProcessBody> make_body(World& w, int pid) override;

  ObjectId r_object() const { return r_; }
  const Collection& collection() const { return c_; }

  /// Shared static instance for participation size m; lazily created.
  /// Objects are keyed (m, group); equal-size snapshots are identical, so
  /// positions within the instance are unique.
  struct StInstance {
    StaticLayout layout;
    std::vector<ObjectId> objects;  // -1 for trivial groups
  };
  const StInstance& st_instance(World& w, int m);

 private:
  Collection c_;
  int n_;
  ObjectId r_ = -1;
  std::map<int, StInstance> st_;
};

// ---------------------------------------------------------------------------
// Descriptor parsing: "static", "adaptive", "l-agreement:K" / "l-agreement(l=K)".
// ---------------------------------------------------------------------------

struct ProtocolSpec {
  enum class Kind { Static, Adaptive, LAgreement };
  Kind kind = Kind::Static;
  std::optional<Collection> collection;
  int l = 1;

  static ProtocolSpec parse(std::string_view descriptor,
                            const std::optional<Collection>& collection);
};

std::unique_ptr<Protocol> make_protocol(const ProtocolSpec& spec, int n);

}  // namespace setcon
