#include "setcon/bg.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

namespace setcon {

std::optional<Value> SimulatedProgram::last_update(int, std::span<const Value>,
                                                   int) const {
  return std::nullopt;
}

StaticSimProgram::StaticSimProgram(const Collection& c, int n)
    : layout_(build_static(c, n)) {}

StaticSimProgram::StaticSimProgram(StaticLayout layout) : layout_(std::move(layout)) {}

SimAction StaticSimProgram::next(int pid, std::span<const Value> hist,
                                 const Arena&) const {
  if (hist.empty()) throw std::logic_error("static sim: no agreed input yet");
  int g = layout_.group_of(pid);
  SimAction a;
  if (layout_.trivial(g)) {
    a.kind = SimAction::Kind::Decide;
    a.decision = hist[0];
    return a;
  }
  if (hist.size() == 1) {
    a.kind = SimAction::Kind::ScAccess;
    a.object = g;
    a.species = layout_.groups[g].species;
    a.proposal = hist[0];
    return a;
  }
  a.kind = SimAction::Kind::Decide;
  a.decision = hist[1];
  return a;
}

namespace {

struct AgreementKey {
  enum class Kind { Input, Snapshot, Outcome, Object };
  Kind kind = Kind::Input;
  int pid = -1;     // simulated process (Input/Snapshot/Outcome)
  int step = -1;    // history index being agreed (Snapshot/Outcome)
  int object = -1;  // simulated object (Object)

  friend auto operator<=>(const AgreementKey&, const AgreementKey&) = default;
};

std::string key_label(const AgreementKey& k) {
  switch (k.kind) {
    case AgreementKey::Kind::Input:
      return "ag.in.p" + std::to_string(k.pid);
    case AgreementKey::Kind::Snapshot:
      return "ag.snap.p" + std::to_string(k.pid) + ".s" + std::to_string(k.step);
    case AgreementKey::Kind::Outcome:
      return "ag.out.p" + std::to_string(k.pid) + ".s" + std::to_string(k.step);
    case AgreementKey::Kind::Object:
      return "ag.obj" + std::to_string(k.object);
  }
  return "ag.?";
}

class BgProtocol : public Protocol {
 public:
  explicit BgProtocol(std::shared_ptr<const SimulatedProgram> prog)
      : prog_(std::move(prog)) {
    if (!prog_) throw std::invalid_argument("bg: null simulated program");
  }

  std::string name() const override { return "bg-simulation"; }
  void setup(World& w) override { board_ = w.alloc_snapshot("board", w.size()); }
  std::unique_ptr<ProcessBody> make_body(World& w, int pid) override;

  ObjectId board() const { return board_; }
  const SimulatedProgram& program() const { return *prog_; }

  struct RegEntry {
    std::unique_ptr<LAgreementInstance> inst;
    ObjectSpec tag{1, 1};  // species for Object instances, (1,1) otherwise
  };

  /// s-agreement instances are shared per simulated object; every other
  /// kind is a 1-agreement per (process, history index).
  LAgreementInstance* instance(World& w, const AgreementKey& key,
                               const ObjectSpec& species) {
    auto it = registry_.find(key);
    if (it != registry_.end()) return it->second.inst.get();
    int param = key.kind == AgreementKey::Kind::Object ? species.j : 1;
    RegEntry entry;
    entry.inst = std::make_unique<LAgreementInstance>(
        make_lagreement_instance(w, key_label(key), param));
    entry.tag = key.kind == AgreementKey::Kind::Object ? species : ObjectSpec{1, 1};
    return registry_.emplace(key, std::move(entry)).first->second.inst.get();
  }

  const std::map<AgreementKey, RegEntry>& registry() const { return registry_; }

 private:
  std::shared_ptr<const SimulatedProgram> prog_;
  ObjectId board_ = -1;
  std::map<AgreementKey, RegEntry> registry_;
};

class BgSimBody : public ProcessBody {
 public:
  BgSimBody(BgProtocol* proto, int pid, Value input, int sim_n)
      : proto_(proto), pid_(pid), input_(input), est_(sim_n) {}

  void step(StepCtx& ctx) override {
    switch (phase_) {
      case Phase::Scan: {
        auto board = ctx.snapshot(proto_->board());
        adopt(ctx, board);
        drop_superseded_parked();
        if (auto d = find_decision(ctx)) {
          ret_ = *d;
          phase_ = Phase::Return;
          return;
        }
        pick_target(ctx);
        return;
      }

      case Phase::Advance: {
        auto& m = machine_for(ctx, *key_);
        auto out = m.advance(ctx);
        if (out == LAgreementMachine::Outcome::Parked) {
          // Blocked for now; proceed to the next simulated process and
          // re-poll when the round-robin returns here.
          phase_ = Phase::Scan;
          return;
        }
        if (out == LAgreementMachine::Outcome::Done) {
          on_agreement_done(ctx, *key_, m.result());
        }
        return;
      }

      case Phase::Publish:
        publish(ctx);
        phase_ = Phase::Scan;
        return;

      case Phase::Return:
        ctx.decide(*ret_);
        return;
    }
  }

 private:
  enum class Phase { Scan, Advance, Publish, Return };

  int sim_n() const { return static_cast<int>(est_.size()); }

  // ---- estimates and the board ----

  std::vector<std::int64_t> encode_estimates(StepCtx& ctx) const {
    std::vector<std::int64_t> blob;
    blob.push_back(sim_n());
    for (int q = 0; q < sim_n(); ++q) {
      const auto& h = est_[q];
      blob.push_back(static_cast<std::int64_t>(h.size()));
      for (const auto& v : h) {
        blob.push_back(v.payload);
        blob.push_back(v.origin);
      }
      auto d = decision_of(ctx, q);
      blob.push_back(d ? 1 : 0);
      blob.push_back(d ? d->payload : 0);
      blob.push_back(d ? d->origin : 0);
    }
    return blob;
  }

  void adopt(StepCtx& ctx, const SnapVector& board) {
    for (const auto& cell : board) {
      if (!cell.set) continue;
      auto blob = ctx.arena().blob(cell.value.payload);
      std::size_t k = 1;
      for (int q = 0; q < sim_n(); ++q) {
        auto len = static_cast<std::size_t>(blob[k++]);
        std::vector<Value> h(len);
        for (auto& v : h) {
          v.payload = blob[k++];
          v.origin = static_cast<std::int32_t>(blob[k++]);
        }
        k += 3;  // decision fields; recomputed from the history
        auto& mine = est_[q];
        std::size_t common = std::min(mine.size(), h.size());
        for (std::size_t i = 0; i < common; ++i) {
          if (mine[i] != h[i]) {
            throw std::logic_error(
                "bg: simulators disagree on the state sequence of p" +
                std::to_string(q));
          }
        }
        if (h.size() > mine.size()) mine = std::move(h);
      }
    }
  }

  void publish(StepCtx& ctx) {
    auto token = ctx.arena().intern(encode_estimates(ctx));
    ctx.update(proto_->board(), Value{token, pid_});
  }

  std::optional<Value> decision_of(StepCtx& ctx, int q) const {
    if (est_[q].empty()) return std::nullopt;
    auto a = proto_->program().next(q, est_[q], ctx.arena());
    if (a.kind == SimAction::Kind::Decide) return a.decision;
    return std::nullopt;
  }

  std::optional<Value> find_decision(StepCtx& ctx) const {
    for (int q = 0; q < sim_n(); ++q) {
      if (auto d = decision_of(ctx, q)) return d;
    }
    return std::nullopt;
  }

  // ---- agreement plumbing ----

  AgreementKey needed_key(StepCtx& ctx, int q) const {
    if (est_[q].empty()) return AgreementKey{AgreementKey::Kind::Input, q, -1, -1};
    auto a = proto_->program().next(q, est_[q], ctx.arena());
    int step = static_cast<int>(est_[q].size());
    switch (a.kind) {
      case SimAction::Kind::ScAccess: {
        AgreementKey obj{AgreementKey::Kind::Object, -1, -1, a.object};
        if (object_results_.contains(a.object)) {
          return AgreementKey{AgreementKey::Kind::Outcome, q, step, a.object};
        }
        return obj;
      }
      case SimAction::Kind::SnapshotRead:
        return AgreementKey{AgreementKey::Kind::Snapshot, q, step, a.object};
      case SimAction::Kind::Decide:
        break;
    }
    throw std::logic_error("bg: no agreement needed for p" + std::to_string(q));
  }

  void pick_target(StepCtx& ctx) {
    for (int i = 1; i <= sim_n(); ++i) {
      int q = (cursor_ + i) % sim_n();
      if (decision_of(ctx, q)) continue;  // unreachable: find_decision returned
      cursor_ = q;
      cur_ = q;
      key_ = needed_key(ctx, q);
      phase_ = Phase::Advance;
      return;
    }
    throw std::logic_error("bg: no simulated process has pending work");
  }

  LAgreementMachine& machine_for(StepCtx& ctx, const AgreementKey& key) {
    auto it = machines_.find(key);
    if (it != machines_.end()) return it->second;

    ObjectSpec species{1, 1};
    Value proposal{};
    switch (key.kind) {
      case AgreementKey::Kind::Input:
        proposal = input_;
        break;
      case AgreementKey::Kind::Object: {
        auto a = proto_->program().next(key_pid_for_object(ctx, key.object),
                                        est_[key_pid_for_object(ctx, key.object)],
                                        ctx.arena());
        species = a.species;
        proposal = a.proposal;
        break;
      }
      case AgreementKey::Kind::Outcome:
        proposal = object_results_.at(key.object);
        break;
      case AgreementKey::Kind::Snapshot:
        proposal = Value{simulated_snapshot_token(ctx, key.object), pid_};
        break;
    }
    auto* inst = proto_->instance(ctx.world(), key, species);
    return machines_.emplace(key, LAgreementMachine(inst, proposal)).first->second;
  }

  /// The simulated process whose pending access this object machine serves
  /// (the current target).
  int key_pid_for_object(StepCtx&, int) const { return cur_; }

  std::int64_t simulated_snapshot_token(StepCtx& ctx, int object) const {
    SnapVector cells(static_cast<std::size_t>(sim_n()));
    for (int q = 0; q < sim_n(); ++q) {
      auto v = proto_->program().last_update(q, est_[q], object);
      if (v) {
        cells[q].set = true;
        cells[q].value = *v;
      }
    }
    return ctx.arena().intern(encode_snapshot(cells));
  }

  void on_agreement_done(StepCtx& ctx, const AgreementKey& key, Value result) {
    if (key.kind == AgreementKey::Kind::Object) {
      object_results_.emplace(key.object, result);
      machines_.erase(key);  // result cached; instance marks stay shared
      // Continue with the outcome agreement if the target still needs it.
      if (!est_[cur_].empty()) {
        auto a = proto_->program().next(cur_, est_[cur_], ctx.arena());
        if (a.kind == SimAction::Kind::ScAccess && a.object == key.object) {
          key_ = AgreementKey{AgreementKey::Kind::Outcome, cur_,
                              static_cast<int>(est_[cur_].size()), key.object};
          return;  // stay in Advance
        }
      }
      phase_ = Phase::Scan;
      return;
    }

    int step = key.kind == AgreementKey::Kind::Input ? 0 : key.step;
    auto& h = est_[key.pid];
    machines_.erase(key);
    if (static_cast<int>(h.size()) == step) {
      h.push_back(result);
      phase_ = Phase::Publish;
    } else {
      // Someone advanced this process while we finished late; agreement
      // guarantees we computed the same value.
      if (h[static_cast<std::size_t>(step)] != result) {
        throw std::logic_error("bg: late agreement result diverges for p" +
                               std::to_string(key.pid));
      }
      phase_ = Phase::Scan;
    }
  }

  void drop_superseded_parked() {
    for (auto it = machines_.begin(); it != machines_.end();) {
      const auto& key = it->first;
      bool superseded = false;
      if (key.kind == AgreementKey::Kind::Input) {
        superseded = !est_[key.pid].empty();
      } else if (key.kind != AgreementKey::Kind::Object) {
        superseded = static_cast<int>(est_[key.pid].size()) > key.step;
      }
      // Only parked machines may be dropped: past the B-write they cannot
      // block anyone.  Mid-window machines never reach this point (we scan
      // only after parking or publishing).
      if (superseded && it->second.phase() == LAgreementMachine::Phase::ScanB) {
        it = machines_.erase(it);
      } else {
        ++it;
      }
    }
  }

  BgProtocol* proto_;
  int pid_;
  Value input_;
  std::vector<std::vector<Value>> est_;  // per simulated process
  std::map<AgreementKey, LAgreementMachine> machines_;
  std::map<int, Value> object_results_;  // my s-agreement result per object
  int cursor_ = -1;
  int cur_ = -1;
  std::optional<AgreementKey> key_;
  std::optional<Value> ret_;
  Phase phase_ = Phase::Scan;
};

std::unique_ptr<ProcessBody> BgProtocol::make_body(World& w, int pid) {
  return std::make_unique<BgSimBody>(this, pid, *w.inputs()[pid],
                                     prog_->processes());
}

std::vector<BlockedEntry> inventory_of(const BgProtocol& proto, const World& w) {
  std::vector<BlockedEntry> out;
  for (const auto& [key, entry] : proto.registry()) {
    if (entry.inst->decided) continue;
    int mid = entry.inst->mid_window_count(w.slots());
    if (mid >= entry.inst->param) {
      out.push_back(BlockedEntry{entry.tag, entry.inst->label, mid});
    }
  }
  return out;
}

}  // namespace

std::vector<BlockedEntry> blocked_inventory(const World& w) {
  const auto* proto = dynamic_cast<const BgProtocol*>(&w.protocol());
  if (!proto) throw std::invalid_argument("blocked_inventory: not a BG world");
  return inventory_of(*proto, w);
}

int BgResult::simulated_decision_count() const {
  int c = 0;
  for (const auto& d : simulated_decisions) c += d.has_value() ? 1 : 0;
  return c;
}

BgResult bg_run(std::shared_ptr<const SimulatedProgram> program, int m,
                std::vector<Value> sim_inputs, Schedule schedule,
                RunOptions options) {
  if (m < 1) throw std::invalid_argument("bg_run: need at least one simulator");
  if (static_cast<int>(sim_inputs.size()) != m) {
    throw std::invalid_argument("bg_run: expected " + std::to_string(m) +
                                " simulator inputs, got " +
                                std::to_string(sim_inputs.size()));
  }
  std::vector<std::optional<Value>> inputs;
  inputs.reserve(sim_inputs.size());
  for (const auto& v : sim_inputs) inputs.emplace_back(v);

  auto proto = std::make_unique<BgProtocol>(program);
  BgProtocol* proto_ptr = proto.get();
  World w(m, std::move(inputs), std::move(schedule), options);
  w.install(std::move(proto));
  RunResult rr = w.run();

  int sim_n = program->processes();
  std::vector<std::optional<Value>> decisions(static_cast<std::size_t>(sim_n));
  // Decisions visible on the board: longest published history per process.
  {
    std::vector<std::vector<Value>> best(static_cast<std::size_t>(sim_n));
    const auto& board = w.snapshot_object(proto_ptr->board());
    for (const auto& cell : board.cells) {
      if (!cell.set) continue;
      auto blob = w.arena().blob(cell.value.payload);
      std::size_t k = 1;
      for (int q = 0; q < sim_n; ++q) {
        auto len = static_cast<std::size_t>(blob[k++]);
        std::vector<Value> h(len);
        for (auto& v : h) {
          v.payload = blob[k++];
          v.origin = static_cast<std::int32_t>(blob[k++]);
        }
        k += 3;
        if (h.size() > best[q].size()) best[q] = std::move(h);
      }
    }
    for (int q = 0; q < sim_n; ++q) {
      if (best[q].empty()) continue;
      auto a = program->next(q, best[q], w.arena());
      if (a.kind == SimAction::Kind::Decide) decisions[q] = a.decision;
    }
  }

  std::vector<std::optional<Value>> returns;
  int crashed = 0;
  for (const auto& slot : w.slots()) {
    returns.push_back(slot.decision);
    crashed += slot.status == ProcessSlot::Status::Crashed ? 1 : 0;
  }
  auto blocked = inventory_of(*proto_ptr, w);

  if (rr.budget_exhausted) {
    std::ostringstream os;
    os << rr.diagnostic << "; blocked agreement instances:";
    if (blocked.empty()) {
      os << " none";
    } else {
      for (const auto& b : blocked) os << ' ' << b.label << '=' << to_string(b.tag);
    }
    rr.diagnostic = os.str();
  }

  return BgResult{std::move(w), rr,       std::move(returns),
                  std::move(decisions),   std::move(blocked), crashed};
}

}  // namespace setcon
