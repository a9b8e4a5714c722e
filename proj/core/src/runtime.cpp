#include "setcon/runtime.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace setcon {

std::string to_string(const Value& v) {
  return std::to_string(v.payload) + "@" + std::to_string(v.origin);
}

std::size_t Arena::BlobHash::operator()(const std::vector<std::int64_t>& b) const {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (std::int64_t x : b) {
    auto u = static_cast<std::uint64_t>(x);
    for (int i = 0; i < 8; ++i) {
      h ^= (u >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  }
  return static_cast<std::size_t>(h);
}

std::int64_t Arena::intern(std::vector<std::int64_t> blob) {
  auto it = index_.find(blob);
  if (it != index_.end()) return it->second;
  auto token = static_cast<std::int64_t>(blobs_.size());
  index_.emplace(blob, token);
  blobs_.push_back(std::move(blob));
  return token;
}

std::span<const std::int64_t> Arena::blob(std::int64_t token) const {
  return blobs_.at(static_cast<std::size_t>(token));
}

std::vector<std::int64_t> encode_snapshot(const SnapVector& cells) {
  std::vector<std::int64_t> out;
  out.reserve(1 + cells.size() * 4);
  out.push_back(static_cast<std::int64_t>(cells.size()));
  for (const auto& c : cells) {
    out.push_back(c.set ? 1 : 0);
    out.push_back(c.value.payload);
    out.push_back(c.value.origin);
    out.push_back(c.aux);
  }
  return out;
}

SnapVector decode_snapshot(std::span<const std::int64_t> blob) {
  SnapVector cells(static_cast<std::size_t>(blob[0]));
  std::size_t k = 1;
  for (auto& c : cells) {
    c.set = blob[k++] != 0;
    c.value.payload = blob[k++];
    c.value.origin = static_cast<std::int32_t>(blob[k++]);
    c.aux = blob[k++];
  }
  return cells;
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Update: return "update";
    case EventKind::Snapshot: return "snapshot";
    case EventKind::ScPropose: return "sc-propose";
    case EventKind::ScReturn: return "sc-return";
    case EventKind::Decide: return "decide";
    case EventKind::Crash: return "crash";
  }
  return "?";
}

std::string_view Trace::label(ObjectId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= object_labels.size()) return "-";
  return object_labels[static_cast<std::size_t>(id)];
}

namespace {

std::string hex16(std::uint64_t x) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[x & 0xf];
    x >>= 4;
  }
  return s;
}

std::uint64_t digest_cells(const SnapVector& cells) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t u) {
    for (int i = 0; i < 8; ++i) {
      h ^= (u >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  for (const auto& c : cells) {
    mix(c.set ? 1 : 0);
    mix(static_cast<std::uint64_t>(c.value.payload));
    mix(static_cast<std::uint64_t>(c.value.origin));
    mix(static_cast<std::uint64_t>(c.aux));
  }
  return h;
}

}  // namespace

void Trace::write_tsv(std::ostream& os) const {
  for (const auto& e : events) {
    os << e.step << '\t' << e.pid << '\t' << to_string(e.kind) << '\t'
       << label(e.object) << '\t';
    switch (e.kind) {
      case EventKind::Update:
        os << to_string(e.value) << '/' << e.aux;
        break;
      case EventKind::Snapshot:
        os << '#' << hex16(static_cast<std::uint64_t>(e.aux));
        break;
      case EventKind::Crash:
        os << '-';
        break;
      default:
        os << to_string(e.value);
        break;
    }
    os << '\n';
  }
}

Schedule Schedule::round_robin() {
  Schedule s;
  s.policy = Policy::RoundRobin;
  return s;
}

Schedule Schedule::seeded(std::uint64_t seed) {
  Schedule s;
  s.policy = Policy::SeededRandom;
  s.seed = seed;
  return s;
}

Schedule Schedule::scripted(std::vector<int> order) {
  Schedule s;
  s.policy = Policy::Scripted;
  s.script = std::move(order);
  return s;
}

ScObject::ScObject(ObjectSpec spec, ScPolicy policy, std::uint64_t seed,
                   bool enforce_capacity)
    : spec_(spec), policy_(policy), enforce_capacity_(enforce_capacity), rng_(seed) {}

bool ScObject::has_returned(int pid) const { return returned_.contains(pid); }

std::optional<Value> ScObject::returned_value(int pid) const {
  auto it = returned_.find(pid);
  if (it == returned_.end()) return std::nullopt;
  return it->second;
}

bool ScObject::in_decided(const Value& v) const {
  return std::find(decided_.begin(), decided_.end(), v) != decided_.end();
}

void ScObject::register_proposal(int pid, Value v) {
  if (returned_.contains(pid)) {
    throw std::logic_error("sc object: process " + std::to_string(pid) +
                           " proposed after returning");
  }
  for (const auto& [p, _] : proposals_) {
    if (p == pid) {
      throw std::logic_error("sc object: process " + std::to_string(pid) +
                             " proposed twice");
    }
  }
  if (std::find(accessors_.begin(), accessors_.end(), pid) == accessors_.end()) {
    if (enforce_capacity_ && static_cast<int>(accessors_.size()) >= spec_.ell) {
      throw std::logic_error("sc object capacity fault: " + to_string(spec_) +
                             " object reached by " +
                             std::to_string(accessors_.size() + 1) +
                             " distinct processes");
    }
    accessors_.push_back(pid);
  }
  proposals_.emplace_back(pid, v);
}

Value ScObject::resolve_return(int pid) {
  if (returned_.contains(pid)) {
    throw std::logic_error("sc object: double return for process " +
                           std::to_string(pid));
  }
  bool proposed = false;
  for (const auto& [p, _] : proposals_) proposed = proposed || p == pid;
  if (!proposed) {
    throw std::logic_error("sc object: return without proposal by process " +
                           std::to_string(pid));
  }

  Value ret;
  if (policy_ == ScPolicy::FirstWins) {
    if (decided_.empty()) decided_.push_back(proposals_.front().second);
    ret = decided_.front();
  } else {
    // Proposal values not yet decided are candidates for new decisions.
    std::vector<Value> fresh;
    for (const auto& [p, v] : proposals_) {
      if (!in_decided(v) && std::find(fresh.begin(), fresh.end(), v) == fresh.end()) {
        fresh.push_back(v);
      }
    }
    bool can_add = static_cast<int>(decided_.size()) < spec_.j && !fresh.empty();
    bool must_add = decided_.empty();
    // Adversarial coin: grow the decided set toward the j bound most of the
    // time, sometimes echo an existing decision.
    bool add = must_add ||
               (can_add && std::uniform_int_distribution<int>(0, 3)(rng_) != 0);
    if (add) {
      std::size_t i = std::uniform_int_distribution<std::size_t>(0, fresh.size() - 1)(rng_);
      decided_.push_back(fresh[i]);
      ret = fresh[i];
    } else {
      std::size_t i =
          std::uniform_int_distribution<std::size_t>(0, decided_.size() - 1)(rng_);
      ret = decided_[i];
    }
  }
  returned_.emplace(pid, ret);
  return ret;
}

Value ScObject::propose(int pid, Value v) {
  register_proposal(pid, v);
  return resolve_return(pid);
}

void Protocol::validate(int n) const {
  if (n < 1) throw std::invalid_argument(name() + ": n must be >= 1");
}

World::World(int n, std::vector<std::optional<Value>> inputs, Schedule schedule,
             RunOptions options)
    : n_(n),
      inputs_(std::move(inputs)),
      schedule_(std::move(schedule)),
      options_(options),
      slots_(static_cast<std::size_t>(std::max(n, 0))),
      bodies_(static_cast<std::size_t>(std::max(n, 0))),
      sched_rng_(schedule_.seed) {
  if (n < 1) throw std::invalid_argument("world: n must be >= 1");
  if (static_cast<int>(inputs_.size()) != n) {
    throw std::invalid_argument("world: expected " + std::to_string(n) +
                                " inputs, got " + std::to_string(inputs_.size()));
  }
  for (int p : schedule_.script) {
    if (p < 0 || p >= n) {
      throw std::invalid_argument("world: scripted schedule references process " +
                                  std::to_string(p));
    }
  }
  for (const auto& cp : schedule_.crashes) {
    if (cp.pid < 0 || cp.pid >= n) {
      throw std::invalid_argument("world: crash point references process " +
                                  std::to_string(cp.pid));
    }
  }
}

void World::install(std::unique_ptr<Protocol> protocol) {
  protocol->validate(n_);
  protocol_ = std::move(protocol);
  protocol_->setup(*this);
  for (int p = 0; p < n_; ++p) {
    if (inputs_[p].has_value()) bodies_[p] = protocol_->make_body(*this, p);
  }
  // Crashes before the first step.
  for (int p = 0; p < n_; ++p) {
    if (inputs_[p].has_value()) apply_crash_points(p);
  }
}

ObjectId World::alloc_snapshot(std::string label, int cells) {
  auto id = static_cast<ObjectId>(objects_.size());
  objects_.push_back(ObjRecord{false, snapshots_.size()});
  snapshots_.push_back(SnapshotObject{label, SnapVector(static_cast<std::size_t>(cells))});
  snapshot_histories_.emplace_back();
  trace_.object_labels.push_back(std::move(label));
  return id;
}

ObjectId World::alloc_sc(std::string label, ObjectSpec spec) {
  auto id = static_cast<ObjectId>(objects_.size());
  objects_.push_back(ObjRecord{true, scs_.size()});
  // Stable per-object stream: the schedule seed must not perturb object
  // decisions and vice versa.
  std::uint64_t seed = options_.object_seed * 0x9e3779b97f4a7c15ull +
                       static_cast<std::uint64_t>(id) + 1;
  scs_.emplace_back(spec, options_.sc_policy, seed, options_.enforce_capacity);
  trace_.object_labels.push_back(std::move(label));
  return id;
}

bool World::is_sc_object(ObjectId id) const {
  return objects_.at(static_cast<std::size_t>(id)).is_sc;
}

const ScObject& World::sc_object(ObjectId id) const {
  const auto& rec = objects_.at(static_cast<std::size_t>(id));
  if (!rec.is_sc) throw std::logic_error("not a set-consensus object");
  return scs_[rec.index];
}

const SnapshotObject& World::snapshot_object(ObjectId id) const {
  const auto& rec = objects_.at(static_cast<std::size_t>(id));
  if (rec.is_sc) throw std::logic_error("not a snapshot object");
  return snapshots_[rec.index];
}

std::vector<ObjectId> World::object_ids() const {
  std::vector<ObjectId> ids(objects_.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<ObjectId>(i);
  return ids;
}

const std::vector<std::pair<std::int64_t, SnapVector>>& World::snapshot_history(
    ObjectId id) const {
  const auto& rec = objects_.at(static_cast<std::size_t>(id));
  if (rec.is_sc) throw std::logic_error("not a snapshot object");
  return snapshot_histories_[rec.index];
}

std::vector<std::int64_t> World::body_state_key(int pid) const {
  const auto& body = bodies_.at(static_cast<std::size_t>(pid));
  if (!body) return {};
  return body->state_key(*this);
}

bool World::quiescent() const {
  for (int p = 0; p < n_; ++p) {
    if (!inputs_[p].has_value()) continue;
    auto s = slots_[p].status;
    if (s != ProcessSlot::Status::Decided && s != ProcessSlot::Status::Crashed)
      return false;
  }
  return true;
}

int World::pick_next() {
  auto runnable = [this](int p) {
    if (!inputs_[p].has_value()) return false;
    auto s = slots_[p].status;
    return s == ProcessSlot::Status::NotStarted || s == ProcessSlot::Status::Running;
  };

  if (schedule_.policy == Schedule::Policy::Scripted) {
    while (script_pos_ < schedule_.script.size()) {
      int p = schedule_.script[script_pos_++];
      if (runnable(p)) return p;
    }
    // Script exhausted: continue round-robin.
  }
  if (schedule_.policy == Schedule::Policy::SeededRandom) {
    std::vector<int> cand;
    cand.reserve(static_cast<std::size_t>(n_));
    for (int p = 0; p < n_; ++p) {
      if (runnable(p)) cand.push_back(p);
    }
    if (cand.empty()) return -1;
    std::size_t i =
        std::uniform_int_distribution<std::size_t>(0, cand.size() - 1)(sched_rng_);
    return cand[i];
  }
  for (int i = 0; i < n_; ++i) {
    int p = (rr_cursor_ + i) % n_;
    if (runnable(p)) {
      rr_cursor_ = (p + 1) % n_;
      return p;
    }
  }
  return -1;
}

void World::record(EventKind kind, int pid, ObjectId obj, Value v, std::int64_t aux) {
  trace_.events.push_back(TraceEvent{static_cast<std::int64_t>(trace_.events.size()),
                                     pid, kind, obj, v, aux});
}

void World::crash(int pid) {
  slots_[pid].status = ProcessSlot::Status::Crashed;
  record(EventKind::Crash, pid, -1, Value{}, 0);
}

void World::apply_crash_points(int pid) {
  auto& slot = slots_[pid];
  if (slot.status == ProcessSlot::Status::Decided ||
      slot.status == ProcessSlot::Status::Crashed)
    return;
  for (const auto& cp : schedule_.crashes) {
    if (cp.pid == pid && cp.after_steps == slot.step_count) {
      crash(pid);
      return;
    }
  }
}

StepOutcome World::step() {
  if (!protocol_) throw std::logic_error("world: no protocol installed");
  if (quiescent() || steps_taken_ >= options_.step_budget)
    return StepOutcome::Quiescent;
  int pid = pick_next();
  if (pid < 0) return StepOutcome::Quiescent;

  auto& slot = slots_[pid];
  if (slot.status == ProcessSlot::Status::NotStarted)
    slot.status = ProcessSlot::Status::Running;
  StepCtx ctx(*this, pid);
  bodies_[pid]->step(ctx);
  if (ctx.ops_ != 1) {
    throw std::logic_error("protocol body for process " + std::to_string(pid) +
                           " performed " + std::to_string(ctx.ops_) +
                           " operations in one step");
  }
  slot.step_count += 1;
  steps_taken_ += 1;
  apply_crash_points(pid);
  return StepOutcome::Progressed;
}

RunResult World::run() {
  RunResult r;
  while (!quiescent() && steps_taken_ < options_.step_budget) step();
  r.steps = steps_taken_;
  r.quiescent = quiescent();
  if (!r.quiescent) {
    r.budget_exhausted = true;
    std::ostringstream os;
    os << "potential non-termination: budget of " << options_.step_budget
       << " events exhausted; undecided correct processes:";
    for (int p = 0; p < n_; ++p) {
      if (inputs_[p].has_value() && slots_[p].status != ProcessSlot::Status::Decided &&
          slots_[p].status != ProcessSlot::Status::Crashed) {
        os << " p" << p;
      }
    }
    r.diagnostic = os.str();
  }
  return r;
}

const Value& StepCtx::input() const {
  const auto& in = w_.inputs_[static_cast<std::size_t>(pid_)];
  if (!in.has_value()) throw std::logic_error("non-participating process has no input");
  return *in;
}

int StepCtx::world_size() const { return w_.n_; }

Arena& StepCtx::arena() { return w_.arena_; }

namespace {

void bump(int& ops) {
  if (ops >= 1) {
    throw std::logic_error("protocol body attempted a second operation in one step");
  }
  ops += 1;
}

}  // namespace

void StepCtx::update(ObjectId obj, Value v, std::int64_t aux) {
  bump(ops_);
  const auto& rec = w_.objects_.at(static_cast<std::size_t>(obj));
  if (rec.is_sc) throw std::logic_error("update on a set-consensus object");
  auto& cell = w_.snapshots_[rec.index].cells.at(static_cast<std::size_t>(pid_));
  cell.set = true;
  cell.value = v;
  cell.aux = aux;
  cell.version += 1;
  w_.record(EventKind::Update, pid_, obj, v, aux);
}

SnapVector StepCtx::snapshot(ObjectId obj) {
  bump(ops_);
  const auto& rec = w_.objects_.at(static_cast<std::size_t>(obj));
  if (rec.is_sc) throw std::logic_error("snapshot of a set-consensus object");
  SnapVector copy = w_.snapshots_[rec.index].cells;
  auto digest = static_cast<std::int64_t>(digest_cells(copy));
  w_.record(EventKind::Snapshot, pid_, obj, Value{}, digest);
  if (w_.options_.record_snapshots) {
    w_.snapshot_histories_[rec.index].emplace_back(
        static_cast<std::int64_t>(w_.trace_.events.size()) - 1, copy);
  }
  return copy;
}

void StepCtx::sc_propose(ObjectId obj, Value v) {
  bump(ops_);
  const auto& rec = w_.objects_.at(static_cast<std::size_t>(obj));
  if (!rec.is_sc) throw std::logic_error("sc_propose on a snapshot object");
  w_.scs_[rec.index].register_proposal(pid_, v);
  w_.record(EventKind::ScPropose, pid_, obj, v, 0);
}

Value StepCtx::sc_return(ObjectId obj) {
  bump(ops_);
  const auto& rec = w_.objects_.at(static_cast<std::size_t>(obj));
  if (!rec.is_sc) throw std::logic_error("sc_return on a snapshot object");
  Value v = w_.scs_[rec.index].resolve_return(pid_);
  w_.record(EventKind::ScReturn, pid_, obj, v, 0);
  return v;
}

void StepCtx::decide(Value v) {
  bump(ops_);
  auto& slot = w_.slots_[static_cast<std::size_t>(pid_)];
  if (slot.status == ProcessSlot::Status::Decided) {
    throw std::logic_error("process " + std::to_string(pid_) + " decided twice");
  }
  slot.status = ProcessSlot::Status::Decided;
  slot.decision = v;
  w_.record(EventKind::Decide, pid_, -1, v, 0);
}

World new_world(int n, std::unique_ptr<Protocol> protocol,
                std::vector<std::optional<Value>> inputs, Schedule schedule,
                RunOptions options) {
  World w(n, std::move(inputs), std::move(schedule), options);
  w.install(std::move(protocol));
  return w;
}

bool CapacityReport::ok() const {
  return std::none_of(rows.begin(), rows.end(),
                      [](const Row& r) { return r.violation; });
}

std::vector<CapacityReport::Row> CapacityReport::violations() const {
  std::vector<Row> out;
  for (const auto& r : rows) {
    if (r.violation) out.push_back(r);
  }
  return out;
}

CapacityReport record_and_validate_capacity(const World& w) {
  std::map<ObjectId, std::set<int>> accessors;
  for (const auto& e : w.trace().events) {
    if (e.kind == EventKind::ScPropose) accessors[e.object].insert(e.pid);
  }
  CapacityReport rep;
  for (const auto& [obj, pids] : accessors) {
    const auto& sc = w.sc_object(obj);
    CapacityReport::Row row;
    row.object = obj;
    row.label = std::string(w.trace().label(obj));
    row.spec = sc.spec();
    row.distinct_accessors = static_cast<int>(pids.size());
    row.violation = row.distinct_accessors > sc.spec().ell;
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

std::vector<std::int64_t> distinct_decisions(const Trace& t) {
  std::vector<std::int64_t> out;
  for (const auto& e : t.events) {
    if (e.kind == EventKind::Decide &&
        std::find(out.begin(), out.end(), e.value.payload) == out.end()) {
      out.push_back(e.value.payload);
    }
  }
  return out;
}

}  // namespace setcon
