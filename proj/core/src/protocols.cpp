#include "setcon/protocols.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace setcon {

// ---------------------------------------------------------------------------
// l-agreement
// ---------------------------------------------------------------------------

int LAgreementInstance::mid_window_count(const std::vector<ProcessSlot>& slots) const {
  int c = 0;
  for (std::size_t p = 0; p < marks.size(); ++p) {
    if (marks[p].a_written && !marks[p].b_written &&
        slots[p].status == ProcessSlot::Status::Crashed) {
      ++c;
    }
  }
  return c;
}

LAgreementInstance make_lagreement_instance(World& w, std::string label, int param) {
  if (param < 1) throw std::invalid_argument("l-agreement: parameter must be >= 1");
  LAgreementInstance inst;
  inst.param = param;
  inst.label = label;
  std::string prefix = label.empty() ? "" : label + ".";
  inst.a = w.alloc_snapshot(prefix + "A", w.size());
  inst.b = w.alloc_snapshot(prefix + "B", w.size());
  inst.marks.resize(static_cast<std::size_t>(w.size()));
  return inst;
}

LAgreementMachine::LAgreementMachine(LAgreementInstance* inst, Value proposal)
    : inst_(inst), proposal_(proposal) {}

const Value& LAgreementMachine::result() const {
  if (phase_ != Phase::Done) throw std::logic_error("l-agreement: no result yet");
  return result_;
}

LAgreementMachine::Outcome LAgreementMachine::advance(StepCtx& ctx) {
  switch (phase_) {
    case Phase::WriteA:
      ctx.update(inst_->a, proposal_);
      inst_->marks[ctx.pid()].a_written = true;
      phase_ = Phase::ScanA;
      return Outcome::Progress;

    case Phase::ScanA:
      u_ = ctx.snapshot(inst_->a);
      phase_ = Phase::WriteB;
      return Outcome::Progress;

    case Phase::WriteB: {
      auto token = ctx.arena().intern(encode_snapshot(u_));
      ctx.update(inst_->b, Value{token, ctx.pid()});
      inst_->marks[ctx.pid()].b_written = true;
      phase_ = Phase::ScanB;
      return Outcome::Progress;
    }

    case Phase::ScanB: {
      SnapVector w = ctx.snapshot(inst_->b);
      int lagging = 0;  // participants seen in A but absent from B
      for (std::size_t q = 0; q < u_.size(); ++q) {
        if (u_[q].set && !w[q].set) ++lagging;
      }
      if (lagging > inst_->param - 1) return Outcome::Parked;

      // Decide: minimum value of the smallest-size snapshot written to B.
      std::int64_t best_token = -1;
      std::size_t best_size = 0;
      for (const auto& cell : w) {
        if (!cell.set) continue;
        auto decoded = decode_snapshot(ctx.arena().blob(cell.value.payload));
        std::size_t sz = 0;
        for (const auto& c : decoded) sz += c.set ? 1 : 0;
        if (best_token < 0 || sz < best_size) {
          best_token = cell.value.payload;
          best_size = sz;
        } else if (sz == best_size && cell.value.payload != best_token) {
          // Snapshots of A are containment-ordered; equal sizes must be the
          // same snapshot and interning makes that token equality.
          throw std::logic_error("l-agreement: distinct snapshots of equal size");
        }
      }
      if (best_token < 0) throw std::logic_error("l-agreement: empty B after exit test");
      auto chosen = decode_snapshot(ctx.arena().blob(best_token));
      bool have = false;
      Value min{};
      for (const auto& c : chosen) {
        if (c.set && (!have || c.value < min)) {
          min = c.value;
          have = true;
        }
      }
      if (!have) throw std::logic_error("l-agreement: chosen snapshot is empty");
      result_ = min;
      phase_ = Phase::Done;
      inst_->marks[ctx.pid()].done = true;
      inst_->decided = true;
      return Outcome::Done;
    }

    case Phase::Done:
      throw std::logic_error("l-agreement: advance past completion");
  }
  throw std::logic_error("l-agreement: bad phase");
}

namespace {

void encode_cells_key(const SnapVector& cells, std::vector<std::int64_t>& key) {
  key.push_back(static_cast<std::int64_t>(cells.size()));
  for (const auto& c : cells) {
    key.push_back(c.set ? 1 : 0);
    key.push_back(c.value.payload);
    key.push_back(c.value.origin);
    key.push_back(c.aux);
  }
}

class LAgreementBody : public ProcessBody {
 public:
  LAgreementBody(LAgreementInstance* inst, Value input)
      : machine_(inst, input), input_(input) {}

  void step(StepCtx& ctx) override {
    if (!machine_.done()) {
      machine_.advance(ctx);
      return;
    }
    ctx.decide(machine_.result());
  }

  std::vector<std::int64_t> state_key(const World&) const override {
    std::vector<std::int64_t> key{static_cast<std::int64_t>(machine_.phase()),
                                  input_.payload, input_.origin};
    encode_cells_key(machine_.scanned_a(), key);
    if (machine_.done()) {
      key.push_back(machine_.result().payload);
      key.push_back(machine_.result().origin);
    }
    return key;
  }

 private:
  LAgreementMachine machine_;
  Value input_;
};

}  // namespace

LAgreementProtocol::LAgreementProtocol(int l) : l_(l) {
  if (l < 1) throw std::invalid_argument("l-agreement: l must be >= 1");
}

std::string LAgreementProtocol::name() const {
  return "l-agreement(l=" + std::to_string(l_) + ")";
}

void LAgreementProtocol::setup(World& w) {
  inst_ = make_lagreement_instance(w, "", l_);  // objects "A" and "B"
}

std::unique_ptr<ProcessBody> LAgreementProtocol::make_body(World& w, int pid) {
  return std::make_unique<LAgreementBody>(&inst_, *w.inputs()[pid]);
}

std::pair<Value, std::int64_t> tie_break_adopt(const SnapVector& r) {
  bool any = false;
  std::int64_t k = 0;
  for (const auto& c : r) {
    if (c.set && (!any || c.aux > k)) {
      k = c.aux;
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("tie_break_adopt: all positions empty");
  Value v{};
  bool have = false;
  for (const auto& c : r) {
    if (c.set && c.aux == k && (!have || c.value < v)) {
      v = c.value;
      have = true;
    }
  }
  return {v, k};
}

// ---------------------------------------------------------------------------
// static protocol
// ---------------------------------------------------------------------------

int StaticLayout::group_of(int index) const {
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (index >= groups[g].first && index < groups[g].first + groups[g].count)
      return static_cast<int>(g);
  }
  throw std::out_of_range("static layout: no group for index " + std::to_string(index));
}

int StaticLayout::position_in_group(int index) const {
  return index - groups[group_of(index)].first;
}

bool StaticLayout::trivial(int group) const {
  return groups[group].species == ObjectSpec{1, 1};
}

StaticLayout build_static(const Witness& w, int n) {
  if (n < 1) throw std::invalid_argument("build_static: n must be >= 1");
  StaticLayout layout;
  layout.n = n;
  layout.w = w;
  int next = 0;
  for (const auto& part : w.parts) {
    if (next >= n) break;
    StaticLayout::Group g;
    g.species = part;
    g.first = next;
    g.count = std::min(part.ell, n - next);
    next += g.count;
    layout.groups.push_back(g);
  }
  if (next < n) {
    throw std::invalid_argument("build_static: witness covers only " +
                                std::to_string(next) + " of " + std::to_string(n) +
                                " processes");
  }
  return layout;
}

StaticLayout build_static(const Collection& c, int n) {
  return build_static(witness(c, n), n);
}

namespace {

class StaticBody : public ProcessBody {
 public:
  StaticBody(const StaticLayout* layout, const StaticProtocol* proto, int pid, Value input)
      : layout_(layout), proto_(proto), pid_(pid), input_(input) {}

  void step(StepCtx& ctx) override {
    int g = layout_->group_of(pid_);
    if (layout_->trivial(g)) {
      ctx.decide(input_);  // a (1,1) group member keeps its own value
      return;
    }
    switch (phase_) {
      case Phase::Propose:
        ctx.sc_propose(proto_->group_object(g), input_);
        phase_ = Phase::Fetch;
        return;
      case Phase::Fetch:
        out_ = ctx.sc_return(proto_->group_object(g));
        phase_ = Phase::Decide;
        return;
      case Phase::Decide:
        ctx.decide(out_);
        return;
    }
  }

  std::vector<std::int64_t> state_key(const World&) const override {
    return {static_cast<std::int64_t>(phase_), input_.payload, input_.origin,
            out_.payload, out_.origin};
  }

 private:
  enum class Phase { Propose, Fetch, Decide };
  const StaticLayout* layout_;
  const StaticProtocol* proto_;
  int pid_;
  Value input_;
  Value out_{};
  Phase phase_ = Phase::Propose;
};

}  // namespace

StaticProtocol::StaticProtocol(Collection c, int n) : layout_(build_static(c, n)) {}

StaticProtocol::StaticProtocol(StaticLayout layout) : layout_(std::move(layout)) {}

std::string StaticProtocol::name() const {
  return "static(n=" + std::to_string(layout_.n) + ")";
}

void StaticProtocol::validate(int n) const {
  Protocol::validate(n);
  if (n != layout_.n) {
    throw std::invalid_argument("static protocol built for n = " +
                                std::to_string(layout_.n) + ", world has " +
                                std::to_string(n));
  }
}

void StaticProtocol::setup(World& w) {
  objects_.assign(layout_.groups.size(), -1);
  for (std::size_t g = 0; g < layout_.groups.size(); ++g) {
    if (layout_.trivial(static_cast<int>(g))) continue;
    objects_[g] = w.alloc_sc("st.g" + std::to_string(g), layout_.groups[g].species);
  }
}

std::unique_ptr<ProcessBody> StaticProtocol::make_body(World& w, int pid) {
  return std::make_unique<StaticBody>(&layout_, this, pid, *w.inputs()[pid]);
}

// ---------------------------------------------------------------------------
// adaptive protocol
// ---------------------------------------------------------------------------

AdaptiveProtocol::AdaptiveProtocol(Collection c, int n) : c_(std::move(c)), n_(n) {
  if (n < 1) throw std::invalid_argument("adaptive: n must be >= 1");
}

std::string AdaptiveProtocol::name() const { return "adaptive"; }

void AdaptiveProtocol::setup(World& w) { r_ = w.alloc_snapshot("R", w.size()); }

const AdaptiveProtocol::StInstance& AdaptiveProtocol::st_instance(World& w, int m) {
  auto it = st_.find(m);
  if (it != st_.end()) return it->second;
  StInstance inst;
  inst.layout = build_static(c_, m);
  inst.objects.assign(inst.layout.groups.size(), -1);
  for (std::size_t g = 0; g < inst.layout.groups.size(); ++g) {
    if (!inst.layout.trivial(static_cast<int>(g))) {
      inst.objects[g] = w.alloc_sc(
          "st" + std::to_string(m) + ".g" + std::to_string(g),
          inst.layout.groups[g].species);
    }
  }
  return st_.emplace(m, std::move(inst)).first->second;
}

namespace {

class AdaptiveBody : public ProcessBody {
 public:
  AdaptiveBody(AdaptiveProtocol* proto, int pid, Value input)
      : proto_(proto), pid_(pid), input_(input) {}

  void step(StepCtx& ctx) override {
    switch (phase_) {
      case Phase::WriteInit:
        ctx.update(proto_->r_object(), input_, 0);
        phase_ = Phase::ScanInit;
        return;

      case Phase::ScanInit:
        r_ = ctx.snapshot(proto_->r_object());
        enter_iteration(ctx);
        return;

      case Phase::ChildPropose:
        ctx.sc_propose(child_object_, adopted_);
        phase_ = Phase::ChildFetch;
        return;

      case Phase::ChildFetch:
        prop_ = ctx.sc_return(child_object_);
        phase_ = Phase::WriteProp;
        return;

      case Phase::WriteProp:
        ctx.update(proto_->r_object(), prop_,
                   static_cast<std::int64_t>(parts_.size()));
        phase_ = Phase::Rescan;
        return;

      case Phase::Rescan: {
        r_ = ctx.snapshot(proto_->r_object());
        auto now = participants(r_);
        if (now == parts_) {
          phase_ = Phase::DecideStep;
        } else {
          enter_iteration(ctx);
        }
        return;
      }

      case Phase::DecideStep:
        ctx.decide(prop_);
        return;
    }
  }

  std::vector<std::int64_t> state_key(const World& w) const override {
    std::vector<std::int64_t> key{static_cast<std::int64_t>(phase_), input_.payload,
                                  input_.origin, adopted_.payload, adopted_.origin,
                                  prop_.payload, prop_.origin};
    key.push_back(static_cast<std::int64_t>(parts_.size()));
    for (int p : parts_) key.push_back(p);
    // The child object by canonical label, never by allocation order.
    if (child_object_ >= 0) {
      for (char ch : w.trace().label(child_object_)) key.push_back(ch);
    }
    key.push_back(-1);
    encode_cells_key(r_, key);
    return key;
  }

 private:
  enum class Phase {
    WriteInit,
    ScanInit,
    ChildPropose,
    ChildFetch,
    WriteProp,
    Rescan,
    DecideStep
  };

  static std::vector<int> participants(const SnapVector& r) {
    std::vector<int> out;
    for (std::size_t q = 0; q < r.size(); ++q) {
      if (r[q].set) out.push_back(static_cast<int>(q));
    }
    return out;
  }

  // Start the loop body from the freshest snapshot in r_: fix parts/rank,
  // adopt the most-traveled value, and enter this size's static instance.
  void enter_iteration(StepCtx& ctx) {
    parts_ = participants(r_);
    auto rank_it = std::find(parts_.begin(), parts_.end(), pid_);
    if (rank_it == parts_.end()) {
      throw std::logic_error("adaptive: own write missing from snapshot");
    }
    int position = static_cast<int>(rank_it - parts_.begin());  // rank - 1
    auto [v, k] = tie_break_adopt(r_);
    adopted_ = v;
    (void)k;

    const auto& inst = proto_->st_instance(ctx.world(), static_cast<int>(parts_.size()));
    int g = inst.layout.group_of(position);
    if (inst.layout.trivial(g)) {
      // Singleton position: the static algorithm returns its own proposal.
      prop_ = adopted_;
      phase_ = Phase::WriteProp;
    } else {
      child_object_ = inst.objects[g];
      phase_ = Phase::ChildPropose;
    }
  }

  AdaptiveProtocol* proto_;
  int pid_;
  Value input_;
  SnapVector r_;
  std::vector<int> parts_;
  Value adopted_{};
  Value prop_{};
  ObjectId child_object_ = -1;
  Phase phase_ = Phase::WriteInit;
};

}  // namespace

std::unique_ptr<ProcessBody> AdaptiveProtocol::make_body(World& w, int pid) {
  return std::make_unique<AdaptiveBody>(this, pid, *w.inputs()[pid]);
}

// ---------------------------------------------------------------------------
// descriptors
// ---------------------------------------------------------------------------

ProtocolSpec ProtocolSpec::parse(std::string_view descriptor,
                                 const std::optional<Collection>& collection) {
  ProtocolSpec spec;
  spec.collection = collection;
  if (descriptor == "static") {
    spec.kind = Kind::Static;
  } else if (descriptor == "adaptive") {
    spec.kind = Kind::Adaptive;
  } else if (descriptor.starts_with("l-agreement")) {
    spec.kind = Kind::LAgreement;
    std::string_view rest = descriptor.substr(std::string_view("l-agreement").size());
    std::string_view num;
    if (rest.starts_with(":")) {
      num = rest.substr(1);
    } else if (rest.starts_with("(l=") && rest.ends_with(")")) {
      num = rest.substr(3, rest.size() - 4);
    } else {
      throw std::invalid_argument("bad protocol descriptor \"" +
                                  std::string(descriptor) +
                                  "\": use l-agreement:K or l-agreement(l=K)");
    }
    int l = 0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), l);
    if (ec != std::errc{} || ptr != num.data() + num.size() || l < 1) {
      throw std::invalid_argument("bad l-agreement parameter \"" + std::string(num) +
                                  "\"");
    }
    spec.l = l;
  } else {
    throw std::invalid_argument("unknown protocol \"" + std::string(descriptor) +
                                "\" (expected static, adaptive, or l-agreement:K)");
  }
  if (spec.kind != Kind::LAgreement && !spec.collection.has_value()) {
    throw std::invalid_argument(std::string(descriptor) +
                                " protocol requires a collection");
  }
  return spec;
}

std::unique_ptr<Protocol> make_protocol(const ProtocolSpec& spec, int n) {
  switch (spec.kind) {
    case ProtocolSpec::Kind::Static:
      return std::make_unique<StaticProtocol>(*spec.collection, n);
    case ProtocolSpec::Kind::Adaptive:
      return std::make_unique<AdaptiveProtocol>(*spec.collection, n);
    case ProtocolSpec::Kind::LAgreement:
      return std::make_unique<LAgreementProtocol>(spec.l);
  }
  throw std::logic_error("bad protocol kind");
}

}  // namespace setcon
