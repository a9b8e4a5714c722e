#include "setcon/verify.hpp"

#include <algorithm>
#include <map>

namespace setcon {

void CheckReport::fail(std::string witness) {
  pass = false;
  witnesses.push_back(std::move(witness));
}

void CheckReport::stat(std::string key, std::int64_t v) {
  stats.emplace_back(std::move(key), v);
}

std::string CheckReport::tsv() const {
  std::string out = name;
  out += '\t';
  out += pass ? "pass" : "fail";
  for (const auto& [k, v] : stats) {
    out += '\t';
    out += k;
    out += '=';
    out += std::to_string(v);
  }
  for (const auto& w : witnesses) {
    out += "\twitness=";
    out += w;
  }
  return out;
}

namespace {

struct DecisionScan {
  std::map<int, Value> by_pid;          // decide per process (at most one)
  std::vector<std::int64_t> distinct;   // payloads, first-seen order
  std::set<int> crashed;
  std::set<int> stepped;                // processes with any event
};

DecisionScan scan(const Trace& trace, CheckReport& rep) {
  DecisionScan s;
  for (const auto& e : trace.events) {
    if (e.pid >= 0 && e.kind != EventKind::Crash) s.stepped.insert(e.pid);
    switch (e.kind) {
      case EventKind::Decide:
        if (s.by_pid.contains(e.pid)) {
          rep.fail("p" + std::to_string(e.pid) + " decided twice");
        }
        s.by_pid.emplace(e.pid, e.value);
        if (std::find(s.distinct.begin(), s.distinct.end(), e.value.payload) ==
            s.distinct.end()) {
          s.distinct.push_back(e.value.payload);
        }
        break;
      case EventKind::Crash:
        s.crashed.insert(e.pid);
        break;
      default:
        break;
    }
  }
  // Crash realism: nothing after a crash.
  std::set<int> dead;
  for (const auto& e : trace.events) {
    if (e.pid >= 0 && dead.contains(e.pid)) {
      rep.fail("p" + std::to_string(e.pid) + " has events after its crash");
    }
    if (e.kind == EventKind::Crash) dead.insert(e.pid);
  }
  return s;
}

}  // namespace

CheckReport check_k_set_consensus(const std::vector<std::optional<Value>>& inputs,
                                  const Trace& trace, int k) {
  CheckReport rep;
  rep.name = "kset:" + std::to_string(k);
  DecisionScan s = scan(trace, rep);

  std::set<std::int64_t> allowed;
  for (const auto& in : inputs) {
    if (in) allowed.insert(in->payload);
  }
  for (const auto& [pid, v] : s.by_pid) {
    if (!allowed.contains(v.payload)) {
      rep.fail("p" + std::to_string(pid) + " decided non-input value " + to_string(v));
    }
  }
  if (static_cast<int>(s.distinct.size()) > k) {
    rep.fail(std::to_string(s.distinct.size()) + " distinct decisions exceed k=" +
             std::to_string(k));
  }
  for (std::size_t p = 0; p < inputs.size(); ++p) {
    int pid = static_cast<int>(p);
    if (inputs[p] && !s.crashed.contains(pid) && !s.by_pid.contains(pid)) {
      rep.fail("participating p" + std::to_string(pid) + " never decided");
    }
  }
  rep.stat("distinct", static_cast<std::int64_t>(s.distinct.size()));
  rep.stat("deciders", static_cast<std::int64_t>(s.by_pid.size()));
  rep.stat("crashes", static_cast<std::int64_t>(s.crashed.size()));
  return rep;
}

CheckReport check_l_agreement(const Trace& trace, int l, std::string_view a_label,
                              std::string_view b_label) {
  CheckReport rep;
  rep.name = "lagree:" + std::to_string(l);
  DecisionScan s = scan(trace, rep);

  std::set<std::int64_t> proposed;
  std::map<int, std::int64_t> a_write;  // pid -> event index
  std::set<int> b_written;
  for (const auto& e : trace.events) {
    if (e.kind == EventKind::Update && trace.label(e.object) == a_label) {
      proposed.insert(e.value.payload);
      a_write.emplace(e.pid, e.step);
    }
    if (e.kind == EventKind::Update && trace.label(e.object) == b_label) {
      b_written.insert(e.pid);
    }
  }

  for (const auto& [pid, v] : s.by_pid) {
    if (!proposed.contains(v.payload)) {
      rep.fail("p" + std::to_string(pid) + " decided unproposed value " + to_string(v));
    }
  }
  if (static_cast<int>(s.distinct.size()) > l) {
    rep.fail(std::to_string(s.distinct.size()) + " distinct decisions exceed l=" +
             std::to_string(l));
  }

  // Stalled mid-protocol: crashed after the A-update, before the B-update.
  int stalled = 0;
  for (int pid : s.crashed) {
    if (a_write.contains(pid) && !b_written.contains(pid)) ++stalled;
  }
  if (stalled < l) {
    for (int pid : s.stepped) {
      if (!s.crashed.contains(pid) && !s.by_pid.contains(pid)) {
        rep.fail("correct participant p" + std::to_string(pid) +
                 " undecided with only " + std::to_string(stalled) + " stalls");
      }
    }
  }
  rep.stat("distinct", static_cast<std::int64_t>(s.distinct.size()));
  rep.stat("deciders", static_cast<std::int64_t>(s.by_pid.size()));
  rep.stat("crashes", static_cast<std::int64_t>(s.crashed.size()));
  rep.stat("stalled", stalled);
  return rep;
}

CheckReport check_adaptive_optimality(const Collection& c, const Trace& trace,
                                      const std::set<int>& participants) {
  CheckReport rep;
  rep.name = "adaptive";
  DecisionScan s = scan(trace, rep);

  int m = static_cast<int>(participants.size());
  int bound = m >= 1 ? al(c, m) : 0;
  if (static_cast<int>(s.distinct.size()) > bound) {
    rep.fail(std::to_string(s.distinct.size()) +
             " distinct decisions exceed the participation bound " +
             std::to_string(bound));
  }
  for (int pid : participants) {
    if (!s.crashed.contains(pid) && !s.by_pid.contains(pid)) {
      rep.fail("correct participant p" + std::to_string(pid) + " never decided");
    }
  }
  rep.stat("participants", m);
  rep.stat("bound", bound);
  rep.stat("distinct", static_cast<std::int64_t>(s.distinct.size()));
  rep.stat("crashes", static_cast<std::int64_t>(s.crashed.size()));
  return rep;
}

CheckReport check_bg_progress(const Collection& c, int n, const BgResult& result,
                              int crashed_simulators) {
  CheckReport rep;
  rep.name = "bg-progress";

  int level = al(c, n);
  int decided = result.simulated_decision_count();
  if (crashed_simulators < level && decided < 1) {
    rep.fail("no simulated decision despite " + std::to_string(crashed_simulators) +
             " crashes < AL=" + std::to_string(level));
  }
  int blocked_weight = 0;
  for (const auto& b : result.blocked) blocked_weight += b.tag.j;
  if (blocked_weight > crashed_simulators) {
    rep.fail("blocked inventory weighs " + std::to_string(blocked_weight) +
             " with only " + std::to_string(crashed_simulators) + " crashes");
  }
  rep.stat("al", level);
  rep.stat("crashes", crashed_simulators);
  rep.stat("simulated_decisions", decided);
  rep.stat("blocked_weight", blocked_weight);
  rep.stat("blocked_instances", static_cast<std::int64_t>(result.blocked.size()));
  return rep;
}

}  // namespace setcon
