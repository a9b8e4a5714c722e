#include "setcon/runconfig.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>

namespace setcon {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t next = s.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(s.substr(pos));
      break;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

std::int64_t to_int(const std::string& tok, const std::string& what) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
    throw std::invalid_argument("bad " + what + " \"" + tok + "\"");
  }
  return v;
}

}  // namespace

std::int64_t parse_input_value(const std::string& tok) {
  if (tok.size() == 1 && tok[0] >= 'a' && tok[0] <= 'z') return tok[0] - 'a' + 1;
  return to_int(tok, "input value");
}

std::vector<std::optional<Value>> parse_inputs(const std::string& text, int n) {
  std::vector<std::optional<Value>> inputs(static_cast<std::size_t>(n));
  if (text.empty()) {
    // Distinct integers: the worst case for distinct-decision counting.
    for (int p = 0; p < n; ++p) inputs[p] = Value{p + 1, p};
    return inputs;
  }
  if (auto dots = text.find(".."); dots != std::string::npos) {
    std::int64_t lo = to_int(text.substr(0, dots), "input range");
    std::int64_t hi = to_int(text.substr(dots + 2), "input range");
    if (hi - lo + 1 != n) {
      throw std::invalid_argument("input range " + text + " does not cover " +
                                  std::to_string(n) + " processes");
    }
    for (int p = 0; p < n; ++p) inputs[p] = Value{lo + p, p};
    return inputs;
  }
  auto toks = split(text, ',');
  bool sparse = text.find('@') != std::string::npos;
  if (sparse) {
    for (const auto& t : toks) {
      auto at = t.find('@');
      if (at == std::string::npos) {
        throw std::invalid_argument("mixed sparse/dense inputs in \"" + text + "\"");
      }
      std::string ptok = t.substr(at + 1);
      if (!ptok.empty() && ptok[0] == 'p') ptok = ptok.substr(1);
      auto pid = to_int(ptok, "input process");
      if (pid < 0 || pid >= n) {
        throw std::invalid_argument("input process out of range in \"" + t + "\"");
      }
      inputs[static_cast<std::size_t>(pid)] =
          Value{parse_input_value(t.substr(0, at)), static_cast<std::int32_t>(pid)};
    }
    return inputs;
  }
  if (static_cast<int>(toks.size()) != n) {
    throw std::invalid_argument("expected " + std::to_string(n) + " inputs, got " +
                                std::to_string(toks.size()));
  }
  for (int p = 0; p < n; ++p) inputs[p] = Value{parse_input_value(toks[p]), p};
  return inputs;
}

std::vector<CrashPoint> parse_crashes(const std::string& text) {
  std::vector<CrashPoint> out;
  if (text.empty()) return out;
  for (const auto& t : split(text, ',')) {
    auto colon = t.find(':');
    if (colon == std::string::npos) {
      throw std::invalid_argument("bad crash point \"" + t + "\": use proc:step");
    }
    CrashPoint cp;
    cp.pid = static_cast<int>(to_int(t.substr(0, colon), "crash process"));
    cp.after_steps = static_cast<int>(to_int(t.substr(colon + 1), "crash step"));
    if (cp.pid < 0 || cp.after_steps < 0) {
      throw std::invalid_argument("bad crash point \"" + t + "\"");
    }
    out.push_back(cp);
  }
  return out;
}

Schedule parse_schedule(const std::string& text, std::uint64_t seed,
                        const std::string& crashes) {
  Schedule s;
  if (text == "rr" || text == "round-robin") {
    s = Schedule::round_robin();
  } else if (text == "random" || text.empty()) {
    s = Schedule::seeded(seed);
  } else if (text.starts_with("scripted=")) {
    std::vector<int> order;
    for (const auto& t : split(text.substr(9), ',')) {
      if (!t.empty()) order.push_back(static_cast<int>(to_int(t, "scripted pid")));
    }
    s = Schedule::scripted(std::move(order));
  } else {
    throw std::invalid_argument("bad schedule \"" + text +
                                "\" (rr | random | scripted=p,p,...)");
  }
  s.seed = seed;
  s.crashes = parse_crashes(crashes);
  return s;
}

std::int64_t default_budget() {
  if (const char* env = std::getenv("SETCON_BUDGET")) {
    return to_int(env, "SETCON_BUDGET");
  }
  return 1'000'000;
}

RunOutput execute_run(const RunConfig& cfg) {
  if (cfg.n < 1) throw std::invalid_argument("run: n must be >= 1");

  std::optional<Collection> coll;
  if (cfg.collection) coll = parse_collection(*cfg.collection);
  ProtocolSpec pspec = ProtocolSpec::parse(cfg.protocol, coll);

  auto inputs = parse_inputs(cfg.inputs, cfg.n);
  Schedule sched = parse_schedule(cfg.schedule, cfg.seed, cfg.crashes);

  RunOptions opts;
  opts.step_budget = cfg.budget > 0 ? cfg.budget : default_budget();
  opts.object_seed = cfg.seed;
  if (cfg.policy == "adversarial") {
    opts.sc_policy = ScPolicy::Adversarial;
  } else if (cfg.policy == "first-wins") {
    opts.sc_policy = ScPolicy::FirstWins;
  } else {
    throw std::invalid_argument("bad object policy \"" + cfg.policy +
                                "\" (adversarial | first-wins)");
  }

  World w = new_world(cfg.n, make_protocol(pspec, cfg.n), inputs, sched, opts);
  RunOutput out;
  out.result = w.run();

  if (!cfg.trace_path.empty()) {
    std::ofstream f(cfg.trace_path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write trace file " + cfg.trace_path);
    w.trace().write_tsv(f);
  }

  std::set<int> participants;
  for (int p = 0; p < cfg.n; ++p) {
    if (inputs[p]) participants.insert(p);
  }
  for (const auto& c : cfg.checks) {
    if (c.starts_with("kset:")) {
      out.reports.push_back(check_k_set_consensus(
          inputs, w.trace(), static_cast<int>(to_int(c.substr(5), "kset bound"))));
    } else if (c.starts_with("lagree:")) {
      out.reports.push_back(check_l_agreement(
          w.trace(), static_cast<int>(to_int(c.substr(7), "lagree bound"))));
    } else if (c == "adaptive") {
      if (!coll) throw std::invalid_argument("adaptive check requires a collection");
      out.reports.push_back(check_adaptive_optimality(*coll, w.trace(), participants));
    } else {
      throw std::invalid_argument("unknown check \"" + c + "\"");
    }
  }

  out.decisions = distinct_decisions(w.trace());
  out.diagnostic = out.result.diagnostic;
  bool all_pass = std::all_of(out.reports.begin(), out.reports.end(),
                              [](const CheckReport& r) { return r.pass; });
  if (out.result.budget_exhausted) {
    out.exit_code = 3;
  } else if (!all_pass) {
    out.exit_code = 1;
  }
  return out;
}

}  // namespace setcon
