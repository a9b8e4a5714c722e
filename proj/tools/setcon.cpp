// setcon: agreement power of set-consensus collections, and seeded runs of
// the wait-free protocols built on them.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "setcon/agreement.hpp"
#include "setcon/bg.hpp"
#include "setcon/collection.hpp"
#include "setcon/runconfig.hpp"
#include "setcon/verify.hpp"

namespace {

using namespace setcon;

struct SeedRange {
  std::uint64_t lo = 0;
  std::uint64_t hi = 0;  // inclusive; empty when hi < lo
};

SeedRange parse_seed_range(const std::string& text) {
  SeedRange r;
  auto dots = text.find("..");
  if (dots == std::string::npos) {
    r.lo = r.hi = std::stoull(text);
    return r;
  }
  r.lo = std::stoull(text.substr(0, dots));
  std::string hi = text.substr(dots + 2);
  if (hi.empty()) throw CLI::ValidationError("--seeds", "use A..B");
  r.hi = std::stoull(hi);
  return r;
}

int cmd_al(const std::string& coll, int n) {
  std::cout << al(parse_collection(coll), n) << "\n";
  return 0;
}

int cmd_table(const std::string& coll, int n) {
  agreement_table(parse_collection(coll), n).write_tsv(std::cout);
  return 0;
}

int cmd_scn(const std::string& coll, int j) {
  std::cout << scn(parse_collection(coll), j) << "\n";
  return 0;
}

int cmd_witness(const std::string& coll, int n) {
  std::cout << witness(parse_collection(coll), n).str() << "\n";
  return 0;
}

int cmd_complete(const std::string& coll, int n) {
  std::cout << complete(parse_collection(coll), n).str() << "\n";
  return 0;
}

int cmd_run(const RunConfig& cfg) {
  auto out = execute_run(cfg);
  for (const auto& rep : out.reports) std::cout << rep.tsv() << "\n";
  if (!out.diagnostic.empty()) std::cerr << out.diagnostic << "\n";
  return out.exit_code;
}

int cmd_bg_sim(const std::string& coll, int n, int simulators,
               const std::string& inputs, const std::string& crashes,
               std::uint64_t seed, std::int64_t budget, const std::string& trace_path) {
  Collection c = parse_collection(coll);
  auto program = std::make_shared<StaticSimProgram>(c, n);

  std::vector<Value> sim_inputs;
  auto parsed = parse_inputs(inputs, simulators);
  for (int i = 0; i < simulators; ++i) {
    if (!parsed[i]) {
      throw std::invalid_argument("bg-sim requires an input for every simulator");
    }
    sim_inputs.push_back(*parsed[i]);
  }

  Schedule sched = parse_schedule("random", seed, crashes);
  RunOptions opts;
  opts.object_seed = seed;
  opts.step_budget = budget > 0 ? budget : default_budget();

  BgResult r = bg_run(program, simulators, sim_inputs, sched, opts);
  if (!trace_path.empty()) {
    std::ofstream f(trace_path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write trace file " + trace_path);
    r.world.trace().write_tsv(f);
  }

  for (int q = 0; q < n; ++q) {
    std::cout << "sim-decision\tp" << q << '\t';
    if (r.simulated_decisions[q]) {
      std::cout << to_string(*r.simulated_decisions[q]);
    } else {
      std::cout << '-';
    }
    std::cout << '\n';
  }
  for (int i = 0; i < simulators; ++i) {
    std::cout << "sim-return\tq" << i << '\t';
    if (r.simulator_returns[i]) {
      std::cout << to_string(*r.simulator_returns[i]);
    } else {
      std::cout << '-';
    }
    std::cout << '\n';
  }
  for (const auto& b : r.blocked) {
    std::cout << "blocked\t" << to_string(b.tag) << '\t' << b.label << '\n';
  }
  std::cout << check_bg_progress(c, n, r, r.crashed_simulators).tsv() << '\n';

  if (r.run.budget_exhausted) {
    std::cerr << r.run.diagnostic << "\n";
    return 3;
  }
  return 0;
}

// Crash placements for stress sweeps.  "window" targets the adversarially
// interesting region: the first few steps of a process, where agreement
// mid-windows and pending proposals live.
std::string generate_crashes(const std::string& mode, int count, int n,
                             std::mt19937_64& rng) {
  if (mode == "none" || count <= 0) return "";
  std::vector<int> pids(n);
  for (int i = 0; i < n; ++i) pids[i] = i;
  std::shuffle(pids.begin(), pids.end(), rng);
  int limit = mode == "window" ? 3 : 50;
  std::string out;
  for (int i = 0; i < count && i < n; ++i) {
    if (i) out += ',';
    out += std::to_string(pids[i]) + ":" +
           std::to_string(static_cast<int>(rng() % limit + 1));
  }
  return out;
}

int cmd_stress(const std::string& protocol, const std::string& coll, int n,
               int participants, const std::string& seeds_text,
               const std::string& crash_mode, int crash_count, int simulators,
               const std::vector<std::string>& checks, const std::string& trace_dir,
               std::int64_t budget) {
  SeedRange seeds = parse_seed_range(seeds_text);
  if (seeds.hi < seeds.lo) return 0;  // empty sweep, empty summary

  std::uint64_t passes = 0, fails = 0;
  std::size_t max_distinct = 0;
  for (std::uint64_t seed = seeds.lo; seed <= seeds.hi; ++seed) {
    std::mt19937_64 rng(seed ^ 0xabcdef);
    bool ok = true;
    std::size_t distinct = 0;
    std::string trace_name = protocol + "_fail_" + std::to_string(seed) + ".tsv";

    if (protocol == "bg") {
      Collection c = parse_collection(coll);
      auto program = std::make_shared<StaticSimProgram>(c, n);
      Schedule sched = parse_schedule(
          "random", seed,
          generate_crashes(crash_mode, crash_count, simulators, rng));
      RunOptions opts;
      opts.object_seed = seed;
      opts.step_budget = budget > 0 ? budget : default_budget();
      std::vector<Value> sim_in;
      for (int i = 0; i < simulators; ++i) sim_in.push_back(Value{i + 1, i});
      BgResult r = bg_run(program, simulators, sim_in, sched, opts);
      auto rep = check_bg_progress(c, n, r, r.crashed_simulators);
      ok = rep.pass;
      std::set<std::int64_t> returned;
      for (const auto& ret : r.simulator_returns) {
        if (ret) returned.insert(ret->payload);
      }
      distinct = returned.size();
      if (!ok) {
        std::ofstream f(std::filesystem::path(trace_dir) / trace_name,
                        std::ios::binary);
        r.world.trace().write_tsv(f);
      }
    } else {
      RunConfig cfg;
      cfg.protocol = protocol;
      if (!coll.empty()) cfg.collection = coll;
      cfg.n = n;
      cfg.seed = seed;
      cfg.budget = budget;
      cfg.checks = checks;
      cfg.crashes = generate_crashes(crash_mode, crash_count, n, rng);
      if (participants > 0 && participants < n) {
        std::string in;
        for (int p = 0; p < participants; ++p) {
          if (p) in += ',';
          in += std::to_string(p + 1) + "@p" + std::to_string(p);
        }
        cfg.inputs = in;
      }
      if (!trace_dir.empty()) {
        cfg.trace_path = (std::filesystem::path(trace_dir) / trace_name).string();
      }
      auto out = execute_run(cfg);
      ok = out.exit_code == 0;
      distinct = out.decisions.size();
      if (ok && !cfg.trace_path.empty()) std::filesystem::remove(cfg.trace_path);
    }

    passes += ok ? 1 : 0;
    fails += ok ? 0 : 1;
    max_distinct = std::max(max_distinct, distinct);
  }

  std::cout << protocol << '\t' << "seeds=" << (seeds.hi - seeds.lo + 1) << '\t'
            << "pass=" << passes << '\t' << "fail=" << fails << '\t'
            << "max_distinct=" << max_distinct << '\n';
  return fails == 0 ? 0 : 1;
}

}  // namespace

namespace {

int run_cli(int argc, char** argv) {
  CLI::App app{"agreement power and executable protocols of set-consensus collections"};
  app.require_subcommand(1);

  std::string coll;
  int n = 0, j = 0;

  auto* al_cmd = app.add_subcommand("al", "agreement level for n processes");
  al_cmd->add_option("--collection", coll, "collection, e.g. 1:1,13:5,20:9")->required();
  al_cmd->add_option("--n", n, "system size")->required();

  auto* table_cmd = app.add_subcommand("table", "agreement levels for r = 0..n");
  table_cmd->add_option("--collection", coll)->required();
  table_cmd->add_option("--n", n)->required();

  auto* scn_cmd = app.add_subcommand("scn", "j-set-consensus number");
  scn_cmd->add_option("--collection", coll)->required();
  scn_cmd->add_option("--j", j, "disagreement budget")->required();

  auto* witness_cmd = app.add_subcommand("witness", "multiset realizing the level");
  witness_cmd->add_option("--collection", coll)->required();
  witness_cmd->add_option("--n", n)->required();

  auto* complete_cmd = app.add_subcommand("complete", "completed collection for n");
  complete_cmd->add_option("--collection", coll)->required();
  complete_cmd->add_option("--n", n)->required();

  RunConfig run_cfg;
  auto* run_cmd = app.add_subcommand("run", "execute a protocol and validate");
  run_cmd->add_option("--protocol", run_cfg.protocol,
                      "static | adaptive | l-agreement:K")->required();
  std::string run_coll;
  run_cmd->add_option("--collection", run_coll);
  run_cmd->add_option("--n", run_cfg.n, "system size")->required();
  run_cmd->add_option("--inputs", run_cfg.inputs,
                      "1..9 | v,v,... | v@p0,v@p3 (default: 1..n)");
  run_cmd->add_option("--schedule", run_cfg.schedule, "rr | random | scripted=p,p,...");
  run_cmd->add_option("--seed", run_cfg.seed);
  run_cmd->add_option("--crash", run_cfg.crashes, "proc:step,...");
  run_cmd->add_option("--policy", run_cfg.policy, "adversarial | first-wins");
  run_cmd->add_option("--budget", run_cfg.budget, "step budget (0: SETCON_BUDGET/1e6)");
  run_cmd->add_option("--check", run_cfg.checks, "kset:K | lagree:L | adaptive");
  run_cmd->add_option("--trace", run_cfg.trace_path, "write the trace TSV here");

  std::string bg_inputs, bg_crashes, bg_trace;
  int simulators = 1;
  std::uint64_t bg_seed = 0;
  std::int64_t bg_budget = 0;
  auto* bg_cmd = app.add_subcommand("bg-sim",
                                    "simulate the static protocol on snapshot memory");
  bg_cmd->add_option("--collection", coll)->required();
  bg_cmd->add_option("--n", n, "simulated processes")->required();
  bg_cmd->add_option("--simulators", simulators)->required();
  bg_cmd->add_option("--inputs", bg_inputs, "simulator inputs (default 1..m)");
  bg_cmd->add_option("--crash", bg_crashes, "simulator:step,...");
  bg_cmd->add_option("--seed", bg_seed);
  bg_cmd->add_option("--budget", bg_budget);
  bg_cmd->add_option("--trace", bg_trace);

  std::string stress_protocol, stress_seeds = "0..99", crash_mode = "none";
  std::string stress_trace_dir = ".";
  int stress_participants = 0, crash_count = 0, stress_sims = 5;
  std::int64_t stress_budget = 0;
  std::vector<std::string> stress_checks;
  auto* stress_cmd = app.add_subcommand("stress", "sweep seeds and crash patterns");
  stress_cmd->add_option("--protocol", stress_protocol,
                         "static | adaptive | l-agreement:K | bg")->required();
  stress_cmd->add_option("--collection", coll);
  stress_cmd->add_option("--n", n)->required();
  stress_cmd->add_option("--participants", stress_participants,
                         "participating processes (default: all)");
  stress_cmd->add_option("--seeds", stress_seeds, "seed range A..B");
  stress_cmd->add_option("--crash-mode", crash_mode, "none | uniform | window");
  stress_cmd->add_option("--crash-count", crash_count);
  stress_cmd->add_option("--simulators", stress_sims, "for --protocol bg");
  stress_cmd->add_option("--check", stress_checks, "kset:K | lagree:L | adaptive");
  stress_cmd->add_option("--trace-dir", stress_trace_dir, "where failing traces go");
  stress_cmd->add_option("--budget", stress_budget);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (al_cmd->parsed()) return cmd_al(coll, n);
  if (table_cmd->parsed()) return cmd_table(coll, n);
  if (scn_cmd->parsed()) return cmd_scn(coll, j);
  if (witness_cmd->parsed()) return cmd_witness(coll, n);
  if (complete_cmd->parsed()) return cmd_complete(coll, n);
  if (run_cmd->parsed()) {
    if (!run_coll.empty()) run_cfg.collection = run_coll;
    return cmd_run(run_cfg);
  }
  if (bg_cmd->parsed()) {
    return cmd_bg_sim(coll, n, simulators, bg_inputs, bg_crashes, bg_seed,
                      bg_budget, bg_trace);
  }
  if (stress_cmd->parsed()) {
    return cmd_stress(stress_protocol, coll, n, stress_participants, stress_seeds,
                      crash_mode, crash_count, stress_sims, stress_checks,
                      stress_trace_dir, stress_budget);
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
