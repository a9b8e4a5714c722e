#include <set>

#include "doctest.h"
#include "setcon/bg.hpp"
#include "setcon/protocols.hpp"
#include "setcon/runconfig.hpp"
#include "setcon/verify.hpp"

using namespace setcon;

namespace {

std::vector<std::optional<Value>> dense_inputs(int n) {
  std::vector<std::optional<Value>> in(n);
  for (int p = 0; p < n; ++p) in[p] = Value{p + 1, p};
  return in;
}

World static9(std::uint64_t seed) {
  RunOptions opts;
  opts.object_seed = seed;
  return new_world(9, std::make_unique<StaticProtocol>(parse_collection("2:1,5:2"), 9),
                   dense_inputs(9), Schedule::seeded(seed), opts);
}

}  // namespace

TEST_CASE("k-set consensus check accepts the nine-process runs at k = 4") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    World w = static9(seed);
    w.run();
    auto rep = check_k_set_consensus(w.inputs(), w.trace(), 4);
    CHECK(rep.pass);
    // Passing at k implies passing at every k' >= k.
    for (int k = 5; k <= 9; ++k) {
      CHECK(check_k_set_consensus(w.inputs(), w.trace(), k).pass);
    }
  }
}

TEST_CASE("k-set consensus check fails at k = 3 once four values appear") {
  bool found = false;
  for (std::uint64_t seed = 0; seed < 200 && !found; ++seed) {
    World w = static9(seed);
    w.run();
    auto rep = check_k_set_consensus(w.inputs(), w.trace(), 3);
    if (!rep.pass) {
      found = true;
      CHECK(!rep.witnesses.empty());
      CHECK(rep.tsv().find("fail") != std::string::npos);
    }
  }
  CHECK(found);  // the adversarial object policy reaches 4 distinct decisions
}

TEST_CASE("k-set consensus check: all-equal inputs pass at k = 1") {
  std::vector<std::optional<Value>> inputs(9);
  for (int p = 0; p < 9; ++p) inputs[p] = Value{8, p};
  World w = new_world(9, std::make_unique<StaticProtocol>(parse_collection("2:1,5:2"), 9),
                      inputs, Schedule::seeded(3));
  w.run();
  CHECK(check_k_set_consensus(inputs, w.trace(), 1).pass);
}

TEST_CASE("k-set consensus check flags undecided correct participants") {
  Schedule s = Schedule::scripted({0, 1, 2, 3, 4});
  s.crashes = {{0, 1}, {1, 1}};
  RunOptions opts;
  opts.step_budget = 1500;
  World w = new_world(5, std::make_unique<LAgreementProtocol>(2), dense_inputs(5), s,
                      opts);
  w.run();
  auto rep = check_k_set_consensus(w.inputs(), w.trace(), 5);
  CHECK_FALSE(rep.pass);  // survivors loop forever: termination violated
}

TEST_CASE("l-agreement check covers the documented scenarios") {
  // Two participants, no crashes, l = 1.
  World w1 = new_world(2, std::make_unique<LAgreementProtocol>(1), dense_inputs(2),
                       Schedule::seeded(1));
  w1.run();
  auto rep1 = check_l_agreement(w1.trace(), 1);
  CHECK(rep1.pass);

  // One mid-protocol crash among five, l = 2: all correct decide.
  Schedule s2 = Schedule::seeded(5);
  s2.crashes = {{3, 1}};
  World w2 = new_world(5, std::make_unique<LAgreementProtocol>(2), dense_inputs(5), s2);
  w2.run();
  CHECK(check_l_agreement(w2.trace(), 2).pass);

  // Two crashes straddling the A/B writes: non-termination tolerated.
  Schedule s3 = Schedule::scripted({0, 1, 2, 3, 4});
  s3.crashes = {{0, 1}, {1, 2}};  // after A-write; after the A-snapshot
  RunOptions opts;
  opts.step_budget = 1500;
  World w3 = new_world(5, std::make_unique<LAgreementProtocol>(2), dense_inputs(5), s3,
                       opts);
  auto r3 = w3.run();
  CHECK(r3.budget_exhausted);
  CHECK(check_l_agreement(w3.trace(), 2).pass);
}

TEST_CASE("adaptive optimality check enforces the participation bound") {
  const Collection c1 = parse_collection("2:1,5:2");
  std::vector<std::optional<Value>> inputs(9);
  inputs[1] = Value{5, 1};
  inputs[6] = Value{7, 6};
  World w = new_world(9, std::make_unique<AdaptiveProtocol>(c1, 9), inputs,
                      Schedule::seeded(2));
  w.run();
  auto rep = check_adaptive_optimality(c1, w.trace(), {1, 6});
  CHECK(rep.pass);  // bound 1

  const Collection c2 = parse_collection("1:1,13:5,20:9");
  std::set<int> participants;
  std::vector<std::optional<Value>> inputs2(20);
  for (int p = 0; p < 14; ++p) {
    participants.insert(p);
    inputs2[p] = Value{p + 1, p};
  }
  World w2 = new_world(20, std::make_unique<AdaptiveProtocol>(c2, 20), inputs2,
                       Schedule::seeded(9));
  w2.run();
  auto rep2 = check_adaptive_optimality(c2, w2.trace(), participants);
  CHECK(rep2.pass);  // bound AL_14 = 6
  bool bound_present = false;
  for (auto& [k, v] : rep2.stats) bound_present |= (k == "bound" && v == 6);
  CHECK(bound_present);

  // One participant: bound 1, decision equals its own input.
  std::vector<std::optional<Value>> inputs3(4);
  inputs3[2] = Value{11, 2};
  World w3 = new_world(4, std::make_unique<AdaptiveProtocol>(c1, 4), inputs3,
                       Schedule::round_robin());
  w3.run();
  CHECK(check_adaptive_optimality(c1, w3.trace(), {2}).pass);
  CHECK(w3.slots()[2].decision->payload == 11);
}

TEST_CASE("bg progress check covers f = 0 and the f = AL boundary") {
  auto prog = std::make_shared<StaticSimProgram>(parse_collection("2:1,5:2"), 9);
  BgResult r0 = bg_run(prog, 5, {Value{1, 0}, Value{2, 1}, Value{3, 2}, Value{4, 3},
                                 Value{5, 4}},
                       Schedule::seeded(4));
  CHECK(r0.run.quiescent);
  CHECK(check_bg_progress(parse_collection("2:1,5:2"), 9, r0, 0).pass);
}

TEST_CASE("validators are pure: identical reports on re-run") {
  World w = static9(12);
  w.run();
  auto a = check_k_set_consensus(w.inputs(), w.trace(), 4);
  auto b = check_k_set_consensus(w.inputs(), w.trace(), 4);
  CHECK(a.tsv() == b.tsv());
  auto c = check_l_agreement(w.trace(), 2);
  auto d = check_l_agreement(w.trace(), 2);
  CHECK(c.tsv() == d.tsv());
}

TEST_CASE("report TSV carries verdict and stats") {
  World w = static9(1);
  w.run();
  auto rep = check_k_set_consensus(w.inputs(), w.trace(), 4);
  auto line = rep.tsv();
  CHECK(line.substr(0, 7) == "kset:4\t");
  CHECK(line.find("\tpass\t") != std::string::npos);
  CHECK(line.find("distinct=") != std::string::npos);
  CHECK(line.find("deciders=9") != std::string::npos);
}

TEST_CASE("execute_run wires configs to worlds, checks, and exit codes") {
  RunConfig cfg;
  cfg.protocol = "static";
  cfg.collection = "1:1,2:1,5:2";
  cfg.n = 9;
  cfg.inputs = "1..9";
  cfg.seed = 7;
  cfg.checks = {"kset:4"};
  auto out = execute_run(cfg);
  CHECK(out.exit_code == 0);
  REQUIRE(out.reports.size() == 1);
  CHECK(out.reports[0].pass);
  CHECK(out.decisions.size() <= 4);

  // Sparse inputs and the adaptive check.
  RunConfig cfg2;
  cfg2.protocol = "adaptive";
  cfg2.collection = "1:1,2:1,5:2";
  cfg2.n = 9;
  cfg2.inputs = "a@p0,b@p1";
  cfg2.checks = {"adaptive"};
  auto out2 = execute_run(cfg2);
  CHECK(out2.exit_code == 0);
  CHECK(out2.decisions.size() == 1);

  // l-agreement run with its check.
  RunConfig cfg3;
  cfg3.protocol = "l-agreement:2";
  cfg3.n = 5;
  cfg3.seed = 0;
  cfg3.checks = {"lagree:2"};
  auto out3 = execute_run(cfg3);
  CHECK(out3.exit_code == 0);

  // Budget exhaustion surfaces exit code 3.
  RunConfig cfg4 = cfg3;
  cfg4.schedule = "scripted=0,1,2,3,4";
  cfg4.crashes = "0:1,1:1";
  cfg4.budget = 1500;
  auto out4 = execute_run(cfg4);
  CHECK(out4.exit_code == 3);
  CHECK(out4.diagnostic.find("non-termination") != std::string::npos);
}

TEST_CASE("input parsing accepts ranges, lists, letters, and sparse forms") {
  auto a = parse_inputs("", 3);
  CHECK(a[0]->payload == 1);
  CHECK(a[2]->payload == 3);
  auto b = parse_inputs("4..6", 3);
  CHECK(b[1]->payload == 5);
  auto c = parse_inputs("9,8,7", 3);
  CHECK(c[2]->payload == 7);
  auto d = parse_inputs("a@p0,z@2", 3);
  CHECK(d[0]->payload == 1);
  CHECK_FALSE(d[1].has_value());
  CHECK(d[2]->payload == 26);
  CHECK_THROWS_AS(parse_inputs("1,2", 3), std::invalid_argument);
  CHECK_THROWS_AS(parse_inputs("1..9", 3), std::invalid_argument);
  CHECK_THROWS_AS(parse_inputs("5@p9", 3), std::invalid_argument);
}

TEST_CASE("crash script parsing") {
  auto cps = parse_crashes("0:2,3:5");
  REQUIRE(cps.size() == 2);
  CHECK(cps[0].pid == 0);
  CHECK(cps[0].after_steps == 2);
  CHECK(cps[1].pid == 3);
  CHECK_THROWS_AS(parse_crashes("0-2"), std::invalid_argument);
}
