#include <benchmark/benchmark.h>

#include "setcon/bg.hpp"
#include "setcon/protocols.hpp"
#include "setcon/runtime.hpp"

using namespace setcon;

namespace {

std::vector<std::optional<Value>> dense_inputs(int n) {
  std::vector<std::optional<Value>> in(n);
  for (int p = 0; p < n; ++p) in[p] = Value{p + 1, p};
  return in;
}

void BM_l_agreement_run(benchmark::State& state) {
  int n = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  std::int64_t events = 0;
  for (auto _ : state) {
    World w = new_world(n, std::make_unique<LAgreementProtocol>(2), dense_inputs(n),
                        Schedule::seeded(seed++));
    w.run();
    events += static_cast<std::int64_t>(w.trace().events.size());
    benchmark::DoNotOptimize(w.trace().events.size());
  }
  state.SetItemsProcessed(events);
}

void BM_static_run(benchmark::State& state) {
  Collection c = parse_collection("2:1,5:2");
  std::uint64_t seed = 0;
  for (auto _ : state) {
    World w = new_world(9, std::make_unique<StaticProtocol>(c, 9), dense_inputs(9),
                        Schedule::seeded(seed++));
    w.run();
    benchmark::DoNotOptimize(w.slots());
  }
}

void BM_adaptive_run(benchmark::State& state) {
  Collection c = parse_collection("1:1,13:5,20:9");
  int m = static_cast<int>(state.range(0));
  std::vector<std::optional<Value>> inputs(26);
  for (int p = 0; p < m; ++p) inputs[p] = Value{p + 1, p};
  std::uint64_t seed = 0;
  std::int64_t events = 0;
  for (auto _ : state) {
    World w = new_world(26, std::make_unique<AdaptiveProtocol>(c, 26), inputs,
                        Schedule::seeded(seed++));
    w.run();
    events += static_cast<std::int64_t>(w.trace().events.size());
  }
  state.SetItemsProcessed(events);
}

void BM_bg_run(benchmark::State& state) {
  Collection c = parse_collection("2:1,5:2");
  auto prog = std::make_shared<StaticSimProgram>(c, 9);
  int m = static_cast<int>(state.range(0));
  std::uint64_t seed = 0;
  std::int64_t events = 0;
  for (auto _ : state) {
    std::vector<Value> in;
    for (int i = 0; i < m; ++i) in.push_back(Value{i + 1, i});
    BgResult r = bg_run(prog, m, in, Schedule::seeded(seed++));
    events += static_cast<std::int64_t>(r.world.trace().events.size());
  }
  state.SetItemsProcessed(events);
}

}  // namespace

BENCHMARK(BM_l_agreement_run)->DenseRange(2, 6, 2);
BENCHMARK(BM_static_run);
BENCHMARK(BM_adaptive_run)->Arg(5)->Arg(14)->Arg(21);
BENCHMARK(BM_bg_run)->Arg(5)->Arg(10);
