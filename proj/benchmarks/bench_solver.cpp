#include <benchmark/benchmark.h>

#include "ardt/connect_four.hpp"
#include "ardt/game_tree.hpp"

namespace {

using namespace ardt;

void BM_ConnectFourRootSolve(benchmark::State& state) {
  for (auto _ : state) {
    C4Solver solver(ConnectFourConfig{4, 5, 4});
    const auto result = solver.solve(ConnectFourState(ConnectFourConfig{4, 5, 4}));
    benchmark::DoNotOptimize(result.value);
    state.counters["nodes"] = static_cast<double>(solver.nodes_visited());
  }
}
BENCHMARK(BM_ConnectFourRootSolve)->Unit(benchmark::kMillisecond);

void BM_ConnectFourWarmSolve(benchmark::State& state) {
  // Repeated mid-game queries against a warm transposition table, the
  // pattern epsilon-optimal policies produce during collection.
  C4Solver solver(ConnectFourConfig{4, 5, 4});
  ConnectFourState mid(ConnectFourConfig{4, 5, 4});
  mid.apply(2);
  mid.apply(1);
  for (auto _ : state) {
    const auto result = solver.solve(mid);
    benchmark::DoNotOptimize(result.optimal_moves.data());
  }
}
BENCHMARK(BM_ConnectFourWarmSolve);

void BM_TreeMaximin(benchmark::State& state) {
  const GameTree tree = builtin_game("multi_stage");
  for (auto _ : state) {
    const auto sol = solve_maximin(tree);
    benchmark::DoNotOptimize(sol.value.data());
  }
}
BENCHMARK(BM_TreeMaximin);

}  // namespace
