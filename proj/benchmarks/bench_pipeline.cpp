#include <benchmark/benchmark.h>

#include "ardt/collect.hpp"
#include "ardt/data_trie.hpp"

namespace {

using namespace ardt;

void BM_CollectSingleStage(benchmark::State& state) {
  CollectionConfig cfg;
  cfg.game_id = "single_stage";
  cfg.budget = {CollectionBudget::Kind::kTrajectories, state.range(0)};
  cfg.seed = 1;
  for (auto _ : state) {
    const Dataset ds = collect_dataset(cfg);
    benchmark::DoNotOptimize(ds.trajectories.size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_CollectSingleStage)->Arg(1000)->Arg(10000);

void BM_TrieBuildAndSolve(benchmark::State& state) {
  CollectionConfig cfg;
  cfg.game_id = "multi_stage";
  cfg.budget = {CollectionBudget::Kind::kTrajectories, state.range(0)};
  cfg.seed = 2;
  const Dataset ds = collect_dataset(cfg);
  for (auto _ : state) {
    const DataTrie trie(ds);
    const TabularValueMap map = tabular_minimax_rtg(trie);
    benchmark::DoNotOptimize(map.size());
  }
}
BENCHMARK(BM_TrieBuildAndSolve)->Arg(1000)->Arg(10000);

}  // namespace
