#include <cmath>
#include <filesystem>
#include <map>

#include "ardt/collect.hpp"
#include "ardt/dataset_io.hpp"
#include "ardt/util.hpp"
#include "doctest.h"

using namespace ardt;

namespace {

CollectionConfig uniform_cfg(const std::string& game, std::int64_t n_traj,
                             std::uint64_t seed) {
  CollectionConfig cfg;
  cfg.game_id = game;
  cfg.budget = {CollectionBudget::Kind::kTrajectories, n_traj};
  cfg.seed = seed;
  return cfg;
}

// Trajectory signature: the (action, adversary, reward) path.
std::string signature(const Trajectory& traj) {
  std::string s;
  for (const auto& step : traj.steps) {
    s += std::to_string(step.p_action) + "/" + std::to_string(step.adv_action) +
         "/" + format_double(step.reward) + ";";
  }
  return s;
}

}  // namespace

TEST_CASE("single trajectory budget yields one valid trajectory") {
  const Dataset ds = collect_dataset(uniform_cfg("single_stage", 1, 9));
  REQUIRE(ds.trajectories.size() == 1);
  const auto env = make_environment("single_stage");
  CHECK(validate_trajectory(ds.trajectories[0], *env).ok());
  CHECK(ds.meta.n_steps == 1);
}

TEST_CASE("uniform/uniform single_stage data reaches full coverage") {
  // 5 leaves; at 2000 trajectories every one appears with its tree
  // probability (binomial 3-sigma check, well below the 1e5 of the full
  // protocol but with identical structure).
  const Dataset ds = collect_dataset(uniform_cfg("single_stage", 2000, 1));
  std::map<std::string, int> counts;
  for (const auto& traj : ds.trajectories) ++counts[signature(traj)];
  REQUIRE(counts.size() == 5);
  const std::map<std::string, double> probs = {
      {"0/0/0.000000;", 1.0 / 6}, {"0/1/5.000000;", 1.0 / 6},
      {"0/2/6.000000;", 1.0 / 6}, {"1/0/6.000000;", 1.0 / 4},
      {"1/1/1.000000;", 1.0 / 4},
  };
  for (const auto& [sig, p] : probs) {
    REQUIRE(counts.count(sig));
    const double n = 2000.0;
    CHECK(std::abs(counts.at(sig) - n * p) <= 3.0 * std::sqrt(n * p * (1 - p)));
  }
}

TEST_CASE("collection is byte-reproducible for a fixed config") {
  const auto path_a = std::filesystem::temp_directory_path() / "ardt_a.jsonl";
  const auto path_b = std::filesystem::temp_directory_path() / "ardt_b.jsonl";
  save_dataset(collect_dataset(uniform_cfg("multi_stage", 200, 77)), path_a);
  save_dataset(collect_dataset(uniform_cfg("multi_stage", 200, 77)), path_b);
  CHECK(read_file(path_a) == read_file(path_b));
  std::filesystem::remove(path_a);
  std::filesystem::remove(path_b);
}

TEST_CASE("every collected trajectory validates") {
  for (const auto& game : {"single_stage", "multi_stage", "gambling",
                           "stochastic", "connect_four:4x5x4"}) {
    const auto env = make_environment(game);
    CollectionConfig cfg = uniform_cfg(game, 50, 13);
    const Dataset ds = collect_dataset(cfg);
    for (const auto& traj : ds.trajectories) {
      const auto result = validate_trajectory(traj, *env);
      INFO(game, ": ", result.ok() ? "" : result.violations[0]);
      CHECK(result.ok());
    }
  }
}

TEST_CASE("step budgets stop at a trajectory boundary") {
  CollectionConfig cfg = uniform_cfg("connect_four:4x5x4", 0, 5);
  cfg.budget = {CollectionBudget::Kind::kSteps, 250};
  const Dataset ds = collect_dataset(cfg);
  CHECK(ds.meta.n_steps >= 250);
  // Whole trajectories only: dropping the last one goes below the budget.
  CHECK(ds.meta.n_steps -
            static_cast<std::int64_t>(ds.trajectories.back().length()) <
        250);
}

TEST_CASE("connect four collection matches an independent rollout estimate") {
  // (50%, 50%) optimality on the 4x5 board. An independently seeded
  // Monte-Carlo estimate of the same policy pair must agree on the mean.
  CollectionConfig cfg;
  cfg.game_id = "connect_four:4x5x4";
  cfg.protagonist = PolicySpec::parse("eps:0.5", PolicyRole::kProtagonist);
  cfg.adversary = PolicySpec::parse("eps:0.5", PolicyRole::kAdversary);
  cfg.budget = {CollectionBudget::Kind::kSteps, 4000};
  cfg.seed = 21;
  const Dataset ds = collect_dataset(cfg);
  const double mean = dataset_stats(ds).mean_return;

  CollectionConfig oracle_cfg = cfg;
  oracle_cfg.seed = 2021;
  const double mean_oracle =
      dataset_stats(collect_dataset(oracle_cfg)).mean_return;
  CHECK(std::abs(mean - mean_oracle) < 0.1);
}

TEST_CASE("mix_datasets samples at the requested ratio") {
  const Dataset a = collect_dataset(uniform_cfg("single_stage", 1000, 1));
  const Dataset b = collect_dataset(uniform_cfg("single_stage", 1000, 2));
  const Dataset half = mix_datasets(a, b, 0.1, 3);
  CHECK(half.trajectories.size() == 1100);
  const Dataset full = mix_datasets(a, b, 1.0, 3);
  CHECK(full.trajectories.size() == 2000);

  const Dataset c = collect_dataset(uniform_cfg("gambling", 10, 1));
  CHECK_THROWS_WITH_AS(mix_datasets(a, c, 1.0, 0),
                       doctest::Contains("cannot mix"),
                       std::invalid_argument);
}

TEST_CASE("full-coverage trajectory frequencies respect tree probabilities") {
  const Dataset ds = collect_dataset(uniform_cfg("gambling", 3000, 23));
  std::map<std::string, int> counts;
  for (const auto& traj : ds.trajectories) ++counts[signature(traj)];
  // Five distinct trajectories: 2 + 2 + 1 arms.
  REQUIRE(counts.size() == 5);
  // The deterministic third arm has probability 1/3.
  const double n = 3000.0;
  const double p = 1.0 / 3.0;
  CHECK(std::abs(counts.at("2/0/1.000000;") - n * p) <=
        3.0 * std::sqrt(n * p * (1 - p)));
}
