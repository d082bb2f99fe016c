#include <stdexcept>

#include "ardt/environment.hpp"
#include "ardt/trajectory.hpp"
#include "doctest.h"

using namespace ardt;

TEST_CASE("returns-to-go are suffix sums") {
  CHECK(compute_returns_to_go(std::vector<double>{0, 0, 6}) ==
        std::vector<double>{6, 6, 6});
  CHECK(compute_returns_to_go(std::vector<double>{1}) ==
        std::vector<double>{1});
  CHECK(compute_returns_to_go(std::vector<double>{2, -1, 3}) ==
        std::vector<double>{4, 2, 3});
}

TEST_CASE("empty reward sequence is rejected") {
  CHECK_THROWS_WITH_AS(compute_returns_to_go({}), "empty reward sequence",
                       std::invalid_argument);
}

TEST_CASE("recomputation reproduces stored rtg and step differences") {
  Trajectory traj;
  for (const double r : {0.5, -2.0, 3.25, 0.0}) {
    traj.steps.push_back(Step{{0.0}, 0, 0, r});
  }
  fill_returns_to_go(traj);
  std::vector<double> rewards;
  for (const auto& s : traj.steps) rewards.push_back(s.reward);
  CHECK(compute_returns_to_go(rewards) == traj.rtg);
  for (std::size_t t = 0; t + 1 < traj.rtg.size(); ++t) {
    CHECK(traj.rtg[t] - traj.rtg[t + 1] == doctest::Approx(rewards[t]));
  }
}

TEST_CASE("validate_trajectory accepts collected play and flags rtg drift") {
  const auto env = make_environment("single_stage");
  Trajectory traj;
  traj.steps.push_back(Step{{0.0}, 0, 2, 6.0});
  traj.rtg = {6.0};
  CHECK(validate_trajectory(traj, *env).ok());

  traj.rtg = {5.0};
  const auto result = validate_trajectory(traj, *env);
  REQUIRE_FALSE(result.ok());
  CHECK(result.violations[0] == "rtg mismatch at t=0");
}

TEST_CASE("validate_trajectory flags illegal moves") {
  const auto env = make_environment("single_stage");
  Trajectory traj;
  traj.steps.push_back(Step{{0.0}, 5, 0, 0.0});
  traj.rtg = {0.0};
  const auto result = validate_trajectory(traj, *env);
  REQUIRE_FALSE(result.ok());
  CHECK(result.violations[0] == "illegal move at t=0");
}

TEST_CASE("connect four validation rejects a full-column move") {
  const auto env = make_environment("connect_four:4x5x4");
  ConnectFourState board(ConnectFourConfig{4, 5, 4});
  Trajectory traj;
  // Fill column 0 (4 cells) then have the protagonist play it again.
  Step s0{board.encode(), 0, 0, 0.0};
  board.apply(0);
  board.apply(0);
  traj.steps.push_back(s0);
  Step s1{board.encode(), 0, 0, 0.0};
  board.apply(0);
  board.apply(0);
  traj.steps.push_back(s1);
  Step s2{board.encode(), 0, 1, 0.0};  // column 0 is full for the protagonist
  traj.steps.push_back(s2);
  traj.rtg = {0.0, 0.0, 0.0};
  const auto result = validate_trajectory(traj, *env);
  REQUIRE_FALSE(result.ok());
  CHECK(result.violations[0] == "illegal move at t=2");
}

TEST_CASE("dataset_stats aggregates returns") {
  Dataset ds;
  ds.game_id = "single_stage";
  Trajectory traj;
  traj.steps.push_back(Step{{0.0}, 0, 2, 6.0});
  traj.rtg = {6.0};
  ds.trajectories.push_back(traj);
  const auto stats = dataset_stats(ds);
  CHECK(stats.n_trajectories == 1);
  CHECK(stats.mean_return == doctest::Approx(6.0));
  CHECK(stats.std_return == doctest::Approx(0.0));
  CHECK(stats.max_horizon == 1);
  CHECK(stats.return_histogram.at(6.0) == 1);

  Dataset empty;
  CHECK_THROWS_AS(dataset_stats(empty), std::invalid_argument);
}
