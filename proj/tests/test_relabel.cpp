#include <cmath>

#include "ardt/collect.hpp"
#include "ardt/relabel.hpp"
#include "doctest.h"

using namespace ardt;

namespace {

Dataset collect_uniform(const std::string& game, std::int64_t n,
                        std::uint64_t seed) {
  CollectionConfig cfg;
  cfg.game_id = game;
  cfg.budget = {CollectionBudget::Kind::kTrajectories, n};
  cfg.seed = seed;
  return collect_dataset(cfg);
}

}  // namespace

TEST_CASE("tabular relabel rewrites the lucky (a0, high-reward) trajectory") {
  const Dataset ds = collect_uniform("single_stage", 2000, 1);
  const Dataset out = relabel_dataset(ds, tabular_minimax_rtg(ds));
  bool saw_lucky = false, saw_a1 = false;
  for (const auto& traj : out.trajectories) {
    REQUIRE(traj.has_minimax_rtg());
    const Step& step = traj.steps[0];
    if (step.p_action == 0 && step.reward == 6.0) {
      // Observed return 6, worst case 0.
      CHECK(traj.rtg[0] == doctest::Approx(6.0));
      CHECK(traj.minimax_rtg[0] == doctest::Approx(0.0));
      saw_lucky = true;
    }
    if (step.p_action == 1) {
      CHECK(traj.minimax_rtg[0] == doctest::Approx(1.0));
      saw_a1 = true;
    }
  }
  CHECK(saw_lucky);
  CHECK(saw_a1);
}

TEST_CASE("relabeling is idempotent") {
  const Dataset ds = collect_uniform("multi_stage", 300, 2);
  const TabularValueMap map = tabular_minimax_rtg(ds);
  const Dataset once = relabel_dataset(ds, map);
  const Dataset twice = relabel_dataset(once, map);
  CHECK(once == twice);
}

TEST_CASE("missing keys identify the trajectory and step") {
  Dataset ds = collect_uniform("single_stage", 500, 3);
  // Build the map only from action-0 trajectories.
  Dataset a0_only = ds;
  std::erase_if(a0_only.trajectories, [](const Trajectory& t) {
    return t.steps[0].p_action != 0;
  });
  const TabularValueMap map = tabular_minimax_rtg(a0_only);
  CHECK_THROWS_WITH_AS(relabel_dataset(ds, map),
                       doctest::Contains("trajectory"), std::runtime_error);
}

TEST_CASE("observed rtg is retained alongside the relabeled channel") {
  const Dataset ds = collect_uniform("gambling", 200, 4);
  const Dataset out = relabel_dataset(ds, tabular_minimax_rtg(ds));
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    CHECK(out.trajectories[i].rtg == ds.trajectories[i].rtg);
    CHECK(out.trajectories[i].steps == ds.trajectories[i].steps);
  }
}

TEST_CASE("learned relabel separates the single_stage actions") {
  // Balanced hand-rolled coverage keeps the fixed points analytic; the
  // relabeled channel must put action 0 near 0.11 and action 1 near 1.05.
  Dataset ds;
  ds.game_id = "single_stage";
  const auto add = [&ds](int action, int adv, double reward) {
    Trajectory traj;
    traj.steps.push_back(Step{{0.0}, action, adv, reward});
    fill_returns_to_go(traj);
    ds.trajectories.push_back(std::move(traj));
  };
  for (int rep = 0; rep < 2; ++rep) {
    add(0, 0, 0.0);
    add(0, 1, 5.0);
    add(0, 2, 6.0);
  }
  for (int rep = 0; rep < 3; ++rep) {
    add(1, 0, 6.0);
    add(1, 1, 1.0);
  }
  const auto env = make_environment("single_stage");
  EstimatorConfig cfg;
  cfg.hidden_dim = 64;
  cfg.alpha = 0.01;
  cfg.lr = 1e-2;
  cfg.warmup_epochs = 40;
  cfg.seed = 5;
  ValueEstimatorPair est(*env, cfg);
  EstimatorFeatures feat(*env, ds, cfg.context_length);
  fit_minimax(est, feat, 900, cfg.alpha);
  const Dataset out = relabel_dataset(ds, *env, est);
  for (const auto& traj : out.trajectories) {
    const double v = traj.minimax_rtg[0];
    if (traj.steps[0].p_action == 0) {
      CHECK(std::abs(v - 0.109) < 0.1);
    } else {
      CHECK(std::abs(v - 1.05) < 0.1);
    }
  }
}
