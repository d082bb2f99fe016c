#include <cmath>

#include "ardt/collect.hpp"
#include "ardt/data_trie.hpp"
#include "ardt/ops.hpp"
#include "ardt/value_estimator.hpp"
#include "doctest.h"

using namespace ardt;

namespace {

// Exact expectile of a weighted sample set: the m solving
// alpha * sum_{v > m} w (v - m) = (1 - alpha) * sum_{v < m} w (m - v).
// Piecewise linear in m between sorted sample values.
double expectile_oracle(std::vector<std::pair<double, double>> weighted,
                        double alpha) {
  std::sort(weighted.begin(), weighted.end());
  for (std::size_t i = 0; i + 1 <= weighted.size(); ++i) {
    const double lo = weighted[i].first;
    const double hi =
        i + 1 < weighted.size() ? weighted[i + 1].first : weighted[i].first;
    // Solve on [lo, hi] assuming the split at index i.
    double above = 0.0, above_w = 0.0, below = 0.0, below_w = 0.0;
    for (std::size_t j = 0; j < weighted.size(); ++j) {
      if (j > i) {
        above += weighted[j].first * weighted[j].second;
        above_w += weighted[j].second;
      } else {
        below += weighted[j].first * weighted[j].second;
        below_w += weighted[j].second;
      }
    }
    const double num = alpha * above + (1 - alpha) * below;
    const double den = alpha * above_w + (1 - alpha) * below_w;
    const double m = num / den;
    if (m >= lo - 1e-12 && m <= hi + 1e-12) return m;
  }
  return weighted.back().first;
}

// Synthetic two-step tree: root P (1 action) -> A (1 action, reward 0) ->
// P with 2 actions -> A single replies with rewards 1 and 6.
GameTree two_step_tree() {
  GameTree tree;
  const auto add = [&tree](NodeKind kind) {
    tree.nodes.push_back(TreeNode{kind, {}});
    return static_cast<int>(tree.nodes.size()) - 1;
  };
  const int root = add(NodeKind::kProtagonist);
  const int a0 = add(NodeKind::kAdversary);
  const int mid = add(NodeKind::kProtagonist);
  const int leaf1 = add(NodeKind::kAdversary);
  const int leaf6 = add(NodeKind::kAdversary);
  const int t1 = add(NodeKind::kTerminal);
  const int t2 = add(NodeKind::kTerminal);
  tree.nodes[root].edges.push_back(TreeEdge{0, 0, 0.0, a0});
  tree.nodes[a0].edges.push_back(TreeEdge{0, 0, 0.0, mid});
  tree.nodes[mid].edges.push_back(TreeEdge{0, 0, 0.0, leaf1});
  tree.nodes[mid].edges.push_back(TreeEdge{1, 0, 0.0, leaf6});
  tree.nodes[leaf1].edges.push_back(TreeEdge{0, 0, 1.0, t1});
  tree.nodes[leaf6].edges.push_back(TreeEdge{0, 0, 6.0, t2});
  tree.root = root;
  tree.validate();
  tree.compute_h_max();
  return tree;
}

Trajectory make_traj(const std::vector<std::array<double, 4>>& rows) {
  Trajectory traj;
  for (const auto& [s, a, b, r] : rows) {
    traj.steps.push_back(
        Step{{s}, static_cast<int>(a), static_cast<int>(b), r});
  }
  fill_returns_to_go(traj);
  return traj;
}

// Single-stage game with exactly balanced adversary counts, so the
// expectile fixed points are the analytic ones.
Dataset balanced_single_stage() {
  Dataset ds;
  ds.game_id = "single_stage";
  const double a0_rewards[] = {0.0, 5.0, 6.0};
  for (int rep = 0; rep < 2; ++rep) {
    for (int b = 0; b < 3; ++b) {
      ds.trajectories.push_back(make_traj({{0.0, 0.0, double(b),
                                            a0_rewards[b]}}));
    }
  }
  const double a1_rewards[] = {6.0, 1.0};
  for (int rep = 0; rep < 3; ++rep) {
    for (int b = 0; b < 2; ++b) {
      ds.trajectories.push_back(
          make_traj({{0.0, 1.0, double(b), a1_rewards[b]}}));
    }
  }
  return ds;
}

EstimatorConfig fast_config(double alpha, std::uint64_t seed) {
  EstimatorConfig cfg;
  cfg.context_length = 4;
  cfg.hidden_dim = 64;
  cfg.alpha = alpha;
  cfg.lr = 1e-2;
  cfg.batch_size = 128;
  cfg.warmup_epochs = 40;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_CASE("scalar expectile regression hits the piecewise-linear oracle") {
  // Gradient descent with the tape's expectile loss on a single scalar.
  const std::vector<double> targets = {1.0, 2.0, 3.0};
  const std::vector<std::pair<double, double>> weighted = {
      {1.0, 1.0}, {2.0, 1.0}, {3.0, 1.0}};
  for (const auto& [alpha, expected, tol] :
       std::vector<std::tuple<double, double, double>>{
           {0.5, 2.0, 1e-3},
           {0.01, 1.0297, 5e-3},
           {0.99, 2.9703, 5e-3}}) {
    CHECK(std::abs(expectile_oracle(weighted, alpha) - expected) < 2e-4);
    nn::Tensor m = nn::Tensor::scalar(2.0, true);
    nn::Tensor target_col = nn::Tensor::from_values(
        {3, 1}, std::vector<double>(targets.begin(), targets.end()));
    nn::Tensor ones = nn::Tensor::full({3, 1}, 1.0);
    for (int it = 0; it < 4000; ++it) {
      m.zero_grad();
      nn::Tensor pred = nn::matmul(ones, m);
      nn::Tensor loss = nn::expectile_loss(nn::sub(pred, target_col), alpha);
      nn::backward(loss);
      m.data()[0] -= 0.2 * m.grad()[0];
    }
    CHECK(std::abs(m.value() - expected) < tol);
  }
}

TEST_CASE("warmup regresses both networks to observed returns-to-go") {
  const auto env = make_environment("single_stage");
  Dataset ds;
  ds.game_id = "single_stage";
  ds.trajectories.push_back(make_traj({{0.0, 0.0, 2.0, 6.0}}));
  EstimatorConfig cfg = fast_config(0.01, 5);
  ValueEstimatorPair est(*env, cfg);
  EstimatorFeatures feat(*env, ds, cfg.context_length);
  nn::AdamWConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  nn::AdamW nu_opt(est.nu_params(), opt_cfg);
  nn::AdamW omega_opt(est.omega_params(), opt_cfg);
  Rng rng(1);
  warmup_estimators(est, feat, 300, nu_opt, omega_opt, rng);
  const auto values = est.nu_values(feat);
  CHECK(std::abs(values[0] - 6.0) < 0.05);
}

TEST_CASE("warmup on gambling data anchors the joint estimator per branch") {
  const auto env = make_environment("gambling");
  Dataset ds;
  ds.game_id = "gambling";
  // Balanced full coverage, two copies each.
  const double rewards[3][2] = {{5.0, -15.0}, {1.0, -6.0}, {1.0, 1.0}};
  for (int rep = 0; rep < 2; ++rep) {
    for (int a = 0; a < 3; ++a) {
      const int n_branches = a == 2 ? 1 : 2;
      for (int b = 0; b < n_branches; ++b) {
        ds.trajectories.push_back(
            make_traj({{0.0, double(a), double(b), rewards[a][b]}}));
      }
    }
  }
  EstimatorConfig cfg = fast_config(0.01, 6);
  ValueEstimatorPair est(*env, cfg);
  EstimatorFeatures feat(*env, ds, cfg.context_length);
  nn::AdamWConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  nn::AdamW nu_opt(est.nu_params(), opt_cfg);
  nn::AdamW omega_opt(est.omega_params(), opt_cfg);
  Rng rng(2);
  warmup_estimators(est, feat, 400, nu_opt, omega_opt, rng);
  // Row 0 is (a0, high branch): q_joint should sit near its target 5.
  std::vector<std::size_t> row = {0};
  CHECK(std::abs(est.omega_forward(feat, row).value() - 5.0) < 0.1);
}

TEST_CASE("alternating fit reaches the finite-alpha expectile fixed points") {
  const auto env = make_environment("single_stage");
  const Dataset ds = balanced_single_stage();
  EstimatorConfig cfg = fast_config(0.01, 7);
  ValueEstimatorPair est(*env, cfg);
  EstimatorFeatures feat(*env, ds, cfg.context_length);
  fit_minimax(est, feat, 900, cfg.alpha);
  const auto values = est.nu_values(feat);
  // Analytic nu-side fixed points with exact leaf-anchored omega values:
  const double fp_a0 = expectile_oracle(
      {{0.0, 1.0}, {5.0, 1.0}, {6.0, 1.0}}, 0.01);  // 0.108911...
  const double fp_a1 = expectile_oracle({{6.0, 1.0}, {1.0, 1.0}}, 0.01);
  for (std::size_t i = 0; i < feat.sample_count(); ++i) {
    const auto [ti, t] = feat.locate(i);
    const int action = ds.trajectories[ti].steps[t].p_action;
    const double expected = action == 0 ? fp_a0 : fp_a1;
    CHECK(std::abs(values[i] - expected) < 0.05);
  }
  CHECK(fp_a0 == doctest::Approx(0.11 / 1.01));
  CHECK(fp_a1 == doctest::Approx(1.05));
}

TEST_CASE("alpha=0.5 fit matches the expected-return oracle") {
  const auto env = make_environment("single_stage");
  const Dataset ds = balanced_single_stage();
  EstimatorConfig cfg = fast_config(0.5, 8);
  ValueEstimatorPair est(*env, cfg);
  EstimatorFeatures feat(*env, ds, cfg.context_length);
  fit_minimax(est, feat, 300, 0.5);
  const DataTrie trie(ds);
  const TabularValueMap expected = tabular_expected_rtg(trie);
  const auto values = est.nu_values(feat);
  const auto& root = trie.nodes()[static_cast<std::size_t>(trie.roots()[0])];
  for (std::size_t i = 0; i < feat.sample_count(); ++i) {
    const auto [ti, t] = feat.locate(i);
    const int action = ds.trajectories[ti].steps[t].p_action;
    CHECK(std::abs(values[i] - *expected.get(root.history_key, action)) < 0.1);
  }
}

TEST_CASE("omega bootstraps the in-sample max over next actions") {
  // Two trajectories through a shared prefix; the continuation values at
  // the second step are {1, 6}, so at alpha=0.01 the joint estimate of the
  // first step approaches the 0.99-expectile of {1, 6} = 5.95.
  const GameTree tree = two_step_tree();
  const TreeEnvironment env("two_step", tree);
  Dataset ds;
  ds.game_id = "two_step";
  for (int rep = 0; rep < 2; ++rep) {
    ds.trajectories.push_back(
        make_traj({{0.0, 0.0, 0.0, 0.0}, {2.0, 0.0, 0.0, 1.0}}));
    ds.trajectories.push_back(
        make_traj({{0.0, 0.0, 0.0, 0.0}, {2.0, 1.0, 0.0, 6.0}}));
  }
  EstimatorConfig cfg = fast_config(0.01, 9);
  ValueEstimatorPair est(env, cfg);
  EstimatorFeatures feat(env, ds, cfg.context_length);
  fit_minimax(est, feat, 500, cfg.alpha);
  // Sample 0 is the first step of the first trajectory.
  std::vector<std::size_t> row = {0};
  const double q_joint = est.omega_forward(feat, row).value();
  const double expected =
      expectile_oracle({{1.0, 1.0}, {6.0, 1.0}}, 0.99);  // 5.95
  CHECK(expected == doctest::Approx(5.95));
  CHECK(std::abs(q_joint - expected) < 0.25);
  // And the nu side collapses onto the single observed adversary action.
  const double q_tilde = est.nu_values(feat)[0];
  CHECK(std::abs(q_tilde - expected) < 0.3);
}

TEST_CASE("alpha=0.5 on single-continuation data stays at the warmup targets") {
  const auto env = make_environment("multi_stage");
  CollectionConfig ccfg;
  ccfg.game_id = "multi_stage";
  ccfg.budget = {CollectionBudget::Kind::kTrajectories, 1};
  ccfg.seed = 4;
  const Dataset ds = collect_dataset(ccfg);
  EstimatorConfig cfg = fast_config(0.5, 10);
  ValueEstimatorPair est(*env, cfg);
  EstimatorFeatures feat(*env, ds, cfg.context_length);
  fit_minimax(est, feat, 300, 0.5);
  const auto values = est.nu_values(feat);
  for (std::size_t i = 0; i < feat.sample_count(); ++i) {
    CHECK(std::abs(values[i] - feat.rtg(i)) < 0.05);
  }
}

TEST_CASE("estimator rejects bad expectile levels") {
  const auto env = make_environment("single_stage");
  EstimatorConfig cfg = fast_config(0.01, 11);
  ValueEstimatorPair est(*env, cfg);
  Dataset ds;
  ds.game_id = "single_stage";
  ds.trajectories.push_back(make_traj({{0.0, 0.0, 0.0, 0.0}}));
  EstimatorFeatures feat(*env, ds, cfg.context_length);
  nn::AdamW opt(est.nu_params(), {});
  const std::vector<std::size_t> batch = {0};
  CHECK_THROWS_AS(expectile_update_nu(est, feat, batch, 0.0, opt),
                  std::invalid_argument);
  CHECK_THROWS_AS(expectile_update_nu(est, feat, batch, 1.0, opt),
                  std::invalid_argument);
  cfg.alpha = 1.5;
  CHECK_THROWS_AS(ValueEstimatorPair(*env, cfg), std::invalid_argument);
}

TEST_CASE("recurrent estimator fits a short history dependence") {
  const GameTree tree = two_step_tree();
  const TreeEnvironment env("two_step", tree);
  Dataset ds;
  ds.game_id = "two_step";
  ds.trajectories.push_back(
      make_traj({{0.0, 0.0, 0.0, 0.0}, {2.0, 0.0, 0.0, 1.0}}));
  ds.trajectories.push_back(
      make_traj({{0.0, 0.0, 0.0, 0.0}, {2.0, 1.0, 0.0, 6.0}}));
  EstimatorConfig cfg = fast_config(0.5, 12);
  cfg.arch = EstimatorConfig::Arch::kLstm;
  cfg.hidden_dim = 32;
  ValueEstimatorPair est(env, cfg);
  EstimatorFeatures feat(env, ds, cfg.context_length);
  fit_minimax(est, feat, 400, 0.5);
  const auto values = est.nu_values(feat);
  for (std::size_t i = 0; i < feat.sample_count(); ++i) {
    CHECK(std::abs(values[i] - feat.rtg(i)) < 0.15);
  }
}
