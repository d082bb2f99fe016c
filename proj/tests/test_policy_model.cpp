#include <cmath>
#include <filesystem>

#include "ardt/collect.hpp"
#include "ardt/policy_model.hpp"
#include "ardt/util.hpp"
#include "doctest.h"

using namespace ardt;

namespace {

DTConfig small_config(const Environment& env, std::uint64_t seed) {
  DTConfig cfg;
  cfg.context_length = 4;
  cfg.embed_dim = 32;
  cfg.n_layers = 2;
  cfg.n_heads = 2;
  cfg.dropout = 0.0;
  cfg.lr = 3e-3;
  cfg.warmup_steps = 10;
  cfg.batch_size = 32;
  cfg.action_count = env.protagonist_action_count();
  cfg.state_dim = env.state_feature_size();
  cfg.max_timestep = std::max(1, env.max_horizon());
  cfg.seed = seed;
  return cfg;
}

Trajectory single_stage_traj(int action, int adv, double reward) {
  Trajectory traj;
  traj.steps.push_back(Step{{0.0}, action, adv, reward});
  fill_returns_to_go(traj);
  return traj;
}

}  // namespace

TEST_CASE("tokenize pads short windows on the left") {
  const auto env = make_environment("single_stage");
  const Trajectory traj = single_stage_traj(0, 2, 6.0);
  const TokenizedWindow win = tokenize(traj, 0, 4, false, *env);
  CHECK(win.step_mask == std::vector<double>{0, 0, 0, 1});
  CHECK(win.returns[3] == doctest::Approx(6.0));
  CHECK(win.targets[3] == 0);
  // Pad slots use the reserved action id.
  CHECK(win.actions[0] == 2);
  CHECK_THROWS_WITH_AS(tokenize(traj, 0, 4, true, *env),
                       doctest::Contains("minimax_rtg"),
                       std::invalid_argument);
}

TEST_CASE("tokenize reads the relabeled channel when asked") {
  const auto env = make_environment("single_stage");
  Trajectory traj = single_stage_traj(0, 2, 6.0);
  traj.minimax_rtg = {0.0};
  const TokenizedWindow relabeled = tokenize(traj, 0, 4, true, *env);
  CHECK(relabeled.returns[3] == doctest::Approx(0.0));
  const TokenizedWindow observed = tokenize(traj, 0, 4, false, *env);
  CHECK(observed.returns[3] == doctest::Approx(6.0));
  CHECK(relabeled.targets[3] == observed.targets[3]);
}

TEST_CASE("causality: later tokens never affect earlier logits") {
  const auto env = make_environment("multi_stage");
  DecisionTransformer model(small_config(*env, 3));
  CollectionConfig ccfg;
  ccfg.game_id = "multi_stage";
  ccfg.budget = {CollectionBudget::Kind::kTrajectories, 1};
  ccfg.seed = 9;
  const Dataset ds = collect_dataset(ccfg);
  REQUIRE(ds.trajectories[0].length() == 2);

  TokenizedWindow win = tokenize(ds.trajectories[0], 1, 4, false, *env);
  const nn::Tensor before = model.forward_windows({win}, nullptr);
  // Perturb the final step's return and action tokens.
  win.returns[3] += 100.0;
  win.actions[3] = 0;
  const nn::Tensor after = model.forward_windows({win}, nullptr);
  const auto A = static_cast<std::size_t>(model.config().action_count);
  for (std::size_t slot = 0; slot < 3; ++slot) {
    for (std::size_t a = 0; a < A; ++a) {
      CHECK(before.data()[slot * A + a] == after.data()[slot * A + a]);
    }
  }
  // The perturbed slot's own logits do change (the return token feeds them).
  bool changed = false;
  for (std::size_t a = 0; a < A; ++a) {
    changed = changed || before.data()[3 * A + a] != after.data()[3 * A + a];
  }
  CHECK(changed);
}

TEST_CASE("padding neutrality: padded batch forward equals unpadded query") {
  const auto env = make_environment("single_stage");
  DecisionTransformer model(small_config(*env, 4));
  const Trajectory traj = single_stage_traj(1, 1, 1.0);

  // Padded training-style window, logits at the single real slot.
  const TokenizedWindow win = tokenize(traj, 0, 4, false, *env);
  const nn::Tensor logits = model.forward_windows({win}, nullptr);
  const auto A = static_cast<std::size_t>(model.config().action_count);
  std::vector<double> padded_row(logits.data().begin() + 3 * A,
                                 logits.data().begin() + 4 * A);
  double mx = padded_row[0];
  for (const double v : padded_row) mx = std::max(mx, v);
  double sum = 0.0;
  std::vector<double> padded_dist = padded_row;
  for (auto& v : padded_dist) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : padded_dist) v /= sum;

  // Unpadded inference path over the same single-step history.
  std::vector<double> features(
      static_cast<std::size_t>(env->state_feature_size()));
  env->state_features(traj.steps[0].state, features);
  const std::vector<HistoryStep> history = {
      HistoryStep{traj.rtg[0], features, -1, 0}};
  const std::vector<double> dist = model.action_distribution(history);
  for (std::size_t a = 0; a < A; ++a) {
    CHECK(dist[a] == doctest::Approx(padded_dist[a]).epsilon(1e-12));
  }
}

TEST_CASE("legal-action masking renormalizes and excludes illegal moves") {
  const auto env = make_environment("gambling");
  DecisionTransformer model(small_config(*env, 5));
  std::vector<double> features(
      static_cast<std::size_t>(env->state_feature_size()));
  features[0] = 1.0;
  const std::vector<HistoryStep> history = {HistoryStep{1.0, features, -1, 0}};
  const std::vector<double> dist = model.action_distribution(history);
  CHECK(std::abs(dist[0] + dist[1] + dist[2] - 1.0) < 1e-9);

  Rng rng(6);
  for (int i = 0; i < 50; ++i) {
    CHECK(model.act(history, {1}, ActionSelection::kSample, rng) == 1);
  }
  // Argmax over a restricted set stays within the set and is deterministic.
  const int a1 = model.act(history, {0, 2}, ActionSelection::kArgmax, rng);
  const int a2 = model.act(history, {0, 2}, ActionSelection::kArgmax, rng);
  CHECK(a1 == a2);
  CHECK((a1 == 0 || a1 == 2));
}

TEST_CASE("memorization: a single-class batch drives the loss to zero") {
  const auto env = make_environment("single_stage");
  DecisionTransformer model(small_config(*env, 7));
  const Trajectory traj = single_stage_traj(1, 0, 6.0);
  const TokenizedWindow win = tokenize(traj, 0, 4, false, *env);
  std::vector<TokenizedWindow> batch(16, win);
  nn::AdamWConfig opt_cfg;
  opt_cfg.lr = 3e-3;
  opt_cfg.warmup_steps = 10;
  nn::AdamW opt(model.params(), opt_cfg);
  Rng rng(8);
  double loss = 0.0;
  for (int step = 0; step < 200; ++step) {
    loss = model.train_step(batch, opt, rng);
  }
  CHECK(loss < 0.1);
}

TEST_CASE("entropy floor: uniform targets on identical inputs plateau at ln(m)") {
  const auto env = make_environment("gambling");
  DecisionTransformer model(small_config(*env, 9));
  Rng target_rng(10);
  std::vector<TokenizedWindow> batch;
  for (int i = 0; i < 64; ++i) {
    const int action = static_cast<int>(target_rng.uniform_int(3));
    const Trajectory traj = single_stage_traj(action, 0, 1.0);
    batch.push_back(tokenize(traj, 0, 4, false, *env));
  }
  nn::AdamWConfig opt_cfg;
  opt_cfg.lr = 3e-3;
  opt_cfg.warmup_steps = 10;
  nn::AdamW opt(model.params(), opt_cfg);
  Rng rng(11);
  double loss = 0.0;
  for (int step = 0; step < 300; ++step) {
    loss = model.train_step(batch, opt, rng);
  }
  // Identical inputs, three classes: cross-entropy cannot beat the
  // empirical class entropy, which is near ln(3).
  CHECK(loss > std::log(3.0) - 0.25);
  CHECK(loss < std::log(3.0) + 0.25);
}

TEST_CASE("conditioning sensitivity: argmax differs across return tokens") {
  // Two training populations: return 0 -> action 0, return 1 -> action 1.
  const auto env = make_environment("single_stage");
  DTConfig cfg = small_config(*env, 12);
  DecisionTransformer model(cfg);
  std::vector<TokenizedWindow> batch;
  for (int i = 0; i < 16; ++i) {
    Trajectory t0 = single_stage_traj(0, 0, 0.0);
    batch.push_back(tokenize(t0, 0, 4, false, *env));
    Trajectory t1 = single_stage_traj(1, 1, 1.0);
    batch.push_back(tokenize(t1, 0, 4, false, *env));
  }
  nn::AdamWConfig opt_cfg;
  opt_cfg.lr = 3e-3;
  opt_cfg.warmup_steps = 10;
  nn::AdamW opt(model.params(), opt_cfg);
  Rng rng(13);
  for (int step = 0; step < 300; ++step) model.train_step(batch, opt, rng);

  std::vector<double> features(
      static_cast<std::size_t>(env->state_feature_size()));
  features[0] = 1.0;
  Rng act_rng(14);
  const int at0 = model.act({HistoryStep{0.0, features, -1, 0}}, {0, 1},
                            ActionSelection::kArgmax, act_rng);
  const int at1 = model.act({HistoryStep{1.0, features, -1, 0}}, {0, 1},
                            ActionSelection::kArgmax, act_rng);
  CHECK(at0 == 0);
  CHECK(at1 == 1);
}

TEST_CASE("checkpoints round-trip bit-for-bit") {
  const auto env = make_environment("multi_stage");
  DecisionTransformer model(small_config(*env, 15));
  const auto path = std::filesystem::temp_directory_path() / "ardt_model.ckpt";
  model.save(path);
  const DecisionTransformer loaded = DecisionTransformer::load(path);
  const auto a = model.named_params();
  const auto b = loaded.named_params();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    const auto av = a[i].second.data();
    const auto bv = b[i].second.data();
    REQUIRE(av.size() == bv.size());
    for (std::size_t j = 0; j < av.size(); ++j) CHECK(av[j] == bv[j]);
  }
  std::filesystem::remove(path);
}

TEST_CASE("train_policy runs end to end and records the loss curve") {
  const auto env = make_environment("single_stage");
  CollectionConfig ccfg;
  ccfg.game_id = "single_stage";
  ccfg.budget = {CollectionBudget::Kind::kTrajectories, 64};
  ccfg.seed = 16;
  const Dataset ds = collect_dataset(ccfg);
  DTConfig cfg = small_config(*env, 17);
  cfg.training_steps = 30;
  cfg.batch_size = 16;
  DecisionTransformer model(cfg);
  const TrainResult result = train_policy(model, ds, *env, false);
  CHECK(result.loss_curve.size() == 30);
  const auto path = std::filesystem::temp_directory_path() / "ardt_loss.csv";
  write_loss_curve(result, path);
  const std::string csv = read_file(path);
  CHECK(csv.starts_with("step,loss\n"));
  std::filesystem::remove(path);
}
