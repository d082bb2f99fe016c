#include "ardt/collect.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ardt {

Trajectory rollout_trajectory(const Environment& env, Policy& protagonist,
                              Policy& adversary, Rng& rng) {
  Trajectory traj;
  auto ep = env.start();
  while (!ep->done()) {
    Step step;
    step.state = ep->state_encoding();
    step.p_action = protagonist.act(*ep, rng);
    ep->apply_protagonist(step.p_action, rng);
    if (ep->awaiting_adversary()) {
      step.adv_action = adversary.act(*ep, rng);
      ep->apply_adversary(step.adv_action, rng);
    } else {
      step.adv_action = kNoAdversaryAction;
    }
    step.reward = ep->last_reward();
    traj.steps.push_back(std::move(step));
  }
  fill_returns_to_go(traj);
  return traj;
}

Dataset collect_dataset(const CollectionConfig& cfg) {
  if (cfg.budget.value <= 0) {
    throw std::invalid_argument("collection budget must be positive");
  }
  if (cfg.protagonist.role != PolicyRole::kProtagonist ||
      cfg.adversary.role != PolicyRole::kAdversary) {
    throw std::invalid_argument("policy roles do not match their slots");
  }
  const auto env = make_environment(cfg.game_id);
  const auto protagonist = make_policy(cfg.protagonist, *env);
  const auto adversary = make_policy(cfg.adversary, *env);

  Dataset ds;
  ds.game_id = cfg.game_id;
  std::int64_t steps = 0;
  for (std::uint64_t i = 0;; ++i) {
    if (cfg.budget.kind == CollectionBudget::Kind::kTrajectories &&
        static_cast<std::int64_t>(i) >= cfg.budget.value) {
      break;
    }
    if (cfg.budget.kind == CollectionBudget::Kind::kSteps &&
        steps >= cfg.budget.value) {
      break;
    }
    Rng rng = make_stream(cfg.seed, i);
    Trajectory traj = rollout_trajectory(*env, *protagonist, *adversary, rng);
    steps += static_cast<std::int64_t>(traj.length());
    ds.trajectories.push_back(std::move(traj));
  }

  ds.meta.protagonist = cfg.protagonist.to_string();
  ds.meta.adversary = cfg.adversary.to_string();
  ds.meta.budget_kind =
      cfg.budget.kind == CollectionBudget::Kind::kTrajectories
          ? "n_trajectories"
          : "n_steps";
  ds.meta.budget_value = cfg.budget.value;
  ds.meta.seed = cfg.seed;
  ds.meta.n_trajectories = static_cast<std::int64_t>(ds.trajectories.size());
  ds.meta.n_steps = steps;
  return ds;
}

Dataset mix_datasets(const Dataset& d1, const Dataset& d2, double ratio,
                     std::uint64_t seed) {
  if (d1.game_id != d2.game_id) {
    throw std::invalid_argument("cannot mix datasets from games '" +
                                d1.game_id + "' and '" + d2.game_id + "'");
  }
  if (!(ratio > 0.0) || !std::isfinite(ratio)) {
    throw std::invalid_argument("mix ratio must be positive and finite");
  }
  const auto n1_all = static_cast<std::int64_t>(d1.trajectories.size());
  const auto n2_all = static_cast<std::int64_t>(d2.trajectories.size());
  std::int64_t n1, n2;
  if (ratio <= 1.0) {
    n2 = n2_all;
    n1 = std::min(n1_all, static_cast<std::int64_t>(
                              std::llround(ratio * static_cast<double>(n2))));
  } else {
    n1 = n1_all;
    n2 = std::min(n2_all, static_cast<std::int64_t>(std::llround(
                              static_cast<double>(n1) / ratio)));
  }

  const auto subsample = [&](const Dataset& d, std::int64_t n,
                             std::uint64_t stream) {
    std::vector<std::size_t> idx;
    const auto total = d.trajectories.size();
    if (static_cast<std::size_t>(n) >= total) {
      idx.resize(total);
      for (std::size_t i = 0; i < total; ++i) idx[i] = i;
    } else {
      Rng rng = make_stream(seed, stream);
      idx = rng.permutation(total);
      idx.resize(static_cast<std::size_t>(n));
      std::sort(idx.begin(), idx.end());
    }
    return idx;
  };

  Dataset out;
  out.game_id = d1.game_id;
  for (const std::size_t i : subsample(d1, n1, 0)) {
    out.trajectories.push_back(d1.trajectories[i]);
  }
  for (const std::size_t i : subsample(d2, n2, 1)) {
    out.trajectories.push_back(d2.trajectories[i]);
  }
  out.meta.seed = seed;
  out.meta.budget_kind = "n_trajectories";
  out.meta.budget_value = n1 + n2;
  out.meta.n_trajectories = static_cast<std::int64_t>(out.trajectories.size());
  out.meta.n_steps = out.total_steps();
  out.meta.provenance = "mix(" + std::to_string(n1) + " of [" +
                        d1.meta.protagonist + "/" + d1.meta.adversary + "], " +
                        std::to_string(n2) + " of [" + d2.meta.protagonist +
                        "/" + d2.meta.adversary + "])";
  out.meta.protagonist = "mixed";
  out.meta.adversary = "mixed";
  return out;
}

}  // namespace ardt
