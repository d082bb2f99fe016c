#include "ardt/trajectory.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "ardt/environment.hpp"

namespace ardt {

std::int64_t Dataset::total_steps() const {
  std::int64_t n = 0;
  for (const auto& t : trajectories) n += static_cast<std::int64_t>(t.length());
  return n;
}

std::vector<double> compute_returns_to_go(std::span<const double> rewards) {
  if (rewards.empty()) throw std::invalid_argument("empty reward sequence");
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc += rewards[i];
    out[i] = acc;
  }
  return out;
}

void fill_returns_to_go(Trajectory& traj) {
  std::vector<double> rewards;
  rewards.reserve(traj.steps.size());
  for (const auto& s : traj.steps) rewards.push_back(s.reward);
  traj.rtg = compute_returns_to_go(rewards);
}

ValidationResult validate_trajectory(const Trajectory& traj,
                                     const Environment& env) {
  ValidationResult result;
  if (traj.steps.empty()) {
    result.violations.push_back("empty trajectory");
    return result;
  }
  if (traj.rtg.size() != traj.steps.size()) {
    result.violations.push_back("rtg length mismatch");
  } else {
    constexpr double kTol = 1e-9;
    double acc = 0.0;
    for (std::size_t t = traj.steps.size(); t-- > 0;) {
      acc += traj.steps[t].reward;
      if (std::abs(traj.rtg[t] - acc) > kTol) {
        result.violations.push_back("rtg mismatch at t=" + std::to_string(t));
      }
    }
  }
  if (traj.has_minimax_rtg() &&
      traj.minimax_rtg.size() != traj.steps.size()) {
    result.violations.push_back("minimax_rtg length mismatch");
  }
  env.check_game_legality(traj, result);
  return result;
}

DatasetStats dataset_stats(const Dataset& ds) {
  if (ds.trajectories.empty()) {
    throw std::invalid_argument("dataset_stats: empty dataset");
  }
  DatasetStats stats;
  stats.n_trajectories = static_cast<std::int64_t>(ds.trajectories.size());
  double sum = 0.0, sum_sq = 0.0;
  for (const auto& traj : ds.trajectories) {
    stats.n_steps += static_cast<std::int64_t>(traj.length());
    stats.max_horizon = std::max(stats.max_horizon, traj.length());
    const double ret = traj.total_return();
    sum += ret;
    sum_sq += ret * ret;
    const double key = std::round(ret * 1e9) / 1e9;
    ++stats.return_histogram[key];
  }
  const double n = static_cast<double>(stats.n_trajectories);
  stats.mean_return = sum / n;
  const double var = std::max(0.0, sum_sq / n - stats.mean_return * stats.mean_return);
  stats.std_return = std::sqrt(var);
  return stats;
}

}  // namespace ardt
