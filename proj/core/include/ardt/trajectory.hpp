#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ardt {

class Environment;

// Sentinel for steps whose adversary slot was resolved by chance
// (or where the protagonist's move ended the game before the adversary
// could reply).
inline constexpr int kNoAdversaryAction = -1;

// One joint step: the protagonist and adversary act once each.
struct Step {
  std::vector<double> state;  // game-specific encoding of the decision state
  int p_action = 0;
  int adv_action = kNoAdversaryAction;
  double reward = 0.0;

  bool operator==(const Step&) const = default;
};

struct Trajectory {
  std::vector<Step> steps;
  std::vector<double> rtg;          // observed returns-to-go
  std::vector<double> minimax_rtg;  // relabeled values; empty until relabeling

  bool has_minimax_rtg() const { return !minimax_rtg.empty(); }
  std::size_t length() const { return steps.size(); }
  double total_return() const { return rtg.empty() ? 0.0 : rtg.front(); }

  bool operator==(const Trajectory&) const = default;
};

struct DatasetMeta {
  std::string protagonist;  // behavior-policy descriptor, e.g. "uniform", "eps:0.5"
  std::string adversary;
  std::string budget_kind;  // "n_trajectories" | "n_steps"
  std::int64_t budget_value = 0;
  std::uint64_t seed = 0;
  std::int64_t n_trajectories = 0;  // achieved counts
  std::int64_t n_steps = 0;
  std::string provenance;  // extra lineage, e.g. mixing description

  bool operator==(const DatasetMeta&) const = default;
};

// Immutable after collection; safe to share read-only across workers.
struct Dataset {
  std::string game_id;
  DatasetMeta meta;
  std::vector<Trajectory> trajectories;

  std::int64_t total_steps() const;

  bool operator==(const Dataset&) const = default;
};

// Suffix sums: out[t] = sum of rewards[t..H]. Throws on empty input.
std::vector<double> compute_returns_to_go(std::span<const double> rewards);

// Appends observed returns-to-go to a trajectory from its step rewards.
void fill_returns_to_go(Trajectory& traj);

struct ValidationResult {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

// Checks internal consistency (rtg suffix sums) and game legality
// (action legality, transition agreement where the game is deterministic).
ValidationResult validate_trajectory(const Trajectory& traj,
                                     const Environment& env);

struct DatasetStats {
  std::int64_t n_trajectories = 0;
  std::int64_t n_steps = 0;
  double mean_return = 0.0;
  double std_return = 0.0;
  std::size_t max_horizon = 0;
  // Return value -> trajectory count, keyed on values rounded to 1e-9.
  std::map<double, std::int64_t> return_histogram;
};

// Throws on an empty dataset.
DatasetStats dataset_stats(const Dataset& ds);

}  // namespace ardt
