#pragma once

#include <cstdint>
#include <string>

#include "ardt/policies.hpp"
#include "ardt/trajectory.hpp"

namespace ardt {

struct CollectionBudget {
  enum class Kind { kTrajectories, kSteps };
  Kind kind = Kind::kTrajectories;
  std::int64_t value = 0;
};

struct CollectionConfig {
  std::string game_id;
  PolicySpec protagonist{PolicySpec::Kind::kUniform, 0.0,
                         PolicyRole::kProtagonist, {}};
  PolicySpec adversary{PolicySpec::Kind::kUniform, 0.0,
                       PolicyRole::kAdversary, {}};
  CollectionBudget budget{CollectionBudget::Kind::kTrajectories, 1};
  std::uint64_t seed = 0;
};

// Rolls out the behavior-policy pair until the budget is met. Step budgets
// stop at the first trajectory boundary at or past the requested count.
// Deterministic given the config: trajectory i uses stream (seed, i).
Dataset collect_dataset(const CollectionConfig& cfg);

// Runs one episode and returns the trajectory (rtg filled).
Trajectory rollout_trajectory(const Environment& env, Policy& protagonist,
                              Policy& adversary, Rng& rng);

// Concatenates random subsamples of d1 and d2 at trajectory-count ratio
// |d1 sample| : |d2 sample| = ratio. The larger side keeps all of its
// trajectories. Throws on mismatched game ids.
Dataset mix_datasets(const Dataset& d1, const Dataset& d2, double ratio,
                     std::uint64_t seed);

}  // namespace ardt
