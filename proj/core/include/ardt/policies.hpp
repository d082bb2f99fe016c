#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ardt/environment.hpp"
#include "ardt/rng.hpp"

namespace ardt {

enum class PolicyRole { kProtagonist, kAdversary };

struct PolicySpec {
  enum class Kind { kUniform, kEpsilonOptimal, kFixedTable };

  Kind kind = Kind::kUniform;
  double epsilon = 0.0;  // for kEpsilonOptimal; must be in [0, 1]
  PolicyRole role = PolicyRole::kProtagonist;
  // For kFixedTable: canonical state key -> action.
  std::map<std::string, int> table;

  // "uniform" or "eps:<float>" (optimality (1-eps)*100%).
  static PolicySpec parse(const std::string& text, PolicyRole role);
  std::string to_string() const;
};

// Behavior/test-time policy over one side of the game. Implementations may
// keep per-instance solver caches; instances are not shared across threads.
class Policy {
 public:
  virtual ~Policy() = default;
  // Picks an action for the side to act in `ep`. The episode must be
  // waiting on this policy's role.
  virtual int act(const Episode& ep, Rng& rng) = 0;
};

// Throws when an epsilon-optimal policy is requested for a game that the
// exact solvers cannot handle.
std::unique_ptr<Policy> make_policy(const PolicySpec& spec,
                                    const Environment& env);

}  // namespace ardt
