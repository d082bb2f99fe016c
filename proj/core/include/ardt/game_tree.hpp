#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ardt/rng.hpp"

namespace ardt {

enum class NodeKind { kProtagonist, kAdversary, kChance, kTerminal };

struct TreeEdge {
  int action = -1;      // local action index; -1 on chance edges
  double prob = 0.0;    // branch probability on chance edges
  double reward = 0.0;  // collected when the edge is traversed
  int to = -1;
};

struct TreeNode {
  NodeKind kind = NodeKind::kTerminal;
  std::vector<TreeEdge> edges;
};

// Explicit two-player zero-sum game tree. Protagonist nodes branch on the
// protagonist's action, adversary nodes on the adversary's, chance nodes
// on probabilities summing to 1. Every leaf is terminal.
struct GameTree {
  std::vector<TreeNode> nodes;
  int root = 0;
  int h_max = 0;  // max joint steps on any root-to-leaf path

  const TreeNode& at(int i) const { return nodes[static_cast<std::size_t>(i)]; }

  // Throws std::invalid_argument on structural problems (cycles, dangling
  // edges, chance probabilities not summing to 1 within 1e-12).
  void validate() const;
  void compute_h_max();
};

// Canonical §4.1 / appendix games: single_stage, multi_stage, gambling,
// stochastic. Throws with the list of valid names on an unknown name.
GameTree builtin_game(const std::string& name);

bool is_builtin_game(const std::string& name);
std::vector<std::string> builtin_game_names();

GameTree load_game_tree(const std::filesystem::path& path);
void save_game_tree(const GameTree& tree, const std::filesystem::path& path);

// Result of one phase of traversal: the node reached after following an
// action edge and resolving any chance nodes, plus the reward picked up.
struct TraversalResult {
  int node = -1;
  double reward = 0.0;
};

// From a protagonist node, follow action `a` and resolve chance; stops at
// the first adversary / protagonist / terminal node.
TraversalResult follow_protagonist_edge(const GameTree& tree, int node, int a,
                                        Rng& rng);
// From an adversary node, follow action `adv` and resolve chance.
TraversalResult follow_adversary_edge(const GameTree& tree, int node, int adv,
                                      Rng& rng);

struct TreeStepResult {
  int node = -1;
  double reward = 0.0;
  bool done = false;
  bool adversary_acted = false;  // false when the step resolved by chance only
};

// One full joint step: protagonist edge, then (if an adversary node is
// reached) adversary edge. `adv` is ignored when no adversary node occurs.
TreeStepResult tree_transition(const GameTree& tree, int node, int a, int adv,
                               Rng& rng);

// Enumerates the joint-step outcome distribution for (node, a, adv):
// (probability, reward, landing node, whether an adversary node occurred).
// With adv < 0, branches that reach an adversary node are dropped, leaving
// only the chance-resolved outcomes.
struct StepOutcome {
  double prob = 0.0;
  double reward = 0.0;
  int node = -1;
  bool adversary_acted = false;
};
std::vector<StepOutcome> enumerate_step_outcomes(const GameTree& tree, int node,
                                                 int a, int adv);

// Exact backward induction. Values are from the protagonist's perspective;
// optimal move sets keep every argmax/argmin tie (tolerance 1e-12).
struct MaximinSolution {
  std::vector<double> value;
  std::vector<std::vector<int>> optimal_actions;
};
MaximinSolution solve_maximin(const GameTree& tree);

}  // namespace ardt
