#include "ardt/game_tree.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

#include "ardt/util.hpp"
#include "json.hpp"

namespace ardt {
namespace {

constexpr double kProbTol = 1e-12;
constexpr double kTieTol = 1e-12;

const TreeEdge& find_edge(const TreeNode& node, int action,
                          const char* node_desc, int node_index) {
  for (const auto& e : node.edges) {
    if (e.action == action) return e;
  }
  throw std::invalid_argument(std::string("illegal action ") +
                              std::to_string(action) + " at " + node_desc +
                              " node " + std::to_string(node_index));
}

// Follows chance nodes until a decision/terminal node; accumulates rewards.
TraversalResult resolve_chance(const GameTree& tree, int node, double reward,
                               Rng& rng) {
  while (tree.at(node).kind == NodeKind::kChance) {
    const auto& edges = tree.at(node).edges;
    const double u = rng.uniform();
    double acc = 0.0;
    const TreeEdge* chosen = &edges.back();
    for (const auto& e : edges) {
      acc += e.prob;
      if (u < acc) {
        chosen = &e;
        break;
      }
    }
    reward += chosen->reward;
    node = chosen->to;
  }
  return {node, reward};
}

}  // namespace

void GameTree::validate() const {
  if (nodes.empty()) throw std::invalid_argument("game tree has no nodes");
  if (root < 0 || root >= static_cast<int>(nodes.size())) {
    throw std::invalid_argument("game tree root out of range");
  }
  std::vector<int> state(nodes.size(), 0);  // 0 unvisited, 1 on stack, 2 done
  std::function<void(int)> visit = [&](int i) {
    if (state[static_cast<std::size_t>(i)] == 1) {
      throw std::invalid_argument("game tree contains a cycle");
    }
    if (state[static_cast<std::size_t>(i)] == 2) return;
    state[static_cast<std::size_t>(i)] = 1;
    const TreeNode& n = nodes[static_cast<std::size_t>(i)];
    if (n.kind == NodeKind::kTerminal) {
      if (!n.edges.empty()) {
        throw std::invalid_argument("terminal node has outgoing edges");
      }
    } else {
      if (n.edges.empty()) {
        throw std::invalid_argument("non-terminal leaf at node " +
                                    std::to_string(i));
      }
      double prob_sum = 0.0;
      for (const auto& e : n.edges) {
        if (e.to < 0 || e.to >= static_cast<int>(nodes.size())) {
          throw std::invalid_argument("edge target out of range");
        }
        if (!std::isfinite(e.reward)) {
          throw std::invalid_argument("non-finite edge reward");
        }
        if (n.kind == NodeKind::kChance) {
          prob_sum += e.prob;
        } else if (e.action < 0) {
          throw std::invalid_argument("decision edge missing action index");
        }
        visit(e.to);
      }
      if (n.kind == NodeKind::kChance && std::abs(prob_sum - 1.0) > kProbTol) {
        throw std::invalid_argument("chance probabilities do not sum to 1");
      }
    }
    state[static_cast<std::size_t>(i)] = 2;
  };
  visit(root);
}

void GameTree::compute_h_max() {
  // Joint steps: each protagonist decision starts a step.
  std::function<int(int)> depth = [&](int i) -> int {
    const TreeNode& n = at(i);
    if (n.kind == NodeKind::kTerminal) return 0;
    int best = 0;
    for (const auto& e : n.edges) best = std::max(best, depth(e.to));
    return n.kind == NodeKind::kProtagonist ? best + 1 : best;
  };
  h_max = depth(root);
}

namespace {

struct TreeBuilder {
  GameTree tree;

  int add(NodeKind kind) {
    tree.nodes.push_back(TreeNode{kind, {}});
    return static_cast<int>(tree.nodes.size()) - 1;
  }
  void edge(int from, int action, int to, double reward) {
    tree.nodes[static_cast<std::size_t>(from)].edges.push_back(
        TreeEdge{action, 0.0, reward, to});
  }
  void chance_edge(int from, double prob, int to, double reward = 0.0) {
    tree.nodes[static_cast<std::size_t>(from)].edges.push_back(
        TreeEdge{-1, prob, reward, to});
  }
  // Adversary node whose edges all lead to fresh terminals with the given
  // payoffs; local adversary action indices 0..n-1.
  int adversary_leaf(const std::vector<double>& payoffs) {
    const int a = add(NodeKind::kAdversary);
    for (std::size_t i = 0; i < payoffs.size(); ++i) {
      const int t = add(NodeKind::kTerminal);
      edge(a, static_cast<int>(i), t, payoffs[i]);
    }
    return a;
  }
  GameTree finish(int root) {
    tree.root = root;
    tree.validate();
    tree.compute_h_max();
    return std::move(tree);
  }
};

GameTree make_single_stage() {
  TreeBuilder b;
  const int root = b.add(NodeKind::kProtagonist);
  b.edge(root, 0, b.adversary_leaf({0.0, 5.0, 6.0}), 0.0);
  b.edge(root, 1, b.adversary_leaf({6.0, 1.0}), 0.0);
  return b.finish(root);
}

GameTree make_gambling() {
  TreeBuilder b;
  const int root = b.add(NodeKind::kProtagonist);
  b.edge(root, 0, b.adversary_leaf({5.0, -15.0}), 0.0);
  b.edge(root, 1, b.adversary_leaf({1.0, -6.0}), 0.0);
  b.edge(root, 2, b.adversary_leaf({1.0}), 0.0);
  return b.finish(root);
}

GameTree make_multi_stage() {
  TreeBuilder b;
  const int root = b.add(NodeKind::kProtagonist);
  // Leaf payoff pairs per second-stage protagonist action, indexed as
  // [root action][adversary action][protagonist action] -> {payoff, payoff}.
  const std::vector<std::vector<std::vector<std::vector<double>>>> payoffs = {
      {{{4.0, 5.0}, {0.0, 0.0}}, {{5.0, 4.0}, {0.0, 0.0}}},
      {{{7.0, 0.0}, {1.0, 1.0}}, {{7.0, 0.0}, {6.0, 6.0}}},
  };
  for (int a = 0; a < 2; ++a) {
    const int adv = b.add(NodeKind::kAdversary);
    b.edge(root, a, adv, 0.0);
    for (int j = 0; j < 2; ++j) {
      const int mid = b.add(NodeKind::kProtagonist);
      b.edge(adv, j, mid, 0.0);
      for (int k = 0; k < 2; ++k) {
        b.edge(mid, k, b.adversary_leaf(payoffs[a][j][k]), 0.0);
      }
    }
  }
  return b.finish(root);
}

// Single-stage game with the second action routed through a 0.1 / 0.9
// chance node before the adversary replies.
GameTree make_stochastic() {
  TreeBuilder b;
  const int root = b.add(NodeKind::kProtagonist);
  b.edge(root, 0, b.adversary_leaf({0.0, 5.0, 6.0}), 0.0);
  const int chance = b.add(NodeKind::kChance);
  b.edge(root, 1, chance, 0.0);
  b.chance_edge(chance, 0.1, b.adversary_leaf({0.0, 6.0}));
  b.chance_edge(chance, 0.9, b.adversary_leaf({1.0, 6.0}));
  return b.finish(root);
}

}  // namespace

std::vector<std::string> builtin_game_names() {
  return {"single_stage", "multi_stage", "gambling", "stochastic"};
}

bool is_builtin_game(const std::string& name) {
  const auto names = builtin_game_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

GameTree builtin_game(const std::string& name) {
  if (name == "single_stage") return make_single_stage();
  if (name == "multi_stage") return make_multi_stage();
  if (name == "gambling") return make_gambling();
  if (name == "stochastic") return make_stochastic();
  std::string valid;
  for (const auto& n : builtin_game_names()) valid += " " + n;
  throw std::invalid_argument("unknown game '" + name + "'; valid names:" +
                              valid);
}

GameTree load_game_tree(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(read_file(path));
  GameTree tree;
  tree.root = j.at("root").get<int>();
  for (const auto& jn : j.at("nodes")) {
    TreeNode node;
    const std::string kind = jn.at("kind").get<std::string>();
    if (kind == "P") {
      node.kind = NodeKind::kProtagonist;
    } else if (kind == "A") {
      node.kind = NodeKind::kAdversary;
    } else if (kind == "C") {
      node.kind = NodeKind::kChance;
    } else if (kind == "T") {
      node.kind = NodeKind::kTerminal;
    } else {
      throw std::invalid_argument("unknown node kind '" + kind + "'");
    }
    if (jn.contains("edges")) {
      for (const auto& je : jn.at("edges")) {
        TreeEdge e;
        e.action = je.at("action").is_null() ? -1 : je.at("action").get<int>();
        e.prob = je.at("prob").is_null() ? 0.0 : je.at("prob").get<double>();
        e.reward = je.at("reward").get<double>();
        e.to = je.at("to").get<int>();
        node.edges.push_back(e);
      }
    }
    tree.nodes.push_back(std::move(node));
  }
  tree.validate();
  tree.compute_h_max();
  return tree;
}

void save_game_tree(const GameTree& tree, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["root"] = tree.root;
  j["nodes"] = nlohmann::ordered_json::array();
  for (const auto& node : tree.nodes) {
    nlohmann::ordered_json jn;
    switch (node.kind) {
      case NodeKind::kProtagonist: jn["kind"] = "P"; break;
      case NodeKind::kAdversary: jn["kind"] = "A"; break;
      case NodeKind::kChance: jn["kind"] = "C"; break;
      case NodeKind::kTerminal: jn["kind"] = "T"; break;
    }
    jn["edges"] = nlohmann::ordered_json::array();
    for (const auto& e : node.edges) {
      nlohmann::ordered_json je;
      if (e.action >= 0) {
        je["action"] = e.action;
        je["prob"] = nullptr;
      } else {
        je["action"] = nullptr;
        je["prob"] = e.prob;
      }
      je["reward"] = e.reward;
      je["to"] = e.to;
      jn["edges"].push_back(je);
    }
    j["nodes"].push_back(jn);
  }
  write_file(path, j.dump(2) + "\n");
}

TraversalResult follow_protagonist_edge(const GameTree& tree, int node, int a,
                                        Rng& rng) {
  const TreeNode& n = tree.at(node);
  if (n.kind != NodeKind::kProtagonist) {
    throw std::invalid_argument("node " + std::to_string(node) +
                                " is not a protagonist node");
  }
  const TreeEdge& e = find_edge(n, a, "protagonist", node);
  return resolve_chance(tree, e.to, e.reward, rng);
}

TraversalResult follow_adversary_edge(const GameTree& tree, int node, int adv,
                                      Rng& rng) {
  const TreeNode& n = tree.at(node);
  if (n.kind != NodeKind::kAdversary) {
    throw std::invalid_argument("node " + std::to_string(node) +
                                " is not an adversary node");
  }
  const TreeEdge& e = find_edge(n, adv, "adversary", node);
  return resolve_chance(tree, e.to, e.reward, rng);
}

TreeStepResult tree_transition(const GameTree& tree, int node, int a, int adv,
                               Rng& rng) {
  TraversalResult r = follow_protagonist_edge(tree, node, a, rng);
  TreeStepResult step;
  if (tree.at(r.node).kind == NodeKind::kAdversary) {
    const TraversalResult r2 = follow_adversary_edge(tree, r.node, adv, rng);
    step.node = r2.node;
    step.reward = r.reward + r2.reward;
    step.adversary_acted = true;
  } else {
    step.node = r.node;
    step.reward = r.reward;
  }
  step.done = tree.at(step.node).kind == NodeKind::kTerminal;
  return step;
}

namespace {

void enumerate_from(const GameTree& tree, int node, double prob, double reward,
                    int adv, bool adversary_acted,
                    std::vector<StepOutcome>& out) {
  const TreeNode& n = tree.at(node);
  switch (n.kind) {
    case NodeKind::kChance:
      for (const auto& e : n.edges) {
        enumerate_from(tree, e.to, prob * e.prob, reward + e.reward, adv,
                       adversary_acted, out);
      }
      return;
    case NodeKind::kAdversary: {
      if (adversary_acted) {
        // Two adversary nodes inside one joint step would need two
        // adversary actions; the step model does not allow that.
        throw std::invalid_argument(
            "joint step crosses two adversary nodes; malformed tree");
      }
      if (adv < 0) return;  // branch infeasible for a chance-resolved record
      const TreeEdge& e = find_edge(n, adv, "adversary", node);
      enumerate_from(tree, e.to, prob, reward + e.reward, adv, true, out);
      return;
    }
    case NodeKind::kProtagonist:
    case NodeKind::kTerminal:
      out.push_back(StepOutcome{prob, reward, node, adversary_acted});
      return;
  }
}

}  // namespace

std::vector<StepOutcome> enumerate_step_outcomes(const GameTree& tree, int node,
                                                 int a, int adv) {
  const TreeNode& n = tree.at(node);
  if (n.kind != NodeKind::kProtagonist) {
    throw std::invalid_argument("node " + std::to_string(node) +
                                " is not a protagonist node");
  }
  const TreeEdge& e = find_edge(n, a, "protagonist", node);
  std::vector<StepOutcome> out;
  enumerate_from(tree, e.to, 1.0, e.reward, adv, false, out);
  return out;
}

MaximinSolution solve_maximin(const GameTree& tree) {
  MaximinSolution sol;
  sol.value.assign(tree.nodes.size(), 0.0);
  sol.optimal_actions.assign(tree.nodes.size(), {});
  std::vector<bool> done(tree.nodes.size(), false);

  std::function<double(int)> solve = [&](int i) -> double {
    if (done[static_cast<std::size_t>(i)])
      return sol.value[static_cast<std::size_t>(i)];
    const TreeNode& n = tree.at(i);
    double v = 0.0;
    std::vector<int> best;
    switch (n.kind) {
      case NodeKind::kTerminal:
        v = 0.0;
        break;
      case NodeKind::kChance: {
        for (const auto& e : n.edges) v += e.prob * (e.reward + solve(e.to));
        break;
      }
      case NodeKind::kProtagonist:
      case NodeKind::kAdversary: {
        const bool maximize = n.kind == NodeKind::kProtagonist;
        bool first = true;
        for (const auto& e : n.edges) {
          const double q = e.reward + solve(e.to);
          if (first || (maximize ? q > v + kTieTol : q < v - kTieTol)) {
            if (first || std::abs(q - v) > kTieTol) best.clear();
            v = first ? q : (maximize ? std::max(v, q) : std::min(v, q));
            best.push_back(e.action);
            first = false;
          } else if (std::abs(q - v) <= kTieTol) {
            best.push_back(e.action);
          }
        }
        break;
      }
    }
    sol.value[static_cast<std::size_t>(i)] = v;
    sol.optimal_actions[static_cast<std::size_t>(i)] = std::move(best);
    done[static_cast<std::size_t>(i)] = true;
    return v;
  };
  solve(tree.root);
  return sol;
}

}  // namespace ardt
