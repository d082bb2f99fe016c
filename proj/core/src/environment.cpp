#include "ardt/environment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

namespace ardt {
namespace {

std::vector<int> edge_actions(const TreeNode& node) {
  std::vector<int> actions;
  actions.reserve(node.edges.size());
  for (const auto& e : node.edges) actions.push_back(e.action);
  std::sort(actions.begin(), actions.end());
  return actions;
}

}  // namespace

TreeEnvironment::TreeEnvironment(std::string id, GameTree tree)
    : id_(std::move(id)), tree_(std::move(tree)) {
  tree_.validate();
  tree_.compute_h_max();
  for (const auto& n : tree_.nodes) {
    int max_action = 0;
    for (const auto& e : n.edges) max_action = std::max(max_action, e.action + 1);
    if (n.kind == NodeKind::kProtagonist) {
      p_actions_ = std::max(p_actions_, max_action);
    } else if (n.kind == NodeKind::kAdversary) {
      adv_actions_ = std::max(adv_actions_, max_action);
    }
  }
}

std::unique_ptr<Episode> TreeEnvironment::start() const {
  return std::make_unique<TreeEpisode>(tree_);
}

void TreeEnvironment::state_features(std::span<const double> encoding,
                                     std::span<double> out) const {
  if (encoding.size() != 1) {
    throw std::invalid_argument("tree state encoding must be a single node id");
  }
  const auto node = static_cast<std::size_t>(encoding[0]);
  if (node >= tree_.nodes.size()) {
    throw std::invalid_argument("node id out of range");
  }
  std::fill(out.begin(), out.end(), 0.0);
  out[node] = 1.0;
}

void TreeEnvironment::check_game_legality(const Trajectory& traj,
                                          ValidationResult& result) const {
  // Walk the trajectory through the tree, following the support of each
  // recorded step. Chance outcomes are not recorded, so a step is legal if
  // some chance branch reproduces its (reward, next state) pair.
  int node = tree_.root;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const Step& step = traj.steps[t];
    if (step.state.size() != 1 ||
        static_cast<int>(step.state[0]) != node) {
      result.violations.push_back("state mismatch at t=" + std::to_string(t));
      return;
    }
    const TreeNode& n = tree_.at(node);
    const auto legal = edge_actions(n);
    if (std::find(legal.begin(), legal.end(), step.p_action) == legal.end()) {
      result.violations.push_back("illegal move at t=" + std::to_string(t));
      return;
    }
    std::vector<StepOutcome> outcomes;
    try {
      outcomes = enumerate_step_outcomes(tree_, node, step.p_action,
                                         step.adv_action);
    } catch (const std::invalid_argument&) {
      result.violations.push_back("illegal move at t=" + std::to_string(t));
      return;
    }
    const StepOutcome* matched = nullptr;
    for (const auto& o : outcomes) {
      const bool wants_adversary = step.adv_action != kNoAdversaryAction;
      if (o.adversary_acted == wants_adversary &&
          std::abs(o.reward - step.reward) <= 1e-9) {
        matched = &o;
        break;
      }
    }
    if (matched == nullptr) {
      result.violations.push_back("transition mismatch at t=" +
                                  std::to_string(t));
      return;
    }
    node = matched->node;
    const bool at_terminal = tree_.at(node).kind == NodeKind::kTerminal;
    const bool is_last = t + 1 == traj.steps.size();
    if (at_terminal != is_last) {
      result.violations.push_back(
          at_terminal ? "trajectory continues past terminal at t=" +
                            std::to_string(t)
                      : "trajectory ends before terminal");
      return;
    }
  }
}

TreeEpisode::TreeEpisode(const GameTree& tree)
    : tree_(tree), current_(tree.root) {}

std::vector<double> TreeEpisode::state_encoding() const {
  return {static_cast<double>(current_)};
}

std::vector<int> TreeEpisode::legal_protagonist_actions() const {
  if (done() || awaiting_adversary()) return {};
  return edge_actions(tree_.at(current_));
}

void TreeEpisode::apply_protagonist(int action, Rng& rng) {
  if (done()) throw std::logic_error("episode finished");
  if (awaiting_adversary()) throw std::logic_error("adversary to act");
  const TraversalResult r =
      follow_protagonist_edge(tree_, current_, action, rng);
  if (tree_.at(r.node).kind == NodeKind::kAdversary) {
    pending_adversary_ = r.node;
    pending_reward_ = r.reward;
  } else {
    current_ = r.node;
    last_reward_ = r.reward;
    last_had_adversary_ = false;
  }
}

std::vector<int> TreeEpisode::legal_adversary_actions() const {
  if (!awaiting_adversary()) return {};
  return edge_actions(tree_.at(pending_adversary_));
}

void TreeEpisode::apply_adversary(int action, Rng& rng) {
  if (!awaiting_adversary()) throw std::logic_error("protagonist to act");
  const TraversalResult r =
      follow_adversary_edge(tree_, pending_adversary_, action, rng);
  current_ = r.node;
  last_reward_ = pending_reward_ + r.reward;
  last_had_adversary_ = true;
  pending_adversary_ = -1;
  pending_reward_ = 0.0;
}

bool TreeEpisode::done() const {
  return pending_adversary_ < 0 &&
         tree_.at(current_).kind == NodeKind::kTerminal;
}

ConnectFourEnvironment::ConnectFourEnvironment(std::string id,
                                               ConnectFourConfig cfg)
    : id_(std::move(id)), cfg_(cfg) {
  ConnectFourState probe(cfg);  // validates the configuration
  (void)probe;
}

std::unique_ptr<Episode> ConnectFourEnvironment::start() const {
  return std::make_unique<ConnectFourEpisode>(cfg_);
}

void ConnectFourEnvironment::state_features(std::span<const double> encoding,
                                            std::span<double> out) const {
  if (encoding.size() != out.size() ||
      encoding.size() != static_cast<std::size_t>(cfg_.rows * cfg_.cols)) {
    throw std::invalid_argument("cell array size mismatch");
  }
  std::copy(encoding.begin(), encoding.end(), out.begin());
}

void ConnectFourEnvironment::check_game_legality(
    const Trajectory& traj, ValidationResult& result) const {
  ConnectFourState board(cfg_);
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const Step& step = traj.steps[t];
    if (step.state != board.encode()) {
      result.violations.push_back("state mismatch at t=" + std::to_string(t));
      return;
    }
    double reward = 0.0;
    try {
      reward = board.apply(step.p_action);
      if (!board.done()) {
        if (step.adv_action == kNoAdversaryAction) {
          result.violations.push_back("missing adversary action at t=" +
                                      std::to_string(t));
          return;
        }
        reward += board.apply(step.adv_action);
      } else if (step.adv_action != kNoAdversaryAction) {
        result.violations.push_back(
            "adversary action recorded after game end at t=" +
            std::to_string(t));
        return;
      }
    } catch (const std::invalid_argument&) {
      result.violations.push_back("illegal move at t=" + std::to_string(t));
      return;
    }
    if (std::abs(reward - step.reward) > 1e-9) {
      result.violations.push_back("reward mismatch at t=" + std::to_string(t));
      return;
    }
    const bool is_last = t + 1 == traj.steps.size();
    if (board.done() != is_last) {
      result.violations.push_back(
          board.done() ? "trajectory continues past terminal at t=" +
                             std::to_string(t)
                       : "trajectory ends before terminal");
      return;
    }
  }
}

std::vector<int> ConnectFourEpisode::legal_protagonist_actions() const {
  if (awaiting_adversary_ || state_.done()) return {};
  return state_.legal_moves();
}

void ConnectFourEpisode::apply_protagonist(int action, Rng&) {
  if (state_.done()) throw std::logic_error("episode finished");
  if (awaiting_adversary_) throw std::logic_error("adversary to act");
  last_reward_ = state_.apply(action);
  if (state_.done()) {
    last_had_adversary_ = false;
  } else {
    awaiting_adversary_ = true;
  }
}

std::vector<int> ConnectFourEpisode::legal_adversary_actions() const {
  if (!awaiting_adversary_) return {};
  return state_.legal_moves();
}

void ConnectFourEpisode::apply_adversary(int action, Rng&) {
  if (!awaiting_adversary_) throw std::logic_error("protagonist to act");
  last_reward_ += state_.apply(action);
  last_had_adversary_ = true;
  awaiting_adversary_ = false;
}

std::unique_ptr<Environment> make_environment(const std::string& game_id) {
  if (is_builtin_game(game_id)) {
    return std::make_unique<TreeEnvironment>(game_id, builtin_game(game_id));
  }
  if (game_id == "connect_four") {
    return std::make_unique<ConnectFourEnvironment>(game_id,
                                                    ConnectFourConfig{});
  }
  if (game_id.starts_with("connect_four:")) {
    ConnectFourConfig cfg;
    if (std::sscanf(game_id.c_str(), "connect_four:%dx%dx%d", &cfg.rows,
                    &cfg.cols, &cfg.k) != 3) {
      throw std::invalid_argument(
          "expected connect_four:<rows>x<cols>x<k>, got '" + game_id + "'");
    }
    return std::make_unique<ConnectFourEnvironment>(game_id, cfg);
  }
  if (std::filesystem::exists(game_id)) {
    return std::make_unique<TreeEnvironment>(game_id, load_game_tree(game_id));
  }
  std::string valid;
  for (const auto& n : builtin_game_names()) valid += " " + n;
  throw std::invalid_argument(
      "unknown game '" + game_id + "'; expected one of:" + valid +
      ", connect_four[:RxCxK], or a game-tree JSON path");
}

}  // namespace ardt
