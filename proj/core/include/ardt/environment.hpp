#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ardt/connect_four.hpp"
#include "ardt/game_tree.hpp"
#include "ardt/rng.hpp"
#include "ardt/trajectory.hpp"

namespace ardt {

// A live episode. One joint step is: the protagonist acts, then (unless the
// game resolved the step by chance or ended) the adversary acts.
class Episode {
 public:
  virtual ~Episode() = default;

  // Game-specific encoding of the current protagonist decision state,
  // as stored in datasets.
  virtual std::vector<double> state_encoding() const = 0;
  virtual std::vector<int> legal_protagonist_actions() const = 0;

  virtual void apply_protagonist(int action, Rng& rng) = 0;
  virtual bool awaiting_adversary() const = 0;
  virtual std::vector<int> legal_adversary_actions() const = 0;
  virtual void apply_adversary(int action, Rng& rng) = 0;

  // Data for the joint step that just completed.
  virtual double last_reward() const = 0;
  virtual bool last_step_had_adversary() const = 0;
  virtual bool done() const = 0;
};

class TreeEpisode;
class ConnectFourEpisode;

// Static game description plus episode factory. Implementations are
// immutable and safely shared across threads.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual const std::string& id() const = 0;
  virtual int protagonist_action_count() const = 0;
  virtual int adversary_action_count() const = 0;
  virtual int state_feature_size() const = 0;
  virtual int max_horizon() const = 0;  // joint steps

  virtual std::unique_ptr<Episode> start() const = 0;

  // Fixed-width feature view of a stored state encoding (model input).
  virtual void state_features(std::span<const double> encoding,
                              std::span<double> out) const = 0;

  // Game-specific legality and transition checks; appends violations.
  virtual void check_game_legality(const Trajectory& traj,
                                   ValidationResult& result) const = 0;
};

class TreeEnvironment final : public Environment {
 public:
  TreeEnvironment(std::string id, GameTree tree);

  const std::string& id() const override { return id_; }
  int protagonist_action_count() const override { return p_actions_; }
  int adversary_action_count() const override { return adv_actions_; }
  int state_feature_size() const override {
    return static_cast<int>(tree_.nodes.size());
  }
  int max_horizon() const override { return tree_.h_max; }
  std::unique_ptr<Episode> start() const override;
  void state_features(std::span<const double> encoding,
                      std::span<double> out) const override;
  void check_game_legality(const Trajectory& traj,
                           ValidationResult& result) const override;

  const GameTree& tree() const { return tree_; }

 private:
  std::string id_;
  GameTree tree_;
  int p_actions_ = 0;
  int adv_actions_ = 0;
};

class ConnectFourEnvironment final : public Environment {
 public:
  ConnectFourEnvironment(std::string id, ConnectFourConfig cfg);

  const std::string& id() const override { return id_; }
  int protagonist_action_count() const override { return cfg_.cols; }
  int adversary_action_count() const override { return cfg_.cols; }
  int state_feature_size() const override { return cfg_.rows * cfg_.cols; }
  int max_horizon() const override { return (cfg_.rows * cfg_.cols + 1) / 2; }
  std::unique_ptr<Episode> start() const override;
  void state_features(std::span<const double> encoding,
                      std::span<double> out) const override;
  void check_game_legality(const Trajectory& traj,
                           ValidationResult& result) const override;

  const ConnectFourConfig& config() const { return cfg_; }

 private:
  std::string id_;
  ConnectFourConfig cfg_;
};

class TreeEpisode final : public Episode {
 public:
  explicit TreeEpisode(const GameTree& tree);

  std::vector<double> state_encoding() const override;
  std::vector<int> legal_protagonist_actions() const override;
  void apply_protagonist(int action, Rng& rng) override;
  bool awaiting_adversary() const override { return pending_adversary_ >= 0; }
  std::vector<int> legal_adversary_actions() const override;
  void apply_adversary(int action, Rng& rng) override;
  double last_reward() const override { return last_reward_; }
  bool last_step_had_adversary() const override { return last_had_adversary_; }
  bool done() const override;

  int current_node() const { return current_; }
  int adversary_node() const { return pending_adversary_; }

 private:
  const GameTree& tree_;
  int current_;
  int pending_adversary_ = -1;
  double pending_reward_ = 0.0;
  double last_reward_ = 0.0;
  bool last_had_adversary_ = false;
};

class ConnectFourEpisode final : public Episode {
 public:
  explicit ConnectFourEpisode(ConnectFourConfig cfg) : state_(cfg) {}

  std::vector<double> state_encoding() const override { return state_.encode(); }
  std::vector<int> legal_protagonist_actions() const override;
  void apply_protagonist(int action, Rng& rng) override;
  bool awaiting_adversary() const override { return awaiting_adversary_; }
  std::vector<int> legal_adversary_actions() const override;
  void apply_adversary(int action, Rng& rng) override;
  double last_reward() const override { return last_reward_; }
  bool last_step_had_adversary() const override { return last_had_adversary_; }
  bool done() const override { return state_.done(); }

  const ConnectFourState& board() const { return state_; }

 private:
  ConnectFourState state_;
  bool awaiting_adversary_ = false;
  double last_reward_ = 0.0;
  bool last_had_adversary_ = false;
};

// Accepts a builtin tree name, "connect_four" (4x5 board, k=4),
// "connect_four:<rows>x<cols>x<k>", or a path to a game-tree JSON file.
std::unique_ptr<Environment> make_environment(const std::string& game_id);

}  // namespace ardt
