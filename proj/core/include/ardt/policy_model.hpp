#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ardt/environment.hpp"
#include "ardt/ops.hpp"
#include "ardt/optimizer.hpp"
#include "ardt/trajectory.hpp"

namespace ardt {

struct DTConfig {
  int context_length = 4;  // joint steps per window
  int embed_dim = 64;
  int n_layers = 2;
  int n_heads = 2;
  double dropout = 0.1;
  double lr = 1e-4;
  double weight_decay = 1e-4;
  std::int64_t warmup_steps = 1000;
  int batch_size = 128;
  int training_steps = 5000;
  int action_count = 0;   // filled from the game
  int state_dim = 0;      // filled from the game
  int max_timestep = 1;   // filled from the game
  std::uint64_t seed = 0;

  std::string to_json() const;
  static DTConfig from_json(const std::string& json_text);
  void validate() const;
};

// One tokenized training window: per step slot a (return, state, action)
// triple; slots before the trajectory start are padding. The return
// channel holds minimax_rtg when `use_relabeled` is set, observed rtg
// otherwise. No adversary-action tokens are present.
struct TokenizedWindow {
  std::vector<double> returns;      // K
  std::vector<double> states;      // K * state_dim
  std::vector<std::size_t> actions;  // K; pad slots use the pad embedding id
  std::vector<std::size_t> timesteps;  // absolute trajectory step per slot
  std::vector<double> step_mask;   // K; 1 real, 0 pad
  std::vector<std::size_t> targets;  // K; protagonist action per real slot
};

TokenizedWindow tokenize(const Trajectory& traj, std::size_t t_end,
                         int context_length, bool use_relabeled,
                         const Environment& env);

enum class ActionSelection { kSample, kArgmax };

// Entry of a live inference history (one completed or current step).
struct HistoryStep {
  double return_channel = 0.0;  // running target at that step
  std::vector<double> state_features;
  int action = -1;  // -1 for the not-yet-acted current step
  std::size_t timestep = 0;
};

class DecisionTransformer {
 public:
  explicit DecisionTransformer(DTConfig cfg);

  const DTConfig& config() const { return cfg_; }

  // Action logits at the state-token position of every slot:
  // [batch * K, action_count]. `train_rng` enables dropout.
  nn::Tensor forward_windows(const std::vector<TokenizedWindow>& windows,
                             Rng* train_rng) const;

  // Cross-entropy over action logits at real (non-pad) slots, one
  // optimizer step. Returns the batch loss.
  double train_step(const std::vector<TokenizedWindow>& batch, nn::AdamW& opt,
                    Rng& train_rng);

  // Action distribution at the current state given the trailing history
  // (the last entry must be the current step with action == -1).
  std::vector<double> action_distribution(
      const std::vector<HistoryStep>& history) const;

  // Legal-action-masked selection; sampling renormalizes over legal moves.
  int act(const std::vector<HistoryStep>& history,
          const std::vector<int>& legal_actions, ActionSelection mode,
          Rng& rng) const;

  std::vector<nn::Tensor> params() const;
  std::vector<std::pair<std::string, nn::Tensor>> named_params() const;

  void save(const std::filesystem::path& path) const;
  static DecisionTransformer load(const std::filesystem::path& path);

 private:
  struct Block;

  nn::Tensor forward_tokens(const std::vector<double>& returns,
                            const std::vector<double>& states,
                            const std::vector<std::size_t>& action_ids,
                            const std::vector<std::size_t>& timesteps,
                            const std::vector<double>& token_mask,
                            std::size_t batch, std::size_t steps,
                            bool last_step_open, Rng* train_rng) const;

  DTConfig cfg_;
  nn::Tensor return_proj_, return_bias_;
  nn::Tensor state_proj_, state_bias_;
  nn::Tensor action_table_;  // [action_count + 1, d]; last row = pad id
  nn::Tensor time_table_;    // [max_timestep, d]
  std::vector<std::shared_ptr<Block>> blocks_;
  nn::Tensor final_gain_, final_bias_;
  nn::Tensor head_w_, head_b_;
};

struct TrainResult {
  std::vector<std::pair<std::int64_t, double>> loss_curve;  // (step, loss)
  double final_loss = 0.0;
};

// Uniformly samples (trajectory, t_end) windows and runs training_steps
// optimizer steps. Deterministic per config seed.
TrainResult train_policy(DecisionTransformer& model, const Dataset& ds,
                         const Environment& env, bool use_relabeled);

void write_loss_curve(const TrainResult& result,
                      const std::filesystem::path& path);

}  // namespace ardt
