#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "ardt/environment.hpp"
#include "ardt/ops.hpp"
#include "ardt/optimizer.hpp"
#include "ardt/trajectory.hpp"

namespace ardt {

// Per-step training rows shared by both estimator networks. The history
// window holds the last K joint steps before t, each flattened to
// (state features, protagonist one-hot, adversary one-hot, reward),
// zero-padded on the left.
class EstimatorFeatures {
 public:
  EstimatorFeatures(const Environment& env, const Dataset& ds,
                    int context_length);

  std::size_t sample_count() const { return rewards_.size(); }
  int nu_input_dim() const { return window_dim_ + state_dim_ + p_dim_; }
  int omega_input_dim() const { return nu_input_dim() + adv_dim_; }

  // Row `i` of the nu input ((history, s_t, a_t)); omega appends the
  // adversary one-hot.
  void fill_nu_row(std::size_t i, std::span<double> out) const;
  void fill_omega_row(std::size_t i, std::span<double> out) const;

  double reward(std::size_t i) const { return rewards_[i]; }
  double rtg(std::size_t i) const { return rtgs_[i]; }
  bool terminal(std::size_t i) const { return next_index_[i] < 0; }
  // Sample index of step t+1 in the same trajectory (-1 at terminal).
  std::ptrdiff_t next_index(std::size_t i) const { return next_index_[i]; }
  // (trajectory, t) for sample i.
  std::pair<std::size_t, std::size_t> locate(std::size_t i) const {
    return {traj_of_[i], t_of_[i]};
  }

 private:
  int window_dim_ = 0;
  int state_dim_ = 0;
  int p_dim_ = 0;
  int adv_dim_ = 0;
  int context_ = 0;
  int step_dim_ = 0;

  std::vector<double> windows_;  // [N, window_dim]
  std::vector<double> states_;   // [N, state_dim]
  std::vector<int> p_actions_;
  std::vector<int> adv_actions_;  // kNoAdversaryAction allowed
  std::vector<double> rewards_;
  std::vector<double> rtgs_;
  std::vector<std::ptrdiff_t> next_index_;
  std::vector<std::size_t> traj_of_;
  std::vector<std::size_t> t_of_;
};

struct EstimatorConfig {
  enum class Arch { kMlp, kLstm };
  Arch arch = Arch::kMlp;
  int context_length = 4;  // matches the policy context
  int hidden_dim = 128;
  double alpha = 0.01;      // expectile level
  double leaf_weight = 0.9;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  int batch_size = 128;
  int warmup_epochs = 2;
  std::uint64_t seed = 0;
};

// The coupled estimators: q_tilde(history, s, a) approximates the
// in-sample minimax return-to-go; q_joint(history, s, a, adv) the
// adversary-conditioned continuation. Updated by alternating expectile
// regression with snapshot targets.
class ValueEstimatorPair {
 public:
  struct Net;

  ValueEstimatorPair(const Environment& env, EstimatorConfig cfg);

  const EstimatorConfig& config() const { return cfg_; }

  // Batched forward passes over feature rows.
  nn::Tensor nu_forward(const EstimatorFeatures& feat,
                        std::span<const std::size_t> rows) const;
  nn::Tensor omega_forward(const EstimatorFeatures& feat,
                           std::span<const std::size_t> rows) const;

  std::vector<nn::Tensor> nu_params() const;
  std::vector<nn::Tensor> omega_params() const;
  std::vector<std::pair<std::string, nn::Tensor>> named_params() const;

  // Predicted q_tilde for every step of the dataset, ordered like
  // EstimatorFeatures rows.
  std::vector<double> nu_values(const EstimatorFeatures& feat) const;

 private:
  nn::Tensor forward_net(const Net& net, const EstimatorFeatures& feat,
                         std::span<const std::size_t> rows, bool with_adv) const;

  EstimatorConfig cfg_;
  int state_dim_ = 0;
  int p_dim_ = 0;
  int adv_dim_ = 0;
  std::shared_ptr<Net> nu_;
  std::shared_ptr<Net> omega_;
};

// Plain MSE regression of both networks toward observed returns-to-go
// (terminal steps are their own anchor since rtg there equals the final
// reward). Returns the last epoch's mean loss.
double warmup_estimators(ValueEstimatorPair& est, const EstimatorFeatures& feat,
                         int epochs, nn::AdamW& nu_opt, nn::AdamW& omega_opt,
                         Rng& rng);

// One gradient step each; targets use detached snapshots of the other
// network. Exposed separately for tests; fit_minimax drives them.
double expectile_update_omega(ValueEstimatorPair& est,
                              const EstimatorFeatures& feat,
                              std::span<const std::size_t> batch, double alpha,
                              nn::AdamW& opt);
double expectile_update_nu(ValueEstimatorPair& est,
                           const EstimatorFeatures& feat,
                           std::span<const std::size_t> batch, double alpha,
                           nn::AdamW& opt);

struct FitResult {
  double final_omega_loss = 0.0;
  double final_nu_loss = 0.0;
};

// Warmup followed by `iterations` alternating passes over the dataset.
FitResult fit_minimax(ValueEstimatorPair& est, const EstimatorFeatures& feat,
                      int iterations, double alpha);

}  // namespace ardt
