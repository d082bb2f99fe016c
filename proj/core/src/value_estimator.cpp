#include "ardt/value_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ardt {

EstimatorFeatures::EstimatorFeatures(const Environment& env, const Dataset& ds,
                                     int context_length)
    : state_dim_(env.state_feature_size()),
      p_dim_(env.protagonist_action_count()),
      adv_dim_(env.adversary_action_count()),
      context_(context_length) {
  if (context_ < 0) throw std::invalid_argument("context_length must be >= 0");
  step_dim_ = state_dim_ + p_dim_ + adv_dim_ + 1;
  window_dim_ = context_ * step_dim_;

  const std::size_t total = static_cast<std::size_t>(ds.total_steps());
  windows_.assign(total * static_cast<std::size_t>(window_dim_), 0.0);
  states_.assign(total * static_cast<std::size_t>(state_dim_), 0.0);
  p_actions_.reserve(total);
  adv_actions_.reserve(total);
  rewards_.reserve(total);
  rtgs_.reserve(total);
  next_index_.reserve(total);
  traj_of_.reserve(total);
  t_of_.reserve(total);

  std::vector<double> step_features;
  std::size_t row = 0;
  for (std::size_t ti = 0; ti < ds.trajectories.size(); ++ti) {
    const Trajectory& traj = ds.trajectories[ti];
    for (std::size_t t = 0; t < traj.steps.size(); ++t, ++row) {
      const Step& step = traj.steps[t];
      env.state_features(step.state,
                         std::span<double>(states_.data() + row * state_dim_,
                                           static_cast<std::size_t>(state_dim_)));
      p_actions_.push_back(step.p_action);
      adv_actions_.push_back(step.adv_action);
      rewards_.push_back(step.reward);
      rtgs_.push_back(traj.rtg[t]);
      next_index_.push_back(t + 1 < traj.steps.size()
                                ? static_cast<std::ptrdiff_t>(row + 1)
                                : -1);
      traj_of_.push_back(ti);
      t_of_.push_back(t);

      // History window: steps t-K .. t-1, right-aligned (slot K-1 = t-1).
      double* w = windows_.data() + row * static_cast<std::size_t>(window_dim_);
      for (int slot = 0; slot < context_; ++slot) {
        const std::ptrdiff_t src =
            static_cast<std::ptrdiff_t>(t) - context_ + slot;
        if (src < 0) continue;
        const Step& past = traj.steps[static_cast<std::size_t>(src)];
        double* dst = w + slot * step_dim_;
        step_features.assign(static_cast<std::size_t>(state_dim_), 0.0);
        env.state_features(past.state, step_features);
        std::copy(step_features.begin(), step_features.end(), dst);
        dst += state_dim_;
        if (past.p_action >= 0 && past.p_action < p_dim_) {
          dst[past.p_action] = 1.0;
        }
        dst += p_dim_;
        if (past.adv_action >= 0 && past.adv_action < adv_dim_) {
          dst[past.adv_action] = 1.0;
        }
        dst += adv_dim_;
        dst[0] = past.reward;
      }
    }
  }
}

void EstimatorFeatures::fill_nu_row(std::size_t i, std::span<double> out) const {
  const std::size_t w = static_cast<std::size_t>(window_dim_);
  const std::size_t s = static_cast<std::size_t>(state_dim_);
  std::copy_n(windows_.data() + i * w, w, out.data());
  std::copy_n(states_.data() + i * s, s, out.data() + w);
  std::fill(out.begin() + static_cast<std::ptrdiff_t>(w + s), out.end(), 0.0);
  out[w + s + static_cast<std::size_t>(p_actions_[i])] = 1.0;
}

void EstimatorFeatures::fill_omega_row(std::size_t i,
                                       std::span<double> out) const {
  const std::size_t nu_dim = static_cast<std::size_t>(nu_input_dim());
  fill_nu_row(i, out.subspan(0, nu_dim));
  std::fill(out.begin() + static_cast<std::ptrdiff_t>(nu_dim), out.end(), 0.0);
  const int adv = adv_actions_[i];
  if (adv >= 0 && adv < adv_dim_) out[nu_dim + static_cast<std::size_t>(adv)] = 1.0;
}

struct ValueEstimatorPair::Net {
  EstimatorConfig::Arch arch;
  int input_dim = 0;   // MLP: full flattened input
  int step_dim = 0;    // LSTM: per-step feature width
  int tail_dim = 0;    // LSTM: current (s, a[, adv]) width
  int hidden = 0;
  int context = 0;

  // MLP: in -> h -> h -> 1.
  nn::Tensor w1, b1, w2, b2, w3, b3;
  // LSTM over history steps; gates packed [i f g o].
  nn::Tensor wx, wh, bg;       // [step_dim, 4h], [h, 4h], [4h]
  nn::Tensor head_w1, head_b1; // [(h + tail_dim), h]
  nn::Tensor head_w2, head_b2; // [h, 1]

  std::vector<nn::Tensor> params() const {
    if (arch == EstimatorConfig::Arch::kMlp) {
      return {w1, b1, w2, b2, w3, b3};
    }
    return {wx, wh, bg, head_w1, head_b1, head_w2, head_b2};
  }
};

namespace {

std::shared_ptr<ValueEstimatorPair::Net> make_net(
    const EstimatorConfig& cfg, int step_dim, int tail_dim, Rng& rng) {
  auto net = std::make_shared<ValueEstimatorPair::Net>();
  net->arch = cfg.arch;
  net->hidden = cfg.hidden_dim;
  net->context = cfg.context_length;
  net->step_dim = step_dim;
  net->tail_dim = tail_dim;
  const auto h = static_cast<std::size_t>(cfg.hidden_dim);
  if (cfg.arch == EstimatorConfig::Arch::kMlp) {
    net->input_dim = cfg.context_length * step_dim + tail_dim;
    const auto in = static_cast<std::size_t>(net->input_dim);
    net->w1 = nn::Tensor::randn({in, h}, rng, 1.0 / std::sqrt(double(in)));
    net->b1 = nn::Tensor::zeros({h}, true);
    net->w2 = nn::Tensor::randn({h, h}, rng, 1.0 / std::sqrt(double(h)));
    net->b2 = nn::Tensor::zeros({h}, true);
    net->w3 = nn::Tensor::randn({h, 1}, rng, 1.0 / std::sqrt(double(h)));
    net->b3 = nn::Tensor::zeros({1}, true);
  } else {
    const auto sd = static_cast<std::size_t>(step_dim);
    const auto td = static_cast<std::size_t>(tail_dim);
    net->wx = nn::Tensor::randn({sd, 4 * h}, rng, 1.0 / std::sqrt(double(sd)));
    net->wh = nn::Tensor::randn({h, 4 * h}, rng, 1.0 / std::sqrt(double(h)));
    net->bg = nn::Tensor::zeros({4 * h}, true);
    net->head_w1 = nn::Tensor::randn({h + td, h}, rng,
                                     1.0 / std::sqrt(double(h + td)));
    net->head_b1 = nn::Tensor::zeros({h}, true);
    net->head_w2 = nn::Tensor::randn({h, 1}, rng, 1.0 / std::sqrt(double(h)));
    net->head_b2 = nn::Tensor::zeros({1}, true);
  }
  return net;
}

}  // namespace

ValueEstimatorPair::ValueEstimatorPair(const Environment& env,
                                       EstimatorConfig cfg)
    : cfg_(cfg),
      state_dim_(env.state_feature_size()),
      p_dim_(env.protagonist_action_count()),
      adv_dim_(env.adversary_action_count()) {
  if (cfg_.alpha <= 0.0 || cfg_.alpha >= 1.0) {
    throw std::invalid_argument("expectile level must be in (0, 1)");
  }
  if (cfg_.leaf_weight < 0.0 || cfg_.leaf_weight > 1.0) {
    throw std::invalid_argument("leaf weight must be in [0, 1]");
  }
  Rng rng = make_stream(cfg_.seed, 0x9e57);
  const int step_dim = state_dim_ + p_dim_ + adv_dim_ + 1;
  nu_ = make_net(cfg_, step_dim, state_dim_ + p_dim_, rng);
  omega_ = make_net(cfg_, step_dim, state_dim_ + p_dim_ + adv_dim_, rng);
}

nn::Tensor ValueEstimatorPair::forward_net(
    const Net& net, const EstimatorFeatures& feat,
    std::span<const std::size_t> rows, bool with_adv) const {
  const std::size_t batch = rows.size();
  const std::size_t full_dim = static_cast<std::size_t>(
      with_adv ? feat.omega_input_dim() : feat.nu_input_dim());
  std::vector<double> input(batch * full_dim);
  for (std::size_t r = 0; r < batch; ++r) {
    std::span<double> row(input.data() + r * full_dim, full_dim);
    if (with_adv) {
      feat.fill_omega_row(rows[r], row);
    } else {
      feat.fill_nu_row(rows[r], row);
    }
  }
  nn::Tensor x =
      nn::Tensor::from_values({batch, full_dim}, std::move(input), false);

  if (net.arch == EstimatorConfig::Arch::kMlp) {
    nn::Tensor h1 = nn::relu(nn::add(nn::matmul(x, net.w1), net.b1));
    nn::Tensor h2 = nn::relu(nn::add(nn::matmul(h1, net.w2), net.b2));
    return nn::add(nn::matmul(h2, net.w3), net.b3);
  }

  // Recurrent path: run the LSTM over the K window slots, then feed
  // [h_K, tail] through the head.
  const auto sd = static_cast<std::size_t>(net.step_dim);
  const auto h = static_cast<std::size_t>(net.hidden);
  const std::size_t window = static_cast<std::size_t>(net.context) * sd;
  nn::Tensor hidden = nn::Tensor::zeros({batch, h});
  nn::Tensor cell = nn::Tensor::zeros({batch, h});
  for (int slot = 0; slot < net.context; ++slot) {
    nn::Tensor xt = nn::slice_cols(x, static_cast<std::size_t>(slot) * sd, sd);
    nn::Tensor gates = nn::add(
        nn::add(nn::matmul(xt, net.wx), nn::matmul(hidden, net.wh)), net.bg);
    nn::Tensor ig = nn::sigmoid(nn::slice_cols(gates, 0, h));
    nn::Tensor fg = nn::sigmoid(nn::slice_cols(gates, h, h));
    nn::Tensor gg = nn::tanh_op(nn::slice_cols(gates, 2 * h, h));
    nn::Tensor og = nn::sigmoid(nn::slice_cols(gates, 3 * h, h));
    cell = nn::add(nn::mul(fg, cell), nn::mul(ig, gg));
    hidden = nn::mul(og, nn::tanh_op(cell));
  }
  nn::Tensor tail =
      nn::slice_cols(x, window, static_cast<std::size_t>(net.tail_dim));
  // head_w1 is [(h + tail), h]; the two row blocks multiply the recurrent
  // summary and the current (s, a[, adv]) features respectively.
  std::vector<std::size_t> top_idx(h);
  for (std::size_t i = 0; i < h; ++i) top_idx[i] = i;
  std::vector<std::size_t> bottom_idx(static_cast<std::size_t>(net.tail_dim));
  for (std::size_t i = 0; i < bottom_idx.size(); ++i) bottom_idx[i] = h + i;
  nn::Tensor joined =
      nn::add(nn::matmul(hidden, nn::gather_rows(net.head_w1, top_idx)),
              nn::matmul(tail, nn::gather_rows(net.head_w1, bottom_idx)));
  nn::Tensor h1 = nn::relu(nn::add(joined, net.head_b1));
  return nn::add(nn::matmul(h1, net.head_w2), net.head_b2);
}

nn::Tensor ValueEstimatorPair::nu_forward(
    const EstimatorFeatures& feat, std::span<const std::size_t> rows) const {
  return forward_net(*nu_, feat, rows, false);
}

nn::Tensor ValueEstimatorPair::omega_forward(
    const EstimatorFeatures& feat, std::span<const std::size_t> rows) const {
  return forward_net(*omega_, feat, rows, true);
}

std::vector<nn::Tensor> ValueEstimatorPair::nu_params() const {
  return nu_->params();
}
std::vector<nn::Tensor> ValueEstimatorPair::omega_params() const {
  return omega_->params();
}

std::vector<std::pair<std::string, nn::Tensor>>
ValueEstimatorPair::named_params() const {
  std::vector<std::pair<std::string, nn::Tensor>> out;
  const auto push = [&out](const std::string& prefix,
                           const std::vector<nn::Tensor>& params) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      out.emplace_back(prefix + std::to_string(i), params[i]);
    }
  };
  push("nu.", nu_->params());
  push("omega.", omega_->params());
  return out;
}

std::vector<double> ValueEstimatorPair::nu_values(
    const EstimatorFeatures& feat) const {
  std::vector<double> values(feat.sample_count());
  constexpr std::size_t kChunk = 512;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < values.size(); start += kChunk) {
    const std::size_t end = std::min(values.size(), start + kChunk);
    rows.resize(end - start);
    for (std::size_t i = start; i < end; ++i) rows[i - start] = i;
    const nn::Tensor pred = nu_forward(feat, rows);
    const auto data = pred.data();
    for (std::size_t i = start; i < end; ++i) values[i] = data[i - start];
  }
  return values;
}

double warmup_estimators(ValueEstimatorPair& est, const EstimatorFeatures& feat,
                         int epochs, nn::AdamW& nu_opt, nn::AdamW& omega_opt,
                         Rng& rng) {
  const std::size_t n = feat.sample_count();
  const auto batch_size = static_cast<std::size_t>(est.config().batch_size);
  double last = 0.0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    const auto perm = rng.permutation(n);
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t end = std::min(n, start + batch_size);
      std::span<const std::size_t> batch(perm.data() + start, end - start);
      std::vector<double> targets(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        targets[i] = feat.rtg(batch[i]);
      }
      nn::Tensor target = nn::Tensor::from_values({batch.size(), 1}, targets);

      nn::Tensor nu_loss = nn::mse(est.nu_forward(feat, batch), target);
      nu_opt.zero_grad();
      nn::backward(nu_loss);
      nu_opt.step();

      nn::Tensor omega_loss = nn::mse(est.omega_forward(feat, batch), target);
      omega_opt.zero_grad();
      nn::backward(omega_loss);
      omega_opt.step();

      last = 0.5 * (nu_loss.value() + omega_loss.value());
    }
  }
  return last;
}

double expectile_update_omega(ValueEstimatorPair& est,
                              const EstimatorFeatures& feat,
                              std::span<const std::size_t> batch, double alpha,
                              nn::AdamW& opt) {
  if (alpha <= 0.0 || alpha >= 1.0) {
    throw std::invalid_argument("expectile level must be in (0, 1)");
  }
  // Split terminal and non-terminal rows: terminals anchor to the observed
  // reward with MSE, the rest regress toward r_t + q_tilde(next) at the
  // 1-alpha expectile (the in-sample max side).
  std::vector<std::size_t> terminal_rows, interior_rows, next_rows;
  for (const std::size_t i : batch) {
    if (feat.terminal(i)) {
      terminal_rows.push_back(i);
    } else {
      interior_rows.push_back(i);
      next_rows.push_back(static_cast<std::size_t>(feat.next_index(i)));
    }
  }
  const double leaf_weight = est.config().leaf_weight;
  nn::Tensor loss = nn::Tensor::scalar(0.0);
  if (!terminal_rows.empty()) {
    std::vector<double> rewards(terminal_rows.size());
    for (std::size_t i = 0; i < terminal_rows.size(); ++i) {
      rewards[i] = feat.reward(terminal_rows[i]);
    }
    nn::Tensor pred = est.omega_forward(feat, terminal_rows);
    nn::Tensor target =
        nn::Tensor::from_values({terminal_rows.size(), 1}, std::move(rewards));
    loss = nn::add(loss, nn::scale(nn::mse(pred, target), leaf_weight));
  }
  if (!interior_rows.empty()) {
    // target = q_tilde(h', s_{t+1}, a_{t+1}) + r_t, with nu held fixed.
    nn::Tensor target = nn::detach(est.nu_forward(feat, next_rows));
    auto tv = target.data();
    for (std::size_t i = 0; i < interior_rows.size(); ++i) {
      tv[i] += feat.reward(interior_rows[i]);
    }
    nn::Tensor pred = est.omega_forward(feat, interior_rows);
    loss = nn::add(loss,
                   nn::scale(nn::expectile_loss(nn::sub(pred, target),
                                                1.0 - alpha),
                             1.0 - leaf_weight));
  }
  opt.zero_grad();
  nn::backward(loss);
  opt.step();
  return loss.value();
}

double expectile_update_nu(ValueEstimatorPair& est,
                           const EstimatorFeatures& feat,
                           std::span<const std::size_t> batch, double alpha,
                           nn::AdamW& opt) {
  if (alpha <= 0.0 || alpha >= 1.0) {
    throw std::invalid_argument("expectile level must be in (0, 1)");
  }
  nn::Tensor target = nn::detach(est.omega_forward(feat, batch));
  nn::Tensor pred = est.nu_forward(feat, batch);
  nn::Tensor loss = nn::expectile_loss(nn::sub(pred, target), alpha);
  opt.zero_grad();
  nn::backward(loss);
  opt.step();
  return loss.value();
}

FitResult fit_minimax(ValueEstimatorPair& est, const EstimatorFeatures& feat,
                      int iterations, double alpha) {
  const auto& cfg = est.config();
  nn::AdamWConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  opt_cfg.weight_decay = cfg.weight_decay;
  nn::AdamW nu_opt(est.nu_params(), opt_cfg);
  nn::AdamW omega_opt(est.omega_params(), opt_cfg);

  Rng rng = make_stream(cfg.seed, 0xf17);
  warmup_estimators(est, feat, cfg.warmup_epochs, nu_opt, omega_opt, rng);

  FitResult result;
  const std::size_t n = feat.sample_count();
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  for (int it = 0; it < iterations; ++it) {
    const auto perm = rng.permutation(n);
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t end = std::min(n, start + batch_size);
      std::span<const std::size_t> batch(perm.data() + start, end - start);
      result.final_omega_loss =
          expectile_update_omega(est, feat, batch, alpha, omega_opt);
      result.final_nu_loss =
          expectile_update_nu(est, feat, batch, alpha, nu_opt);
    }
  }
  return result;
}

}  // namespace ardt
