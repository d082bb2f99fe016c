#include "ardt/policy_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ardt/checkpoint.hpp"
#include "ardt/util.hpp"
#include "json.hpp"

namespace ardt {

std::string DTConfig::to_json() const {
  nlohmann::ordered_json j;
  j["context_length"] = context_length;
  j["embed_dim"] = embed_dim;
  j["n_layers"] = n_layers;
  j["n_heads"] = n_heads;
  j["dropout"] = dropout;
  j["lr"] = lr;
  j["weight_decay"] = weight_decay;
  j["warmup_steps"] = warmup_steps;
  j["batch_size"] = batch_size;
  j["training_steps"] = training_steps;
  j["action_count"] = action_count;
  j["state_dim"] = state_dim;
  j["max_timestep"] = max_timestep;
  j["seed"] = seed;
  return j.dump();
}

DTConfig DTConfig::from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  DTConfig cfg;
  cfg.context_length = j.at("context_length").get<int>();
  cfg.embed_dim = j.at("embed_dim").get<int>();
  cfg.n_layers = j.at("n_layers").get<int>();
  cfg.n_heads = j.at("n_heads").get<int>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.lr = j.at("lr").get<double>();
  cfg.weight_decay = j.at("weight_decay").get<double>();
  cfg.warmup_steps = j.at("warmup_steps").get<std::int64_t>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.training_steps = j.at("training_steps").get<int>();
  cfg.action_count = j.at("action_count").get<int>();
  cfg.state_dim = j.at("state_dim").get<int>();
  cfg.max_timestep = j.at("max_timestep").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

void DTConfig::validate() const {
  if (context_length < 1) throw std::invalid_argument("context_length >= 1");
  if (embed_dim < 1 || n_layers < 1 || n_heads < 1) {
    throw std::invalid_argument("model dimensions must be positive");
  }
  if (embed_dim % n_heads != 0) {
    throw std::invalid_argument("heads must divide embed_dim");
  }
  if (action_count < 1 || state_dim < 1 || max_timestep < 1) {
    throw std::invalid_argument("game dimensions must be positive");
  }
}

TokenizedWindow tokenize(const Trajectory& traj, std::size_t t_end,
                         int context_length, bool use_relabeled,
                         const Environment& env) {
  if (t_end >= traj.steps.size()) {
    throw std::invalid_argument("tokenize: t_end past trajectory end");
  }
  if (use_relabeled && !traj.has_minimax_rtg()) {
    throw std::invalid_argument(
        "tokenize: use_relabeled requires minimax_rtg");
  }
  const auto K = static_cast<std::size_t>(context_length);
  const auto F = static_cast<std::size_t>(env.state_feature_size());
  TokenizedWindow win;
  win.returns.assign(K, 0.0);
  win.states.assign(K * F, 0.0);
  win.actions.assign(K, static_cast<std::size_t>(env.protagonist_action_count()));
  win.timesteps.assign(K, 0);
  win.step_mask.assign(K, 0.0);
  win.targets.assign(K, 0);
  for (std::size_t slot = 0; slot < K; ++slot) {
    const std::ptrdiff_t t =
        static_cast<std::ptrdiff_t>(t_end) - static_cast<std::ptrdiff_t>(K) +
        1 + static_cast<std::ptrdiff_t>(slot);
    if (t < 0) continue;  // left padding
    const auto ut = static_cast<std::size_t>(t);
    const Step& step = traj.steps[ut];
    win.returns[slot] = use_relabeled ? traj.minimax_rtg[ut] : traj.rtg[ut];
    env.state_features(step.state,
                       std::span<double>(win.states.data() + slot * F, F));
    win.actions[slot] = static_cast<std::size_t>(step.p_action);
    win.timesteps[slot] = ut;
    win.step_mask[slot] = 1.0;
    win.targets[slot] = static_cast<std::size_t>(step.p_action);
  }
  return win;
}

struct DecisionTransformer::Block {
  nn::Tensor ln1_g, ln1_b, ln2_g, ln2_b;
  nn::Tensor wq, bq, wk, bk, wv, bv, wo, bo;
  nn::Tensor fc1, fb1, fc2, fb2;
};

DecisionTransformer::DecisionTransformer(DTConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng = make_stream(cfg_.seed, 0xd7);
  const auto d = static_cast<std::size_t>(cfg_.embed_dim);
  const auto f = static_cast<std::size_t>(cfg_.state_dim);
  const double init = 0.02;
  return_proj_ = nn::Tensor::randn({1, d}, rng, init);
  return_bias_ = nn::Tensor::zeros({d}, true);
  state_proj_ = nn::Tensor::randn({f, d}, rng, init);
  state_bias_ = nn::Tensor::zeros({d}, true);
  action_table_ = nn::Tensor::randn(
      {static_cast<std::size_t>(cfg_.action_count) + 1, d}, rng, init);
  time_table_ = nn::Tensor::randn(
      {static_cast<std::size_t>(cfg_.max_timestep), d}, rng, init);
  for (int l = 0; l < cfg_.n_layers; ++l) {
    auto block = std::make_shared<Block>();
    block->ln1_g = nn::Tensor::full({d}, 1.0, true);
    block->ln1_b = nn::Tensor::zeros({d}, true);
    block->ln2_g = nn::Tensor::full({d}, 1.0, true);
    block->ln2_b = nn::Tensor::zeros({d}, true);
    block->wq = nn::Tensor::randn({d, d}, rng, init);
    block->bq = nn::Tensor::zeros({d}, true);
    block->wk = nn::Tensor::randn({d, d}, rng, init);
    block->bk = nn::Tensor::zeros({d}, true);
    block->wv = nn::Tensor::randn({d, d}, rng, init);
    block->bv = nn::Tensor::zeros({d}, true);
    block->wo = nn::Tensor::randn({d, d}, rng, init);
    block->bo = nn::Tensor::zeros({d}, true);
    block->fc1 = nn::Tensor::randn({d, 4 * d}, rng, init);
    block->fb1 = nn::Tensor::zeros({4 * d}, true);
    block->fc2 = nn::Tensor::randn({4 * d, d}, rng, init);
    block->fb2 = nn::Tensor::zeros({d}, true);
    blocks_.push_back(std::move(block));
  }
  final_gain_ = nn::Tensor::full({d}, 1.0, true);
  final_bias_ = nn::Tensor::zeros({d}, true);
  head_w_ = nn::Tensor::randn({d, static_cast<std::size_t>(cfg_.action_count)},
                              rng, init);
  head_b_ = nn::Tensor::zeros({static_cast<std::size_t>(cfg_.action_count)},
                              true);
}

nn::Tensor DecisionTransformer::forward_tokens(
    const std::vector<double>& returns, const std::vector<double>& states,
    const std::vector<std::size_t>& action_ids,
    const std::vector<std::size_t>& timesteps,
    const std::vector<double>& token_mask, std::size_t batch,
    std::size_t steps, bool last_step_open, Rng* train_rng) const {
  const std::size_t rows = batch * steps;  // one row per step slot
  const std::size_t tokens_per_seq = 3 * steps - (last_step_open ? 1 : 0);
  const std::size_t total_tokens = batch * tokens_per_seq;

  nn::Tensor returns_mat = nn::Tensor::from_values(
      {rows, 1}, std::vector<double>(returns.begin(), returns.end()));
  nn::Tensor states_mat = nn::Tensor::from_values(
      {rows, static_cast<std::size_t>(cfg_.state_dim)},
      std::vector<double>(states.begin(), states.end()));

  nn::Tensor time_emb = nn::gather_rows(time_table_, timesteps);
  nn::Tensor r_tok = nn::add(
      nn::add(nn::matmul(returns_mat, return_proj_), return_bias_), time_emb);
  nn::Tensor s_tok = nn::add(
      nn::add(nn::matmul(states_mat, state_proj_), state_bias_), time_emb);
  nn::Tensor a_tok =
      nn::add(nn::gather_rows(action_table_, action_ids), time_emb);

  // Interleave (R, s, a) triples per sequence; the open last step of an
  // inference query has no action token.
  std::vector<std::size_t> order(total_tokens);
  std::vector<double> pad_mask(total_tokens, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t row = b * steps + s;
      const std::size_t base = b * tokens_per_seq + 3 * s;
      const int tokens_here =
          (last_step_open && s + 1 == steps) ? 2 : 3;
      for (int j = 0; j < tokens_here; ++j) {
        order[base + static_cast<std::size_t>(j)] =
            static_cast<std::size_t>(j) * rows + row;
        pad_mask[base + static_cast<std::size_t>(j)] = token_mask[row];
      }
    }
  }
  nn::Tensor x =
      nn::gather_rows(nn::concat_rows({r_tok, s_tok, a_tok}), order);
  if (train_rng != nullptr && cfg_.dropout > 0.0) {
    x = nn::dropout(x, cfg_.dropout, *train_rng);
  }

  for (const auto& block : blocks_) {
    nn::Tensor norm1 = nn::layer_norm(x, block->ln1_g, block->ln1_b);
    nn::Tensor q = nn::add(nn::matmul(norm1, block->wq), block->bq);
    nn::Tensor k = nn::add(nn::matmul(norm1, block->wk), block->bk);
    nn::Tensor v = nn::add(nn::matmul(norm1, block->wv), block->bv);
    nn::Tensor attn = nn::causal_self_attention(
        q, k, v, batch, tokens_per_seq,
        static_cast<std::size_t>(cfg_.n_heads), &pad_mask);
    nn::Tensor proj = nn::add(nn::matmul(attn, block->wo), block->bo);
    if (train_rng != nullptr && cfg_.dropout > 0.0) {
      proj = nn::dropout(proj, cfg_.dropout, *train_rng);
    }
    x = nn::add(x, proj);

    nn::Tensor norm2 = nn::layer_norm(x, block->ln2_g, block->ln2_b);
    nn::Tensor mid = nn::gelu(nn::add(nn::matmul(norm2, block->fc1), block->fb1));
    nn::Tensor out = nn::add(nn::matmul(mid, block->fc2), block->fb2);
    if (train_rng != nullptr && cfg_.dropout > 0.0) {
      out = nn::dropout(out, cfg_.dropout, *train_rng);
    }
    x = nn::add(x, out);
  }
  x = nn::layer_norm(x, final_gain_, final_bias_);

  // Read the state-token position of every step slot.
  std::vector<std::size_t> state_positions(rows);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t s = 0; s < steps; ++s) {
      state_positions[b * steps + s] = b * tokens_per_seq + 3 * s + 1;
    }
  }
  nn::Tensor picked = nn::gather_rows(x, state_positions);
  return nn::add(nn::matmul(picked, head_w_), head_b_);
}

nn::Tensor DecisionTransformer::forward_windows(
    const std::vector<TokenizedWindow>& windows, Rng* train_rng) const {
  if (windows.empty()) {
    throw std::invalid_argument("forward_windows: empty batch");
  }
  const auto K = static_cast<std::size_t>(cfg_.context_length);
  const auto F = static_cast<std::size_t>(cfg_.state_dim);
  const std::size_t batch = windows.size();
  std::vector<double> returns(batch * K);
  std::vector<double> states(batch * K * F);
  std::vector<std::size_t> actions(batch * K);
  std::vector<std::size_t> timesteps(batch * K);
  std::vector<double> mask(batch * K);
  for (std::size_t b = 0; b < batch; ++b) {
    const TokenizedWindow& w = windows[b];
    std::copy(w.returns.begin(), w.returns.end(), returns.begin() + b * K);
    std::copy(w.states.begin(), w.states.end(), states.begin() + b * K * F);
    std::copy(w.actions.begin(), w.actions.end(), actions.begin() + b * K);
    std::copy(w.timesteps.begin(), w.timesteps.end(),
              timesteps.begin() + b * K);
    std::copy(w.step_mask.begin(), w.step_mask.end(), mask.begin() + b * K);
  }
  return forward_tokens(returns, states, actions, timesteps, mask, batch, K,
                        /*last_step_open=*/false, train_rng);
}

double DecisionTransformer::train_step(
    const std::vector<TokenizedWindow>& batch, nn::AdamW& opt,
    Rng& train_rng) {
  const auto K = static_cast<std::size_t>(cfg_.context_length);
  nn::Tensor logits = forward_windows(batch, &train_rng);
  std::vector<std::size_t> targets(batch.size() * K);
  std::vector<double> weights(batch.size() * K);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    std::copy(batch[b].targets.begin(), batch[b].targets.end(),
              targets.begin() + b * K);
    std::copy(batch[b].step_mask.begin(), batch[b].step_mask.end(),
              weights.begin() + b * K);
  }
  nn::Tensor loss = nn::cross_entropy(logits, targets, &weights);
  opt.zero_grad();
  nn::backward(loss);
  opt.step();
  return loss.value();
}

std::vector<double> DecisionTransformer::action_distribution(
    const std::vector<HistoryStep>& history) const {
  if (history.empty() || history.back().action != -1) {
    throw std::invalid_argument(
        "action_distribution: last history entry must be the pending step");
  }
  // Keep only the trailing context window.
  const auto K = static_cast<std::size_t>(cfg_.context_length);
  const std::size_t start = history.size() > K ? history.size() - K : 0;
  const std::size_t steps = history.size() - start;
  const auto F = static_cast<std::size_t>(cfg_.state_dim);

  std::vector<double> returns(steps);
  std::vector<double> states(steps * F);
  std::vector<std::size_t> actions(steps);
  std::vector<std::size_t> timesteps(steps);
  std::vector<double> mask(steps, 1.0);
  for (std::size_t s = 0; s < steps; ++s) {
    const HistoryStep& h = history[start + s];
    returns[s] = h.return_channel;
    if (h.state_features.size() != F) {
      throw std::invalid_argument("history state width mismatch");
    }
    std::copy(h.state_features.begin(), h.state_features.end(),
              states.begin() + s * F);
    actions[s] = h.action >= 0 ? static_cast<std::size_t>(h.action)
                               : static_cast<std::size_t>(cfg_.action_count);
    timesteps[s] =
        std::min(h.timestep, static_cast<std::size_t>(cfg_.max_timestep - 1));
  }
  nn::Tensor logits = forward_tokens(returns, states, actions, timesteps, mask,
                                     1, steps, /*last_step_open=*/true,
                                     nullptr);
  // Last slot's state-position logits.
  const auto data = logits.data();
  const auto A = static_cast<std::size_t>(cfg_.action_count);
  std::vector<double> row(data.begin() + static_cast<std::ptrdiff_t>(
                                              (steps - 1) * A),
                          data.begin() + static_cast<std::ptrdiff_t>(steps * A));
  double mx = row[0];
  for (const double v : row) mx = std::max(mx, v);
  double sum = 0.0;
  for (auto& v : row) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : row) v /= sum;
  return row;
}

int DecisionTransformer::act(const std::vector<HistoryStep>& history,
                             const std::vector<int>& legal_actions,
                             ActionSelection mode, Rng& rng) const {
  if (legal_actions.empty()) {
    throw std::invalid_argument("act: no legal action");
  }
  const std::vector<double> dist = action_distribution(history);
  double total = 0.0;
  for (const int a : legal_actions) {
    total += dist[static_cast<std::size_t>(a)];
  }
  if (mode == ActionSelection::kArgmax) {
    int best = legal_actions[0];
    double best_p = -1.0;
    for (const int a : legal_actions) {
      const double p = dist[static_cast<std::size_t>(a)];
      if (p > best_p) {
        best_p = p;
        best = a;
      }
    }
    return best;
  }
  if (total <= 0.0) return rng.pick(legal_actions);
  double u = rng.uniform() * total;
  for (const int a : legal_actions) {
    u -= dist[static_cast<std::size_t>(a)];
    if (u <= 0.0) return a;
  }
  return legal_actions.back();
}

std::vector<nn::Tensor> DecisionTransformer::params() const {
  std::vector<nn::Tensor> out;
  for (auto& [name, t] : named_params()) out.push_back(t);
  return out;
}

std::vector<std::pair<std::string, nn::Tensor>>
DecisionTransformer::named_params() const {
  std::vector<std::pair<std::string, nn::Tensor>> out;
  out.emplace_back("return_proj.w", return_proj_);
  out.emplace_back("return_proj.b", return_bias_);
  out.emplace_back("state_proj.w", state_proj_);
  out.emplace_back("state_proj.b", state_bias_);
  out.emplace_back("action_table", action_table_);
  out.emplace_back("time_table", time_table_);
  for (std::size_t l = 0; l < blocks_.size(); ++l) {
    const std::string p = "block" + std::to_string(l) + ".";
    const Block& b = *blocks_[l];
    out.emplace_back(p + "ln1.g", b.ln1_g);
    out.emplace_back(p + "ln1.b", b.ln1_b);
    out.emplace_back(p + "attn.wq", b.wq);
    out.emplace_back(p + "attn.bq", b.bq);
    out.emplace_back(p + "attn.wk", b.wk);
    out.emplace_back(p + "attn.bk", b.bk);
    out.emplace_back(p + "attn.wv", b.wv);
    out.emplace_back(p + "attn.bv", b.bv);
    out.emplace_back(p + "attn.wo", b.wo);
    out.emplace_back(p + "attn.bo", b.bo);
    out.emplace_back(p + "ln2.g", b.ln2_g);
    out.emplace_back(p + "ln2.b", b.ln2_b);
    out.emplace_back(p + "mlp.fc1", b.fc1);
    out.emplace_back(p + "mlp.fb1", b.fb1);
    out.emplace_back(p + "mlp.fc2", b.fc2);
    out.emplace_back(p + "mlp.fb2", b.fb2);
  }
  out.emplace_back("final_ln.g", final_gain_);
  out.emplace_back("final_ln.b", final_bias_);
  out.emplace_back("head.w", head_w_);
  out.emplace_back("head.b", head_b_);
  return out;
}

void DecisionTransformer::save(const std::filesystem::path& path) const {
  nn::save_checkpoint(path, cfg_.to_json(), named_params());
}

DecisionTransformer DecisionTransformer::load(
    const std::filesystem::path& path) {
  const auto loaded = nn::load_checkpoint(path);
  DecisionTransformer model(DTConfig::from_json(loaded.config_json));
  auto params = model.named_params();
  if (params.size() != loaded.params.size()) {
    throw std::runtime_error("checkpoint parameter count mismatch");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].first != loaded.params[i].first ||
        params[i].second.shape() != loaded.params[i].second.shape()) {
      throw std::runtime_error("checkpoint parameter mismatch at " +
                               params[i].first);
    }
    auto dst = params[i].second.data();
    const auto src = loaded.params[i].second.data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return model;
}

TrainResult train_policy(DecisionTransformer& model, const Dataset& ds,
                         const Environment& env, bool use_relabeled) {
  const DTConfig& cfg = model.config();
  if (ds.trajectories.empty()) {
    throw std::invalid_argument("train_policy: empty dataset");
  }
  // Flat index over (trajectory, t) pairs for uniform step sampling.
  std::vector<std::pair<std::size_t, std::size_t>> positions;
  positions.reserve(static_cast<std::size_t>(ds.total_steps()));
  for (std::size_t ti = 0; ti < ds.trajectories.size(); ++ti) {
    for (std::size_t t = 0; t < ds.trajectories[ti].length(); ++t) {
      positions.emplace_back(ti, t);
    }
  }

  nn::AdamWConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  opt_cfg.weight_decay = cfg.weight_decay;
  opt_cfg.warmup_steps = cfg.warmup_steps;
  nn::AdamW opt(model.params(), opt_cfg);

  Rng sample_rng = make_stream(cfg.seed, 1);
  Rng dropout_rng = make_stream(cfg.seed, 2);

  TrainResult result;
  result.loss_curve.reserve(static_cast<std::size_t>(cfg.training_steps));
  std::vector<TokenizedWindow> batch(static_cast<std::size_t>(cfg.batch_size));
  for (int step = 0; step < cfg.training_steps; ++step) {
    for (auto& w : batch) {
      const auto& [ti, t] = positions[static_cast<std::size_t>(
          sample_rng.uniform_int(static_cast<std::int64_t>(positions.size())))];
      w = tokenize(ds.trajectories[ti], t, cfg.context_length, use_relabeled,
                   env);
    }
    const double loss = model.train_step(batch, opt, dropout_rng);
    result.loss_curve.emplace_back(step, loss);
    result.final_loss = loss;
  }
  return result;
}

void write_loss_curve(const TrainResult& result,
                      const std::filesystem::path& path) {
  std::string csv = "step,loss\n";
  for (const auto& [step, loss] : result.loss_curve) {
    csv += std::to_string(step) + "," + format_double(loss) + "\n";
  }
  write_file(path, csv);
}

}  // namespace ardt
