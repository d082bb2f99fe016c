#include "ardt/cli.hpp"

#include <cstdlib>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "ardt/collect.hpp"
#include "ardt/data_trie.hpp"
#include "ardt/dataset_io.hpp"
#include "ardt/evaluation.hpp"
#include "ardt/grad_check.hpp"
#include "ardt/policy_model.hpp"
#include "ardt/relabel.hpp"
#include "ardt/util.hpp"
#include "ardt/value_estimator.hpp"
#include "json.hpp"

namespace ardt::cli {
namespace {

namespace fs = std::filesystem;

struct CommonOptions {
  std::string out_dir;
  int jobs = 1;
};

fs::path out_root(const CommonOptions& common) {
  if (!common.out_dir.empty()) return common.out_dir;
  if (const char* env = std::getenv("ARDT_OUTPUT_ROOT"); env != nullptr) {
    return env;
  }
  return "runs";
}

// A name containing a separator or extension is used verbatim; otherwise it
// lands in the fixed output layout (data/, values/, checkpoints/, reports/).
fs::path resolve_out(const CommonOptions& common, const std::string& name,
                     const char* subdir, const char* extension) {
  if (name.find('/') != std::string::npos || fs::path(name).has_extension()) {
    return name;
  }
  return out_root(common) / subdir / (name + extension);
}

fs::path resolve_dataset_in(const CommonOptions& common,
                            const std::string& name) {
  if (fs::exists(name)) return name;
  const fs::path tagged = out_root(common) / "data" / (name + ".jsonl");
  if (fs::exists(tagged)) return tagged;
  throw std::runtime_error("dataset not found: " + name);
}

void append_manifest(const CommonOptions& common, const std::string& command,
                     const std::map<std::string, std::string>& config,
                     std::uint64_t seed,
                     const std::vector<fs::path>& inputs) {
  const fs::path path = out_root(common) / "manifest.json";
  nlohmann::ordered_json manifest;
  manifest["runs"] = nlohmann::ordered_json::array();
  if (fs::exists(path)) {
    try {
      manifest = nlohmann::ordered_json::parse(read_file(path));
    } catch (const std::exception&) {
      manifest["runs"] = nlohmann::ordered_json::array();
    }
  }
  nlohmann::ordered_json run;
  run["command"] = command;
  run["config"] = config;
  run["seed"] = seed;
  auto& in = run["inputs"] = nlohmann::ordered_json::object();
  for (const auto& p : inputs) {
    in[p.string()] = git_blob_sha1(p);
  }
  manifest["runs"].push_back(run);
  write_file(path, manifest.dump(2) + "\n");
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    out.push_back(std::stod(text.substr(pos, next - pos)));
    pos = next + 1;
  }
  if (out.empty()) throw std::runtime_error("empty list: '" + text + "'");
  return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    out.push_back(std::stoull(text.substr(pos, next - pos)));
    pos = next + 1;
  }
  if (out.empty()) throw std::runtime_error("empty seed list");
  return out;
}

std::vector<AdversaryDef> parse_population(const std::string& text) {
  std::vector<AdversaryDef> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t next = text.find(',', pos);
    if (next == std::string::npos) next = text.size();
    const std::string spec = text.substr(pos, next - pos);
    out.push_back(
        AdversaryDef{spec, PolicySpec::parse(spec, PolicyRole::kAdversary)});
    pos = next + 1;
  }
  if (out.empty()) throw std::runtime_error("empty adversary population");
  return out;
}

struct EstimatorCliOptions {
  int context = 4;
  int hidden = 128;
  std::string arch = "mlp";
  double leaf_weight = 0.9;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  int batch_size = 128;
  int warmup_epochs = 2;
  int iterations = 0;  // 0 -> max(6, 2 * H_max)
};

EstimatorConfig make_estimator_config(const EstimatorCliOptions& opts,
                                      double alpha, std::uint64_t seed) {
  EstimatorConfig cfg;
  cfg.arch = opts.arch == "lstm" ? EstimatorConfig::Arch::kLstm
                                 : EstimatorConfig::Arch::kMlp;
  cfg.context_length = opts.context;
  cfg.hidden_dim = opts.hidden;
  cfg.alpha = alpha;
  cfg.leaf_weight = opts.leaf_weight;
  cfg.lr = opts.lr;
  cfg.weight_decay = opts.weight_decay;
  cfg.batch_size = opts.batch_size;
  cfg.warmup_epochs = opts.warmup_epochs;
  cfg.seed = seed;
  return cfg;
}

// Dumps learned q_tilde predictions keyed the way the tabular maps are,
// so the two relabeling routes can be diffed directly.
TabularValueMap values_from_predictions(const Dataset& ds,
                                        const std::vector<double>& preds) {
  TabularValueMap map;
  std::size_t row = 0;
  for (const auto& traj : ds.trajectories) {
    std::string key;
    for (std::size_t t = 0; t < traj.steps.size(); ++t, ++row) {
      const Step& step = traj.steps[t];
      if (t == 0) {
        key = "s=" + DataTrie::state_key(step.state);
      } else {
        const Step& prev = traj.steps[t - 1];
        key += ";a=" + std::to_string(prev.p_action) +
               ";b=" + std::to_string(prev.adv_action) +
               ";s=" + DataTrie::state_key(step.state);
      }
      map.set(key, step.p_action, preds[row]);
    }
  }
  return map;
}

int cmd_collect(const CommonOptions& common, const std::string& game,
                const std::string& protagonist, const std::string& adversary,
                std::int64_t n_traj, std::int64_t n_steps, std::uint64_t seed,
                const std::string& out_name) {
  if ((n_traj > 0) == (n_steps > 0)) {
    throw std::runtime_error("exactly one of --n-traj / --n-steps required");
  }
  CollectionConfig cfg;
  cfg.game_id = game;
  cfg.protagonist = PolicySpec::parse(protagonist, PolicyRole::kProtagonist);
  cfg.adversary = PolicySpec::parse(adversary, PolicyRole::kAdversary);
  cfg.budget = n_traj > 0
                   ? CollectionBudget{CollectionBudget::Kind::kTrajectories,
                                      n_traj}
                   : CollectionBudget{CollectionBudget::Kind::kSteps, n_steps};
  cfg.seed = seed;
  const Dataset ds = collect_dataset(cfg);
  const fs::path out = resolve_out(common, out_name, "data", ".jsonl");
  save_dataset(ds, out);
  std::cout << "collected " << ds.meta.n_trajectories << " trajectories ("
            << ds.meta.n_steps << " steps) -> " << out.string() << "\n";
  append_manifest(common, "collect",
                  {{"game", game},
                   {"protagonist", protagonist},
                   {"adversary", adversary},
                   {"budget", cfg.budget.kind ==
                                      CollectionBudget::Kind::kTrajectories
                                  ? "n_trajectories=" + std::to_string(n_traj)
                                  : "n_steps=" + std::to_string(n_steps)},
                   {"out", out.string()}},
                  seed, {});
  return 0;
}

int cmd_relabel(const CommonOptions& common, const std::string& data,
                const std::string& method, double alpha,
                const EstimatorCliOptions& est_opts, std::uint64_t seed,
                const std::string& out_name, const std::string& values_out) {
  const fs::path in_path = resolve_dataset_in(common, data);
  const Dataset ds = load_dataset(in_path);
  const auto env = make_environment(ds.game_id);

  Dataset relabeled;
  TabularValueMap values;
  if (method == "tabular-minimax" || method == "tabular-expected") {
    const DataTrie trie(ds);
    values = method == "tabular-minimax" ? tabular_minimax_rtg(trie)
                                         : tabular_expected_rtg(trie);
    relabeled = relabel_dataset(ds, values);
  } else if (method == "minimax" || method == "expected") {
    const double level = method == "expected" ? 0.5 : alpha;
    EstimatorConfig est_cfg = make_estimator_config(est_opts, level, seed);
    ValueEstimatorPair est(*env, est_cfg);
    EstimatorFeatures feat(*env, ds, est_cfg.context_length);
    const int iterations = est_opts.iterations > 0
                               ? est_opts.iterations
                               : std::max(6, 2 * env->max_horizon());
    fit_minimax(est, feat, iterations, level);
    relabeled = relabel_dataset(ds, *env, est);
    if (!values_out.empty()) {
      values = values_from_predictions(ds, est.nu_values(feat));
    }
  } else {
    throw std::runtime_error(
        "unknown method '" + method +
        "'; expected minimax|expected|tabular-minimax|tabular-expected");
  }

  const fs::path out = resolve_out(common, out_name, "data", ".jsonl");
  save_dataset(relabeled, out);
  std::cout << "relabeled " << relabeled.trajectories.size()
            << " trajectories (" << method << ") -> " << out.string() << "\n";
  if (!values_out.empty()) {
    const fs::path vout = resolve_out(common, values_out, "values", ".json");
    values.save(vout);
    std::cout << "values -> " << vout.string() << "\n";
  }
  append_manifest(common, "relabel",
                  {{"data", in_path.string()},
                   {"method", method},
                   {"alpha", format_double(alpha)},
                   {"out", out.string()}},
                  seed, {in_path});
  return 0;
}

int cmd_train(const CommonOptions& common, const std::string& data,
              const std::string& variant, DTConfig dt_cfg,
              const std::string& tag) {
  if (variant != "ardt" && variant != "dt" && variant != "erc") {
    throw std::runtime_error("unknown variant '" + variant +
                             "'; expected ardt|dt|erc");
  }
  const fs::path in_path = resolve_dataset_in(common, data);
  const Dataset ds = load_dataset(in_path);
  const auto env = make_environment(ds.game_id);
  dt_cfg.action_count = env->protagonist_action_count();
  dt_cfg.state_dim = env->state_feature_size();
  dt_cfg.max_timestep = std::max(1, env->max_horizon());
  const bool use_relabeled = variant != "dt";

  DecisionTransformer model(dt_cfg);
  const TrainResult result = train_policy(model, ds, *env, use_relabeled);

  const fs::path ckpt = resolve_out(common, tag, "checkpoints", ".ckpt");
  model.save(ckpt);
  fs::path curve = ckpt;
  curve.replace_extension(".loss.csv");
  write_loss_curve(result, curve);
  std::cout << "trained " << variant << " for " << dt_cfg.training_steps
            << " steps (final loss " << format_double(result.final_loss)
            << ") -> " << ckpt.string() << "\n";
  append_manifest(common, "train",
                  {{"data", in_path.string()},
                   {"variant", variant},
                   {"steps", std::to_string(dt_cfg.training_steps)},
                   {"out", ckpt.string()}},
                  dt_cfg.seed, {in_path});
  return 0;
}

int cmd_eval(const CommonOptions& common, const std::string& checkpoint,
             const std::string& game, const std::string& targets,
             const std::string& adversaries, int episodes,
             const std::string& seeds, const std::string& mode,
             const std::string& tag, bool with_svg) {
  const DecisionTransformer model = DecisionTransformer::load(checkpoint);
  const auto env = make_environment(game);
  EvalConfig cfg;
  cfg.targets = parse_double_list(targets);
  cfg.population = parse_population(adversaries);
  cfg.episodes_per_adversary = episodes;
  cfg.seeds = parse_seed_list(seeds);
  cfg.mode = mode == "argmax" ? ActionSelection::kArgmax
                              : ActionSelection::kSample;
  cfg.jobs = common.jobs;
  const EvalReport report = evaluate_worst_case(model, *env, cfg);

  const fs::path json_path = resolve_out(common, tag, "reports", ".json");
  write_report(report, json_path, ReportFormat::kJson);
  fs::path csv_path = json_path;
  csv_path.replace_extension(".csv");
  write_report(report, csv_path, ReportFormat::kCsv);
  if (with_svg) {
    fs::path svg_path = json_path;
    svg_path.replace_extension(".svg");
    write_sweep_svg(report, svg_path);
  }
  for (const auto& [z, v] : report.worst_case) {
    std::cout << "target " << format_double(z) << ": worst-case return "
              << format_double(v) << "\n";
  }
  std::cout << "report -> " << json_path.string() << "\n";
  append_manifest(common, with_svg ? "sweep" : "eval",
                  {{"checkpoint", checkpoint},
                   {"game", game},
                   {"targets", targets},
                   {"adversaries", adversaries},
                   {"episodes", std::to_string(episodes)},
                   {"mode", mode},
                   {"out", json_path.string()}},
                  cfg.seeds[0], {fs::path(checkpoint)});
  return 0;
}

int cmd_oracle(const CommonOptions& common, const std::string& game,
               const std::string& data, const std::string& values_out) {
  const fs::path in_path = resolve_dataset_in(common, data);
  const Dataset ds = load_dataset(in_path);
  if (!game.empty() && game != ds.game_id) {
    throw std::runtime_error("dataset was collected on '" + ds.game_id +
                             "', not '" + game + "'");
  }
  const DataTrie trie(ds);
  const TabularValueMap minimax = tabular_minimax_rtg(trie);
  for (const int root : trie.roots()) {
    const auto& node = trie.nodes()[static_cast<std::size_t>(root)];
    for (const auto& action : node.actions) {
      const auto v = minimax.get(node.history_key, action.p_action);
      std::cout << "Q(root, a" << action.p_action
                << ") = " << format_double(v.value_or(0.0)) << "\n";
    }
  }
  const double residual = minimax_fixed_point_residual(trie, minimax);
  std::cout << "fixed-point residual: " << residual << "\n";
  if (!values_out.empty()) {
    const fs::path vout = resolve_out(common, values_out, "values", ".json");
    minimax.save(vout);
    std::cout << "values -> " << vout.string() << "\n";
  }
  append_manifest(common, "oracle", {{"data", in_path.string()}}, 0,
                  {in_path});
  return residual <= 1e-9 ? 0 : 1;
}

int cmd_gradcheck() {
  Rng rng(20240931);
  double worst = 0.0;
  const auto report = [&worst](const std::string& name, double err) {
    std::cout << name << ": max relative error " << err << "\n";
    worst = std::max(worst, err);
  };

  using nn::Tensor;
  {
    Tensor x = Tensor::randn({4, 3}, rng, 1.0);
    Tensor w = Tensor::randn({3, 2}, rng, 1.0);
    report("mse(matmul)", nn::grad_check(
                              [](const std::vector<Tensor>& in) {
                                return nn::mse(nn::matmul(in[0], in[1]),
                                               Tensor::zeros({4, 2}));
                              },
                              {x, w}));
  }
  {
    Tensor u = Tensor::from_values({4}, {0.7, -1.3, 2.2, -0.4}, true);
    report("expectile_loss", nn::grad_check(
                                 [](const std::vector<Tensor>& in) {
                                   return nn::expectile_loss(in[0], 0.01);
                                 },
                                 {u}));
  }
  {
    Tensor x = Tensor::randn({3, 8}, rng, 1.0);
    Tensor g = Tensor::randn({8}, rng, 0.2);
    Tensor b = Tensor::randn({8}, rng, 0.2);
    report("layer_norm+gelu",
           nn::grad_check(
               [](const std::vector<Tensor>& in) {
                 return nn::mean_all(
                     nn::gelu(nn::layer_norm(in[0], in[1], in[2])));
               },
               {x, g, b}));
  }
  {
    Tensor q = Tensor::randn({6, 4}, rng, 1.0);
    Tensor k = Tensor::randn({6, 4}, rng, 1.0);
    Tensor v = Tensor::randn({6, 4}, rng, 1.0);
    report("causal_self_attention",
           nn::grad_check(
               [](const std::vector<Tensor>& in) {
                 return nn::mean_all(nn::causal_self_attention(
                     in[0], in[1], in[2], 2, 3, 2));
               },
               {q, k, v}));
  }
  {
    Tensor logits = Tensor::randn({5, 3}, rng, 1.0);
    report("cross_entropy+softmax",
           nn::grad_check(
               [](const std::vector<Tensor>& in) {
                 return nn::cross_entropy(in[0], {0, 2, 1, 1, 0});
               },
               {logits}));
  }
  std::cout << "overall max relative error: " << worst << "\n";
  return worst < 1e-4 ? 0 : 1;
}

}  // namespace

int run_command(const std::vector<std::string>& args) {
  CLI::App app{"Adversarially robust return-conditioned policies for "
               "two-player zero-sum games"};
  app.require_subcommand(1);
  app.set_config("--config", "", "flat key=value config file");
  app.allow_config_extras(true);

  CommonOptions common;
  app.add_option("--out-dir", common.out_dir,
                 "output root (default $ARDT_OUTPUT_ROOT or ./runs)");
  app.add_option("--jobs", common.jobs, "worker cap for parallel sections");

  // collect
  auto* collect = app.add_subcommand("collect", "roll out behavior policies");
  std::string game = "single_stage", protagonist = "uniform",
              adversary = "uniform", out_name = "dataset";
  std::int64_t n_traj = 0, n_steps = 0;
  std::uint64_t seed = 0;
  collect->add_option("--game", game, "builtin name, connect_four[:RxCxK], or tree file");
  collect->add_option("--protagonist", protagonist, "uniform | eps:<f>");
  collect->add_option("--adversary", adversary, "uniform | eps:<f>");
  collect->add_option("--n-traj", n_traj, "trajectory budget");
  collect->add_option("--n-steps", n_steps, "step budget");
  collect->add_option("--seed", seed);
  collect->add_option("--out", out_name, "dataset tag or path");

  // relabel
  auto* relabel = app.add_subcommand("relabel", "rewrite returns-to-go");
  std::string data = "dataset", method = "minimax", values_out;
  std::string relabel_out = "relabeled";
  double alpha = 0.01;
  EstimatorCliOptions est_opts;
  relabel->add_option("--data", data, "dataset tag or path");
  relabel->add_option("--method", method,
                      "minimax|expected|tabular-minimax|tabular-expected");
  relabel->add_option("--alpha", alpha, "expectile level");
  relabel->add_option("--iterations", est_opts.iterations,
                      "alternating passes (default 2*H_max, min 6)");
  relabel->add_option("--context", est_opts.context);
  relabel->add_option("--hidden", est_opts.hidden);
  relabel->add_option("--arch", est_opts.arch, "mlp | lstm");
  relabel->add_option("--leaf-weight", est_opts.leaf_weight);
  relabel->add_option("--est-lr", est_opts.lr);
  relabel->add_option("--est-batch", est_opts.batch_size);
  relabel->add_option("--warmup-epochs", est_opts.warmup_epochs);
  relabel->add_option("--seed", seed);
  relabel->add_option("--out", relabel_out, "dataset tag or path");
  relabel->add_option("--values-out", values_out, "value-map tag or path");

  // train
  auto* train = app.add_subcommand("train", "train the sequence policy");
  std::string variant = "ardt", tag = "model";
  DTConfig dt_cfg;
  train->add_option("--data", data, "dataset tag or path");
  train->add_option("--variant", variant, "ardt | dt | erc");
  train->add_option("--context", dt_cfg.context_length);
  train->add_option("--embed", dt_cfg.embed_dim);
  train->add_option("--layers", dt_cfg.n_layers);
  train->add_option("--heads", dt_cfg.n_heads);
  train->add_option("--dropout", dt_cfg.dropout);
  train->add_option("--lr", dt_cfg.lr);
  train->add_option("--weight-decay", dt_cfg.weight_decay);
  train->add_option("--warmup-steps", dt_cfg.warmup_steps);
  train->add_option("--batch-size", dt_cfg.batch_size);
  train->add_option("--steps", dt_cfg.training_steps);
  train->add_option("--seed", dt_cfg.seed);
  train->add_option("--tag", tag, "checkpoint tag or path");

  // eval / sweep
  auto* eval = app.add_subcommand("eval", "worst-case evaluation");
  auto* sweep = app.add_subcommand("sweep", "target-return sweep with plot");
  std::string checkpoint, targets = "1", adversaries = "eps:0",
              seeds_text = "0", mode = "sample", report_tag = "report";
  int episodes = 100;
  for (CLI::App* cmd : {eval, sweep}) {
    cmd->add_option("--checkpoint", checkpoint)->required();
    cmd->add_option("--game", game);
    cmd->add_option("--targets", targets, "comma-separated target returns");
    cmd->add_option("--adversaries", adversaries,
                    "comma-separated specs, e.g. eps:0,eps:0.5,uniform");
    cmd->add_option("--episodes", episodes, "episodes per (adversary, target)");
    cmd->add_option("--seeds", seeds_text, "comma-separated seeds");
    cmd->add_option("--mode", mode, "sample | argmax");
    cmd->add_option("--tag", report_tag, "report tag or path");
  }

  // oracle
  auto* oracle = app.add_subcommand("oracle", "tabular values + fixed point");
  std::string oracle_game;
  oracle->add_option("--game", oracle_game, "expected game id (checked)");
  oracle->add_option("--data", data, "dataset tag or path")->required();
  oracle->add_option("--values-out", values_out);

  // gradcheck
  app.add_subcommand("gradcheck", "finite-difference gradient audit");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help / --version
    }
    app.exit(e);
    return 2;
  }

  try {
    if (collect->parsed()) {
      return cmd_collect(common, game, protagonist, adversary, n_traj,
                         n_steps, seed, out_name);
    }
    if (relabel->parsed()) {
      return cmd_relabel(common, data, method, alpha, est_opts, seed,
                         relabel_out, values_out);
    }
    if (train->parsed()) {
      return cmd_train(common, data, variant, dt_cfg, tag);
    }
    if (eval->parsed() || sweep->parsed()) {
      return cmd_eval(common, checkpoint, game, targets, adversaries,
                      episodes, seeds_text, mode, report_tag,
                      sweep->parsed());
    }
    if (oracle->parsed()) {
      return cmd_oracle(common, oracle_game, data, values_out);
    }
    return cmd_gradcheck();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ardt::cli
