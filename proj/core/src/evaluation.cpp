#include "ardt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ardt/util.hpp"
#include "json.hpp"

namespace ardt {

const EvalCell& EvalReport::cell(const std::string& adversary_id,
                                 double target) const {
  for (const auto& c : cells) {
    if (c.adversary_id == adversary_id && c.target == target) return c;
  }
  throw std::out_of_range("no cell for adversary " + adversary_id);
}

double EvalReport::worst_case_at(double target) const {
  for (const auto& [t, v] : worst_case) {
    if (t == target) return v;
  }
  throw std::out_of_range("no worst-case entry for target");
}

RolloutResult rollout(const DecisionTransformer& model, Policy& adversary,
                      const Environment& env, double target,
                      ActionSelection mode, Rng& rng) {
  RolloutResult result;
  auto ep = env.start();
  std::vector<HistoryStep> history;
  double running_target = target;
  std::size_t timestep = 0;
  std::vector<double> features(
      static_cast<std::size_t>(env.state_feature_size()));
  while (!ep->done()) {
    Step step;
    step.state = ep->state_encoding();
    env.state_features(step.state, features);
    history.push_back(HistoryStep{running_target, features, -1, timestep});
    const int action =
        model.act(history, ep->legal_protagonist_actions(), mode, rng);
    history.back().action = action;
    step.p_action = action;
    ep->apply_protagonist(action, rng);
    if (ep->awaiting_adversary()) {
      step.adv_action = adversary.act(*ep, rng);
      ep->apply_adversary(step.adv_action, rng);
    } else {
      step.adv_action = kNoAdversaryAction;
    }
    step.reward = ep->last_reward();
    result.episode_return += step.reward;
    running_target -= step.reward;
    result.trajectory.steps.push_back(std::move(step));
    ++timestep;
  }
  fill_returns_to_go(result.trajectory);
  return result;
}

EvalReport evaluate_worst_case(const DecisionTransformer& model,
                               const Environment& env, const EvalConfig& cfg) {
  if (cfg.population.empty()) {
    throw std::invalid_argument("evaluate_worst_case: empty population");
  }
  if (cfg.targets.empty()) {
    throw std::invalid_argument("evaluate_worst_case: no targets");
  }
  EvalReport report;
  report.game_id = env.id();
  report.targets = cfg.targets;
  report.episodes_per_adversary = cfg.episodes_per_adversary;
  report.seeds = cfg.seeds;
  for (const auto& adv : cfg.population) {
    report.adversary_ids.push_back(adv.id);
  }

  // One cell per (adversary, target); each worker builds its own adversary
  // instance, so solver caches are never shared.
  const std::size_t n_cells = cfg.population.size() * cfg.targets.size();
  report.cells.resize(n_cells);
  parallel_for(n_cells, cfg.jobs, [&](std::size_t ci) {
    const std::size_t ai = ci / cfg.targets.size();
    const double z = cfg.targets[ci % cfg.targets.size()];
    const auto adversary_policy = make_policy(cfg.population[ai].spec, env);
    double sum = 0.0, sum_sq = 0.0, dist_sum = 0.0, dist_sq = 0.0;
    std::int64_t n = 0;
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
      for (int e = 0; e < cfg.episodes_per_adversary; ++e) {
        const std::uint64_t path[] = {static_cast<std::uint64_t>(ai),
                                      static_cast<std::uint64_t>(e)};
        Rng rng = Rng(derive_seed(cfg.seeds[si], path));
        const RolloutResult r =
            rollout(model, *adversary_policy, env, z, cfg.mode, rng);
        sum += r.episode_return;
        sum_sq += r.episode_return * r.episode_return;
        const double d = std::abs(r.episode_return - z);
        dist_sum += d;
        dist_sq += d * d;
        ++n;
      }
    }
    EvalCell cell;
    cell.adversary_id = cfg.population[ai].id;
    cell.target = z;
    cell.episodes = n;
    cell.mean_return = sum / static_cast<double>(n);
    cell.std_return = std::sqrt(
        std::max(0.0, sum_sq / static_cast<double>(n) -
                          cell.mean_return * cell.mean_return));
    cell.info_distance_mean = dist_sum / static_cast<double>(n);
    cell.info_distance_std = std::sqrt(std::max(
        0.0, dist_sq / static_cast<double>(n) -
                 cell.info_distance_mean * cell.info_distance_mean));
    report.cells[ci] = cell;
  });

  for (const double z : cfg.targets) {
    double worst = 0.0;
    bool first = true;
    for (const auto& c : report.cells) {
      if (c.target != z) continue;
      worst = first ? c.mean_return : std::min(worst, c.mean_return);
      first = false;
    }
    report.worst_case.emplace_back(z, worst);
  }
  return report;
}

EvalReport target_return_sweep(const DecisionTransformer& model,
                               const Environment& env, EvalConfig cfg,
                               const std::vector<double>& z_list) {
  if (z_list.empty()) {
    throw std::invalid_argument("target_return_sweep: empty target list");
  }
  cfg.targets = z_list;
  return evaluate_worst_case(model, env, cfg);
}

namespace {

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  nlohmann::ordered_json j;
  j["game_id"] = report.game_id;
  j["targets"] = report.targets;
  j["adversaries"] = report.adversary_ids;
  j["episodes_per_adversary"] = report.episodes_per_adversary;
  j["seeds"] = report.seeds;
  auto& cells = j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"adversary_id", c.adversary_id},
                     {"target", c.target},
                     {"mean_return", c.mean_return},
                     {"std", c.std_return},
                     {"episodes", c.episodes},
                     {"info_distance_mean", c.info_distance_mean},
                     {"info_distance_std", c.info_distance_std}});
  }
  auto& worst = j["worst_case"] = nlohmann::ordered_json::array();
  for (const auto& [t, v] : report.worst_case) {
    worst.push_back({{"target", t}, {"value", v}});
  }
  return j;
}

}  // namespace

void write_report(const EvalReport& report, const std::filesystem::path& path,
                  ReportFormat format) {
  if (format == ReportFormat::kJson) {
    write_file(path, report_to_json(report).dump(2) + "\n");
    return;
  }
  std::string csv = "adversary_id,target,mean_return,std,episodes\n";
  for (const auto& c : report.cells) {
    csv += c.adversary_id + "," + format_double(c.target) + "," +
           format_double(c.mean_return) + "," + format_double(c.std_return) +
           "," + std::to_string(c.episodes) + "\n";
  }
  write_file(path, csv);
}

EvalReport load_report_json(const std::filesystem::path& path) {
  const auto j = nlohmann::json::parse(read_file(path));
  EvalReport report;
  report.game_id = j.at("game_id").get<std::string>();
  report.targets = j.at("targets").get<std::vector<double>>();
  report.adversary_ids =
      j.at("adversaries").get<std::vector<std::string>>();
  report.episodes_per_adversary =
      j.at("episodes_per_adversary").get<std::int64_t>();
  report.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  for (const auto& c : j.at("cells")) {
    EvalCell cell;
    cell.adversary_id = c.at("adversary_id").get<std::string>();
    cell.target = c.at("target").get<double>();
    cell.mean_return = c.at("mean_return").get<double>();
    cell.std_return = c.at("std").get<double>();
    cell.episodes = c.at("episodes").get<std::int64_t>();
    cell.info_distance_mean = c.at("info_distance_mean").get<double>();
    cell.info_distance_std = c.at("info_distance_std").get<double>();
    report.cells.push_back(cell);
  }
  for (const auto& w : j.at("worst_case")) {
    report.worst_case.emplace_back(w.at("target").get<double>(),
                                   w.at("value").get<double>());
  }
  return report;
}

void write_sweep_svg(const EvalReport& report,
                     const std::filesystem::path& path) {
  if (report.worst_case.empty()) {
    throw std::invalid_argument("write_sweep_svg: empty report");
  }
  auto points = report.worst_case;
  std::sort(points.begin(), points.end());
  double x_min = points.front().first, x_max = points.back().first;
  double y_min = points[0].second, y_max = points[0].second;
  for (const auto& [x, y] : points) {
    y_min = std::min(y_min, y);
    y_max = std::max(y_max, y);
  }
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) y_max = y_min + 1.0;

  constexpr double kW = 640, kH = 420, kL = 70, kR = 20, kT = 20, kB = 60;
  const auto sx = [&](double x) {
    return kL + (x - x_min) / (x_max - x_min) * (kW - kL - kR);
  };
  const auto sy = [&](double y) {
    return kH - kB - (y - y_min) / (y_max - y_min) * (kH - kT - kB);
  };

  std::string svg =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" "
      "height=\"420\" viewBox=\"0 0 640 420\">\n"
      "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
  svg += "<line x1=\"" + format_double(kL) + "\" y1=\"" +
         format_double(kH - kB) + "\" x2=\"" + format_double(kW - kR) +
         "\" y2=\"" + format_double(kH - kB) +
         "\" stroke=\"black\"/>\n";
  svg += "<line x1=\"" + format_double(kL) + "\" y1=\"" + format_double(kT) +
         "\" x2=\"" + format_double(kL) + "\" y2=\"" + format_double(kH - kB) +
         "\" stroke=\"black\"/>\n";
  std::string poly;
  for (const auto& [x, y] : points) {
    poly += format_double(sx(x)) + "," + format_double(sy(y)) + " ";
    svg += "<circle cx=\"" + format_double(sx(x)) + "\" cy=\"" +
           format_double(sy(y)) + "\" r=\"3\" fill=\"steelblue\"/>\n";
  }
  svg += "<polyline points=\"" + poly +
         "\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>\n";
  for (const auto& [x, y] : points) {
    svg += "<text x=\"" + format_double(sx(x)) + "\" y=\"" +
           format_double(kH - kB + 18) +
           "\" font-size=\"10\" text-anchor=\"middle\">" + format_double(x) +
           "</text>\n";
  }
  svg += "<text x=\"" + format_double((kL + kW - kR) / 2) + "\" y=\"" +
         format_double(kH - 15) +
         "\" font-size=\"14\" text-anchor=\"middle\">target return</text>\n";
  svg += "<text x=\"18\" y=\"" + format_double((kT + kH - kB) / 2) +
         "\" font-size=\"14\" text-anchor=\"middle\" transform=\"rotate(-90 "
         "18 " +
         format_double((kT + kH - kB) / 2) +
         ")\">worst-case return</text>\n";
  svg += "<text x=\"" + format_double(kL - 8) + "\" y=\"" +
         format_double(sy(y_min)) +
         "\" font-size=\"10\" text-anchor=\"end\">" + format_double(y_min) +
         "</text>\n";
  svg += "<text x=\"" + format_double(kL - 8) + "\" y=\"" +
         format_double(sy(y_max)) +
         "\" font-size=\"10\" text-anchor=\"end\">" + format_double(y_max) +
         "</text>\n";
  svg += "</svg>\n";
  write_file(path, svg);
}

}  // namespace ardt
