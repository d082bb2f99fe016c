#include "ardt/dataset_io.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace ardt {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("dataset line " + std::to_string(line_no) + ": " +
                           what);
}

const json& require_key(const json& j, const char* key, std::size_t line_no) {
  const auto it = j.find(key);
  if (it == j.end()) fail(line_no, std::string("missing key \"") + key + "\"");
  return *it;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path.string());

  ordered_json header;
  header["game_id"] = ds.game_id;
  header["meta"] = {
      {"protagonist", ds.meta.protagonist},
      {"adversary", ds.meta.adversary},
      {"budget_kind", ds.meta.budget_kind},
      {"budget_value", ds.meta.budget_value},
      {"seed", ds.meta.seed},
      {"n_trajectories", ds.meta.n_trajectories},
      {"n_steps", ds.meta.n_steps},
      {"provenance", ds.meta.provenance},
  };
  out << header.dump() << '\n';

  for (const auto& traj : ds.trajectories) {
    ordered_json j;
    auto& states = j["states"] = ordered_json::array();
    auto& p_actions = j["p_actions"] = ordered_json::array();
    auto& adv_actions = j["adv_actions"] = ordered_json::array();
    auto& rewards = j["rewards"] = ordered_json::array();
    for (const auto& s : traj.steps) {
      states.push_back(s.state);
      p_actions.push_back(s.p_action);
      adv_actions.push_back(s.adv_action);
      rewards.push_back(s.reward);
    }
    j["rtg"] = traj.rtg;
    if (traj.has_minimax_rtg()) j["minimax_rtg"] = traj.minimax_rtg;
    out << j.dump() << '\n';
  }
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());

  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(line_no, e.what());
    }
    if (line_no == 1) {
      ds.game_id = require_key(j, "game_id", line_no).get<std::string>();
      const json& meta = require_key(j, "meta", line_no);
      ds.meta.protagonist = meta.value("protagonist", "");
      ds.meta.adversary = meta.value("adversary", "");
      ds.meta.budget_kind = meta.value("budget_kind", "");
      ds.meta.budget_value = meta.value("budget_value", std::int64_t{0});
      ds.meta.seed = meta.value("seed", std::uint64_t{0});
      ds.meta.n_trajectories = meta.value("n_trajectories", std::int64_t{0});
      ds.meta.n_steps = meta.value("n_steps", std::int64_t{0});
      ds.meta.provenance = meta.value("provenance", "");
      continue;
    }
    Trajectory traj;
    const json& states = require_key(j, "states", line_no);
    const json& p_actions = require_key(j, "p_actions", line_no);
    const json& adv_actions = require_key(j, "adv_actions", line_no);
    const json& rewards = require_key(j, "rewards", line_no);
    const json& rtg = require_key(j, "rtg", line_no);
    const std::size_t n = states.size();
    if (p_actions.size() != n || adv_actions.size() != n ||
        rewards.size() != n || rtg.size() != n) {
      fail(line_no, "field lengths disagree");
    }
    if (n == 0) fail(line_no, "empty trajectory");
    for (std::size_t t = 0; t < n; ++t) {
      Step step;
      if (!states[t].is_array()) fail(line_no, "states must be arrays");
      step.state = states[t].get<std::vector<double>>();
      step.p_action = p_actions[t].get<int>();
      step.adv_action = adv_actions[t].get<int>();
      step.reward = rewards[t].get<double>();
      traj.steps.push_back(std::move(step));
    }
    traj.rtg = rtg.get<std::vector<double>>();
    if (const auto it = j.find("minimax_rtg"); it != j.end()) {
      traj.minimax_rtg = it->get<std::vector<double>>();
      if (traj.minimax_rtg.size() != n) {
        fail(line_no, "minimax_rtg length mismatch");
      }
    }
    ds.trajectories.push_back(std::move(traj));
  }
  if (line_no == 0) {
    throw std::runtime_error("dataset file is empty: " + path.string());
  }
  return ds;
}

}  // namespace ardt
