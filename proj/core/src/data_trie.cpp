#include "ardt/data_trie.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <unordered_map>

#include "ardt/util.hpp"
#include "json.hpp"

namespace ardt {
namespace {

std::string outcome_key(double reward, std::span<const double> state,
                        bool terminal) {
  std::string key = terminal ? "T" : DataTrie::state_key(state);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", reward);
  return std::string(buf) + "|" + key;
}

}  // namespace

std::string DataTrie::state_key(std::span<const double> encoding) {
  std::string key;
  char buf[40];
  for (const double v : encoding) {
    if (!key.empty()) key += ':';
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    key += buf;
  }
  return key;
}

DataTrie::DataTrie(const Dataset& ds) {
  if (ds.trajectories.empty()) {
    throw std::invalid_argument("cannot build a trie from an empty dataset");
  }
  std::unordered_map<std::string, int> root_index;
  // Fast child lookup: (node, p_action, adv_action, outcome key) -> child.
  std::unordered_map<std::string, int> outcome_child;

  paths_.reserve(ds.trajectories.size());
  for (const auto& traj : ds.trajectories) {
    std::vector<int> path;
    path.reserve(traj.length());
    int node = -1;
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const Step& step = traj.steps[t];
      if (t == 0) {
        const std::string key = state_key(step.state);
        const auto it = root_index.find(key);
        if (it != root_index.end()) {
          node = it->second;
        } else {
          node = static_cast<int>(nodes_.size());
          nodes_.push_back(Node{"s=" + key, 0, {}});
          root_index.emplace(key, node);
          roots_.push_back(node);
        }
      }
      path.push_back(node);
      Node& n = nodes_[static_cast<std::size_t>(node)];
      ++n.count;

      auto action_it =
          std::find_if(n.actions.begin(), n.actions.end(),
                       [&](const ActionEntry& e) {
                         return e.p_action == step.p_action;
                       });
      if (action_it == n.actions.end()) {
        n.actions.push_back(ActionEntry{step.p_action, 0, 0.0, {}});
        action_it = std::prev(n.actions.end());
      }
      ++action_it->count;
      action_it->rtg_sum += traj.rtg[t];

      auto adv_it = std::find_if(
          action_it->adversaries.begin(), action_it->adversaries.end(),
          [&](const AdvEntry& e) { return e.adv_action == step.adv_action; });
      if (adv_it == action_it->adversaries.end()) {
        action_it->adversaries.push_back(
            AdvEntry{step.adv_action, 0, {}});
        adv_it = std::prev(action_it->adversaries.end());
      }
      ++adv_it->count;

      const bool terminal = t + 1 == traj.steps.size();
      const std::span<const double> next_state =
          terminal ? std::span<const double>{}
                   : std::span<const double>(traj.steps[t + 1].state);
      const std::string ok = std::to_string(node) + "/" +
                             std::to_string(step.p_action) + "/" +
                             std::to_string(step.adv_action) + "/" +
                             outcome_key(step.reward, next_state, terminal);
      const auto oit = outcome_child.find(ok);
      Outcome* outcome = nullptr;
      if (oit != outcome_child.end()) {
        for (auto& o : adv_it->outcomes) {
          const bool same_child =
              terminal ? o.child == -1 : o.child == oit->second;
          if (same_child && o.reward == step.reward) {
            outcome = &o;
            break;
          }
        }
      }
      int child = -1;
      if (outcome == nullptr) {
        if (!terminal) {
          // Child node key extends this node's history.
          child = static_cast<int>(nodes_.size());
          Node& parent = nodes_[static_cast<std::size_t>(node)];
          nodes_.push_back(Node{
              parent.history_key + ";a=" + std::to_string(step.p_action) +
                  ";b=" + std::to_string(step.adv_action) +
                  ";s=" + state_key(traj.steps[t + 1].state),
              0,
              {}});
          // Re-find the action/adv entries: the push may have invalidated
          // references into nodes_.
          Node& n2 = nodes_[static_cast<std::size_t>(node)];
          auto a2 = std::find_if(n2.actions.begin(), n2.actions.end(),
                                 [&](const ActionEntry& e) {
                                   return e.p_action == step.p_action;
                                 });
          auto v2 = std::find_if(a2->adversaries.begin(),
                                 a2->adversaries.end(), [&](const AdvEntry& e) {
                                   return e.adv_action == step.adv_action;
                                 });
          v2->outcomes.push_back(Outcome{step.reward, child, 0});
          outcome = &v2->outcomes.back();
        } else {
          adv_it->outcomes.push_back(Outcome{step.reward, -1, 0});
          outcome = &adv_it->outcomes.back();
        }
        outcome_child.emplace(ok, outcome->child);
      } else {
        child = outcome->child;
      }
      ++outcome->count;
      node = outcome->child;
    }
    paths_.push_back(std::move(path));
  }
}

void TabularValueMap::set(const std::string& history_key, int action,
                          double value) {
  entries_[history_key][action] = value;
}

std::optional<double> TabularValueMap::get(const std::string& history_key,
                                           int action) const {
  const auto it = entries_.find(history_key);
  if (it == entries_.end()) return std::nullopt;
  const auto jt = it->second.find(action);
  if (jt == it->second.end()) return std::nullopt;
  return jt->second;
}

std::size_t TabularValueMap::size() const {
  std::size_t n = 0;
  for (const auto& [key, actions] : entries_) n += actions.size();
  return n;
}

void TabularValueMap::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& [key, actions] : entries_) {
    for (const auto& [action, value] : actions) {
      j.push_back({{"history_key", key}, {"action", action}, {"value", value}});
    }
  }
  write_file(path, j.dump(2) + "\n");
}

TabularValueMap TabularValueMap::load(const std::filesystem::path& path) {
  TabularValueMap map;
  const auto j = nlohmann::json::parse(read_file(path));
  for (const auto& entry : j) {
    map.set(entry.at("history_key").get<std::string>(),
            entry.at("action").get<int>(), entry.at("value").get<double>());
  }
  return map;
}

namespace {

enum class AdversaryAggregate { kMin, kMax };

// Q(h, a) = agg over in-sample adv of
//           sum_outcomes p_hat * (r + max over in-sample a' of Q(child, a')).
class TrieSolver {
 public:
  TrieSolver(const DataTrie& trie, AdversaryAggregate agg)
      : trie_(trie), agg_(agg),
        action_values_(trie.nodes().size()) {}

  TabularValueMap solve() {
    TabularValueMap map;
    for (std::size_t i = 0; i < trie_.nodes().size(); ++i) {
      const auto& node = trie_.nodes()[i];
      for (const auto& action : node.actions) {
        map.set(node.history_key, action.p_action,
                action_value(static_cast<int>(i), action));
      }
    }
    return map;
  }

  double best_continuation(int node) {
    const auto& n = trie_.nodes()[static_cast<std::size_t>(node)];
    double best = 0.0;
    bool first = true;
    for (const auto& action : n.actions) {
      const double q = action_value(node, action);
      best = first ? q : std::max(best, q);
      first = false;
    }
    return best;
  }

 private:
  double action_value(int node, const DataTrie::ActionEntry& action) {
    auto& cache = action_values_[static_cast<std::size_t>(node)];
    if (const auto it = cache.find(action.p_action); it != cache.end()) {
      return it->second;
    }
    double agg_value = 0.0;
    bool first = true;
    for (const auto& adv : action.adversaries) {
      double expectation = 0.0;
      for (const auto& outcome : adv.outcomes) {
        const double cont =
            outcome.child < 0 ? 0.0 : best_continuation(outcome.child);
        expectation += static_cast<double>(outcome.count) /
                       static_cast<double>(adv.count) *
                       (outcome.reward + cont);
      }
      if (first) {
        agg_value = expectation;
        first = false;
      } else {
        agg_value = agg_ == AdversaryAggregate::kMin
                        ? std::min(agg_value, expectation)
                        : std::max(agg_value, expectation);
      }
    }
    cache.emplace(action.p_action, agg_value);
    return agg_value;
  }

  const DataTrie& trie_;
  AdversaryAggregate agg_;
  std::vector<std::unordered_map<int, double>> action_values_;
};

}  // namespace

TabularValueMap tabular_minimax_rtg(const DataTrie& trie) {
  return TrieSolver(trie, AdversaryAggregate::kMin).solve();
}

TabularValueMap tabular_minimax_rtg(const Dataset& ds) {
  return tabular_minimax_rtg(DataTrie(ds));
}

TabularValueMap tabular_maximax_rtg(const DataTrie& trie) {
  return TrieSolver(trie, AdversaryAggregate::kMax).solve();
}

TabularValueMap tabular_expected_rtg(const DataTrie& trie) {
  TabularValueMap map;
  for (const auto& node : trie.nodes()) {
    for (const auto& action : node.actions) {
      map.set(node.history_key, action.p_action,
              action.rtg_sum / static_cast<double>(action.count));
    }
  }
  return map;
}

TabularValueMap tabular_expected_rtg(const Dataset& ds) {
  return tabular_expected_rtg(DataTrie(ds));
}

double minimax_fixed_point_residual(const DataTrie& trie,
                                    const TabularValueMap& values) {
  double max_residual = 0.0;
  for (const auto& node : trie.nodes()) {
    for (const auto& action : node.actions) {
      // One application of the recursion with children read from `values`.
      double agg_value = 0.0;
      bool first_adv = true;
      for (const auto& adv : action.adversaries) {
        double expectation = 0.0;
        for (const auto& outcome : adv.outcomes) {
          double cont = 0.0;
          if (outcome.child >= 0) {
            const auto& child =
                trie.nodes()[static_cast<std::size_t>(outcome.child)];
            bool first_action = true;
            for (const auto& next_action : child.actions) {
              const auto v =
                  values.get(child.history_key, next_action.p_action);
              if (!v.has_value()) return 1e300;  // missing entry
              cont = first_action ? *v : std::max(cont, *v);
              first_action = false;
            }
          }
          expectation += static_cast<double>(outcome.count) /
                         static_cast<double>(adv.count) *
                         (outcome.reward + cont);
        }
        agg_value = first_adv ? expectation : std::min(agg_value, expectation);
        first_adv = false;
      }
      const auto stored = values.get(node.history_key, action.p_action);
      if (!stored.has_value()) return 1e300;
      max_residual = std::max(max_residual, std::abs(agg_value - *stored));
    }
  }
  return max_residual;
}

}  // namespace ardt
