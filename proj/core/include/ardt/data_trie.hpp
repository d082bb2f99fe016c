#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ardt/trajectory.hpp"

namespace ardt {

// Prefix tree over observed trajectories. Each node is a history
// (s_0, a_0, adv_0, ..., s_t); edges fan out by in-sample protagonist
// action, then in-sample adversary action, then empirical (reward, next
// state) outcome with visit counts.
class DataTrie {
 public:
  struct Outcome {
    double reward = 0.0;
    int child = -1;  // -1 when the step ends the trajectory
    std::int64_t count = 0;
  };
  struct AdvEntry {
    int adv_action = kNoAdversaryAction;
    std::int64_t count = 0;
    std::vector<Outcome> outcomes;
  };
  struct ActionEntry {
    int p_action = 0;
    std::int64_t count = 0;
    double rtg_sum = 0.0;  // observed returns-to-go, for expected values
    std::vector<AdvEntry> adversaries;
  };
  struct Node {
    std::string history_key;
    std::int64_t count = 0;
    std::vector<ActionEntry> actions;
  };

  explicit DataTrie(const Dataset& ds);

  const std::vector<Node>& nodes() const { return nodes_; }
  // Trie node ids along a trajectory (one per step).
  const std::vector<std::vector<int>>& trajectory_paths() const {
    return paths_;
  }
  const std::vector<int>& roots() const { return roots_; }

  static std::string state_key(std::span<const double> encoding);

 private:
  int intern_child(int parent, std::span<const double> state_encoding);

  std::vector<Node> nodes_;
  std::vector<int> roots_;  // one per distinct initial state
  std::vector<std::vector<int>> paths_;
};

// Per-(history, action) value table, serializable as a JSON list of
// {"history_key", "action", "value"}.
class TabularValueMap {
 public:
  void set(const std::string& history_key, int action, double value);
  std::optional<double> get(const std::string& history_key, int action) const;
  std::size_t size() const;

  const std::map<std::string, std::map<int, double>>& entries() const {
    return entries_;
  }

  void save(const std::filesystem::path& path) const;
  static TabularValueMap load(const std::filesystem::path& path);

 private:
  std::map<std::string, std::map<int, double>> entries_;
};

// Exact in-sample minimax returns-to-go: the adversary minimises over
// observed adversary actions, the protagonist then maximises over observed
// next actions, and stochastic transitions average over empirical
// (reward, next state) visit frequencies. Terminal continuation is 0.
TabularValueMap tabular_minimax_rtg(const Dataset& ds);
TabularValueMap tabular_minimax_rtg(const DataTrie& trie);

// Empirical mean of observed returns-to-go over all continuations of
// (history, action).
TabularValueMap tabular_expected_rtg(const Dataset& ds);
TabularValueMap tabular_expected_rtg(const DataTrie& trie);

// In-sample best case (both players maximise); test oracle for ordering
// properties.
TabularValueMap tabular_maximax_rtg(const DataTrie& trie);

// Recomputes the minimax recursion at every trie node and returns the
// largest absolute residual against `values` (0 for a true fixed point).
double minimax_fixed_point_residual(const DataTrie& trie,
                                    const TabularValueMap& values);

}  // namespace ardt
