#include "ardt/policies.hpp"

#include <charconv>
#include <stdexcept>

#include "ardt/util.hpp"

namespace ardt {
namespace {

std::vector<int> legal_actions(const Episode& ep, PolicyRole role) {
  const bool adversary_turn = ep.awaiting_adversary();
  if (adversary_turn != (role == PolicyRole::kAdversary)) {
    throw std::logic_error("policy queried out of turn");
  }
  auto actions = adversary_turn ? ep.legal_adversary_actions()
                                : ep.legal_protagonist_actions();
  if (actions.empty()) throw std::logic_error("no legal action available");
  return actions;
}

class UniformPolicy final : public Policy {
 public:
  explicit UniformPolicy(PolicyRole role) : role_(role) {}
  int act(const Episode& ep, Rng& rng) override {
    return rng.pick(legal_actions(ep, role_));
  }

 private:
  PolicyRole role_;
};

class TreeEpsilonOptimalPolicy final : public Policy {
 public:
  TreeEpsilonOptimalPolicy(PolicyRole role, double eps, const GameTree& tree)
      : role_(role), eps_(eps), solution_(solve_maximin(tree)) {}

  int act(const Episode& ep, Rng& rng) override {
    const auto legal = legal_actions(ep, role_);
    if (rng.uniform() < eps_) return rng.pick(legal);
    const auto* tree_ep = dynamic_cast<const TreeEpisode*>(&ep);
    if (tree_ep == nullptr) {
      throw std::logic_error("tree policy used on a non-tree episode");
    }
    const int node = role_ == PolicyRole::kAdversary
                         ? tree_ep->adversary_node()
                         : tree_ep->current_node();
    return rng.pick(solution_.optimal_actions[static_cast<std::size_t>(node)]);
  }

 private:
  PolicyRole role_;
  double eps_;
  MaximinSolution solution_;
};

class ConnectFourEpsilonOptimalPolicy final : public Policy {
 public:
  ConnectFourEpsilonOptimalPolicy(PolicyRole role, double eps,
                                  ConnectFourConfig cfg)
      : role_(role), eps_(eps), solver_(cfg) {}

  int act(const Episode& ep, Rng& rng) override {
    const auto legal = legal_actions(ep, role_);
    if (rng.uniform() < eps_) return rng.pick(legal);
    const auto* c4_ep = dynamic_cast<const ConnectFourEpisode*>(&ep);
    if (c4_ep == nullptr) {
      throw std::logic_error("board policy used on a non-board episode");
    }
    // solve() is from the mover's perspective, which is exactly this
    // policy's side when queried in turn.
    return rng.pick(solver_.solve(c4_ep->board()).optimal_moves);
  }

 private:
  PolicyRole role_;
  double eps_;
  C4Solver solver_;
};

class FixedTablePolicy final : public Policy {
 public:
  FixedTablePolicy(PolicyRole role, std::map<std::string, int> table)
      : role_(role), table_(std::move(table)) {}

  static std::string state_key(const Episode& ep) {
    std::string key;
    for (const double v : ep.state_encoding()) {
      if (!key.empty()) key += ',';
      key += format_double(v);
    }
    return key;
  }

  int act(const Episode& ep, Rng&) override {
    (void)legal_actions(ep, role_);
    const auto it = table_.find(state_key(ep));
    if (it == table_.end()) {
      throw std::runtime_error("fixed-table policy has no entry for state " +
                               state_key(ep));
    }
    return it->second;
  }

 private:
  PolicyRole role_;
  std::map<std::string, int> table_;
};

}  // namespace

PolicySpec PolicySpec::parse(const std::string& text, PolicyRole role) {
  PolicySpec spec;
  spec.role = role;
  if (text == "uniform") {
    spec.kind = Kind::kUniform;
    return spec;
  }
  if (text.starts_with("eps:")) {
    spec.kind = Kind::kEpsilonOptimal;
    const std::string value = text.substr(4);
    try {
      spec.epsilon = std::stod(value);
    } catch (const std::exception&) {
      throw std::invalid_argument("cannot parse epsilon from '" + text + "'");
    }
    if (spec.epsilon < 0.0 || spec.epsilon > 1.0) {
      throw std::invalid_argument("epsilon must be in [0, 1], got " + value);
    }
    return spec;
  }
  throw std::invalid_argument("policy spec must be 'uniform' or 'eps:<float>'; got '" +
                              text + "'");
}

std::string PolicySpec::to_string() const {
  switch (kind) {
    case Kind::kUniform: return "uniform";
    case Kind::kEpsilonOptimal: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "eps:%g", epsilon);
      return buf;
    }
    case Kind::kFixedTable: return "fixed_table";
  }
  return "uniform";
}

std::unique_ptr<Policy> make_policy(const PolicySpec& spec,
                                    const Environment& env) {
  switch (spec.kind) {
    case PolicySpec::Kind::kUniform:
      return std::make_unique<UniformPolicy>(spec.role);
    case PolicySpec::Kind::kEpsilonOptimal: {
      if (spec.epsilon < 0.0 || spec.epsilon > 1.0) {
        throw std::invalid_argument("epsilon must be in [0, 1]");
      }
      if (const auto* tree_env = dynamic_cast<const TreeEnvironment*>(&env)) {
        return std::make_unique<TreeEpsilonOptimalPolicy>(
            spec.role, spec.epsilon, tree_env->tree());
      }
      if (const auto* c4_env =
              dynamic_cast<const ConnectFourEnvironment*>(&env)) {
        return std::make_unique<ConnectFourEpsilonOptimalPolicy>(
            spec.role, spec.epsilon, c4_env->config());
      }
      throw std::invalid_argument(
          "epsilon-optimal policy requires a solvable game");
    }
    case PolicySpec::Kind::kFixedTable:
      return std::make_unique<FixedTablePolicy>(spec.role, spec.table);
  }
  throw std::invalid_argument("unknown policy kind");
}

}  // namespace ardt
