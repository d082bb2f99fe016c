#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ardt/environment.hpp"
#include "ardt/policies.hpp"
#include "ardt/policy_model.hpp"

namespace ardt {

struct AdversaryDef {
  std::string id;  // e.g. "eps:0.3"
  PolicySpec spec;
};

struct EvalConfig {
  std::vector<double> targets;  // conditioning returns z
  std::vector<AdversaryDef> population;
  int episodes_per_adversary = 100;
  std::vector<std::uint64_t> seeds = {0};
  ActionSelection mode = ActionSelection::kSample;
  int jobs = 1;  // worker cap; results are schedule-invariant
};

struct EvalCell {
  std::string adversary_id;
  double target = 0.0;
  double mean_return = 0.0;
  double std_return = 0.0;
  std::int64_t episodes = 0;
  double info_distance_mean = 0.0;  // |achieved return - z|
  double info_distance_std = 0.0;
};

struct EvalReport {
  std::string game_id;
  std::vector<double> targets;
  std::vector<std::string> adversary_ids;
  std::vector<EvalCell> cells;  // |population| x |targets|
  // min over the population of that adversary's mean, per target.
  std::vector<std::pair<double, double>> worst_case;  // (target, value)
  std::int64_t episodes_per_adversary = 0;
  std::vector<std::uint64_t> seeds;

  const EvalCell& cell(const std::string& adversary_id, double target) const;
  double worst_case_at(double target) const;

  bool operator==(const EvalReport&) const = default;
};

struct RolloutResult {
  double episode_return = 0.0;
  Trajectory trajectory;
};

// One episode: the model is conditioned on `target`, decremented by each
// observed reward; the adversary is adaptive (it observes the protagonist
// half-step before replying).
RolloutResult rollout(const DecisionTransformer& model, Policy& adversary,
                      const Environment& env, double target,
                      ActionSelection mode, Rng& rng);

// Means over episodes x seeds per (adversary, target); worst case is the
// minimum over the population. Episode e of seed s against adversary a
// uses the stream derived from (seed_s, a, e), so any execution order
// reproduces the same report.
EvalReport evaluate_worst_case(const DecisionTransformer& model,
                               const Environment& env, const EvalConfig& cfg);

// evaluate_worst_case over a target grid (the Fig.-2-style curve).
EvalReport target_return_sweep(const DecisionTransformer& model,
                               const Environment& env, EvalConfig cfg,
                               const std::vector<double>& z_list);

enum class ReportFormat { kJson, kCsv };
void write_report(const EvalReport& report, const std::filesystem::path& path,
                  ReportFormat format);
EvalReport load_report_json(const std::filesystem::path& path);

// Worst-case-return-vs-target-return line plot.
void write_sweep_svg(const EvalReport& report,
                     const std::filesystem::path& path);

}  // namespace ardt
