#include "ardt/relabel.hpp"

#include <stdexcept>

namespace ardt {

Dataset relabel_dataset(const Dataset& ds, const TabularValueMap& values) {
  Dataset out = ds;
  for (std::size_t ti = 0; ti < out.trajectories.size(); ++ti) {
    Trajectory& traj = out.trajectories[ti];
    traj.minimax_rtg.assign(traj.steps.size(), 0.0);
    std::string key;
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const Step& step = traj.steps[t];
      if (t == 0) {
        key = "s=" + DataTrie::state_key(step.state);
      } else {
        const Step& prev = traj.steps[t - 1];
        key += ";a=" + std::to_string(prev.p_action) +
               ";b=" + std::to_string(prev.adv_action) +
               ";s=" + DataTrie::state_key(step.state);
      }
      const auto v = values.get(key, step.p_action);
      if (!v.has_value()) {
        throw std::runtime_error(
            "relabel: no value for trajectory " + std::to_string(ti) +
            " step " + std::to_string(t) + " (history " + key + ", action " +
            std::to_string(step.p_action) + ")");
      }
      traj.minimax_rtg[t] = *v;
    }
  }
  return out;
}

Dataset relabel_dataset(const Dataset& ds, const Environment& env,
                        const ValueEstimatorPair& est) {
  EstimatorFeatures feat(env, ds, est.config().context_length);
  const std::vector<double> values = est.nu_values(feat);
  Dataset out = ds;
  std::size_t row = 0;
  for (auto& traj : out.trajectories) {
    traj.minimax_rtg.assign(traj.steps.size(), 0.0);
    for (std::size_t t = 0; t < traj.steps.size(); ++t, ++row) {
      traj.minimax_rtg[t] = values[row];
    }
  }
  return out;
}

}  // namespace ardt
