#pragma once

#include "ardt/data_trie.hpp"
#include "ardt/trajectory.hpp"
#include "ardt/value_estimator.hpp"

namespace ardt {

// Fills minimax_rtg from a tabular value map keyed by exact history
// prefixes. Throws identifying the trajectory and step on a missing key.
Dataset relabel_dataset(const Dataset& ds, const TabularValueMap& values);

// Fills minimax_rtg with q_tilde predictions from a fitted estimator pair.
Dataset relabel_dataset(const Dataset& ds, const Environment& env,
                        const ValueEstimatorPair& est);

}  // namespace ardt
