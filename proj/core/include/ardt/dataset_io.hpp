#pragma once

#include <filesystem>

#include "ardt/trajectory.hpp"

namespace ardt {

// JSON Lines: the first line is a header {"game_id", "meta"}; every other
// line is one trajectory with keys "states", "p_actions", "adv_actions"
// (-1 for chance-resolved steps), "rewards", "rtg" and, when relabeled,
// "minimax_rtg".
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

// Throws std::runtime_error naming the offending line on malformed input.
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace ardt
