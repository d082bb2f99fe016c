#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ardt/tensor.hpp"

namespace ardt::nn {

// Checkpoint layout: one JSON header line holding an architecture config
// (free-form) and a manifest of {name, shape, byte offset} entries, then a
// flat little-endian float64 blob with the parameters at their offsets.
void save_checkpoint(const std::filesystem::path& path,
                     const std::string& config_json,
                     const std::vector<std::pair<std::string, Tensor>>& params);

struct LoadedCheckpoint {
  std::string config_json;
  std::vector<std::pair<std::string, Tensor>> params;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ardt::nn
