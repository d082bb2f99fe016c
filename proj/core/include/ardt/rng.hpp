#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace ardt {

// Deterministic xoshiro256++ generator seeded through SplitMix64.
// Self-contained on purpose: results must be identical across platforms
// and standard-library versions, including the distribution helpers below.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform in [0, 1).
  double uniform();
  // Uniform integer in [0, n). Requires n > 0.
  std::int64_t uniform_int(std::int64_t n);
  // Standard normal via Marsaglia polar.
  double normal();
  // Uniform pick from a non-empty set.
  template <typename T>
  const T& pick(const std::vector<T>& items) {
    return items[static_cast<std::size_t>(uniform_int(
        static_cast<std::int64_t>(items.size())))];
  }

  // Fisher-Yates over index range [0, n).
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t state_[4];
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

// Derives an independent stream from a master seed and a stream index.
// Collection, evaluation and training derive one stream per unit of work
// (trajectory, episode, run) so that parallel and serial schedules agree.
Rng make_stream(std::uint64_t master_seed, std::uint64_t stream_index);

// Two-level split for nested work units, e.g. (adversary, seed, episode).
std::uint64_t derive_seed(std::uint64_t master_seed,
                          std::span<const std::uint64_t> path);

}  // namespace ardt
