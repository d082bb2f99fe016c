#include "ardt/rng.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ardt {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
  std::uint64_t sm = seed;
  for (auto& s : state_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double Rng::uniform() {
  // 53 high bits -> double in [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::int64_t Rng::uniform_int(std::int64_t n) {
  if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
  const auto un = static_cast<std::uint64_t>(n);
  // Rejection sampling to avoid modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  std::uint64_t v = next_u64();
  while (v >= limit) v = next_u64();
  return static_cast<std::int64_t>(v % un);
}

double Rng::normal() {
  if (has_spare_normal_) {
    has_spare_normal_ = false;
    return spare_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double m = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * m;
  has_spare_normal_ = true;
  return u * m;
}

std::vector<std::size_t> Rng::permutation(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_int(static_cast<std::int64_t>(i)));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

Rng make_stream(std::uint64_t master_seed, std::uint64_t stream_index) {
  std::uint64_t x = master_seed;
  std::uint64_t a = splitmix64(x);
  std::uint64_t y = stream_index ^ 0x6a09e667f3bcc909ULL;
  std::uint64_t b = splitmix64(y);
  return Rng(a ^ rotl(b, 32));
}

std::uint64_t derive_seed(std::uint64_t master_seed,
                          std::span<const std::uint64_t> path) {
  std::uint64_t acc = master_seed;
  for (std::uint64_t p : path) {
    std::uint64_t x = acc;
    std::uint64_t h = splitmix64(x);
    std::uint64_t y = p ^ 0xbb67ae8584caa73bULL;
    acc = h ^ rotl(splitmix64(y), 17);
  }
  return acc;
}

}  // namespace ardt
