#pragma once

#include <cstdint>
#include <random>

namespace vto {

using Rng = std::mt19937_64;

/// Fixed stream offsets. Each concern draws from its own generator so that
/// adding draws in one place never shifts another.
enum class Stream : std::uint64_t {
  Placement = 1,
  Mobility = 2,
  Tasks = 3,
  Strategy = 4,
  Swarm = 5,
  Training = 6,
};

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

inline Rng make_rng(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  return make_rng(seed, static_cast<std::uint64_t>(stream), index);
}

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double uniform01(Rng& rng) { return uniform(rng, 0.0, 1.0); }

}  // namespace vto
