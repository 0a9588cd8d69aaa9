#pragma once

#include <cstdint>
#include <random>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

namespace pairsim {

/// Engine used everywhere. Distributions come from Boost.Random, whose
/// algorithms are fixed across platforms, so a seed reproduces bit-exactly.
using Rng = std::mt19937_64;

/// Independent generator for sub-stream `stream` of a master seed.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
  return Rng(seq);
}

/// Deterministic child seed, e.g. for sweep point `index`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  Rng r = make_rng(seed, 0x9e3779b97f4a7c15ull ^ index);
  return r();
}

inline double uniform01(Rng& rng) { return boost::random::uniform_01<double>{}(rng); }

inline double std_normal(Rng& rng) { return boost::random::normal_distribution<double>{}(rng); }

/// Exponential variate with unit mean.
inline double std_exponential(Rng& rng) {
  return boost::random::exponential_distribution<double>{}(rng);
}

}  // namespace pairsim
