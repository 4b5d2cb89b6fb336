#pragma once

#include <cstdint>

#include <boost/random/mersenne_twister.hpp>

namespace maqm {

// Boost.Random engines and distributions have a single portable
// implementation, so seeded draws match across platforms and toolchains.
using Rng = boost::random::mt19937_64;

/// Seed for an independent substream `index` of a run seeded with `seed`.
/// Two rounds of splitmix64 finalisation over the pair.
constexpr std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) ^ (index * 0xd1b54a32d192ed03ULL + 1));
}

}  // namespace maqm
