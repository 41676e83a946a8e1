#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

namespace qcomm {

/// The single RNG type used throughout the library. Every stochastic
/// operation takes one by reference; nothing draws from a hidden global.
using Rng = std::mt19937_64;

/// Uniform double in [0, 1) built from the top 53 bits of one draw. Unlike
/// std::uniform_real_distribution this is identical across standard libraries.
double uniform01(Rng& rng);

/// Unbiased integer in [0, n). Requires n > 0.
std::size_t uniform_index(Rng& rng, std::size_t n);

/// Fair coin.
inline bool random_bit(Rng& rng) { return (rng() >> 63) != 0; }

/// Independent stream number `stream` of the root seed (splitmix64 mixing).
Rng derive_stream(std::uint64_t root_seed, std::uint64_t stream);

/// In-place Fisher-Yates shuffle with uniform_index.
template <typename It>
void shuffle(It first, It last, Rng& rng) {
  const auto n = static_cast<std::size_t>(last - first);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    using std::swap;
    swap(first[i - 1], first[j]);
  }
}

}  // namespace qcomm
