// Seeded random streams.
//
// Every random quantity is drawn from a std::mt19937_64 engine whose seed is
// derived from (base seed, stream id) through SplitMix64. Streams in use:
//   0  data matrix A
//   1  signal (x0 - x_tilde)
//   2  label noise eta
//   3  sample indices of a stochastic run
//   4  Brownian increments of the homogenized diffusion
// Ensemble member s draws its problem from derive_seed(seed, 2s) and its
// sample indices from derive_seed(seed, 2s + 1).
#pragma once

#include <cstdint>
#include <random>

namespace momdyn {

enum class Stream : std::uint64_t { Matrix = 0, Signal = 1, Noise = 2, Indices = 3, Brownian = 4 };

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ (index * 0xD1B54A32D192ED03ULL + 1));
}

inline std::mt19937_64 make_engine(std::uint64_t seed, Stream s) {
    return std::mt19937_64(derive_seed(seed ^ 0x5DEECE66DULL, static_cast<std::uint64_t>(s)));
}

}  // namespace momdyn
