#pragma once

#include <cstdint>
#include <random>

namespace stochflow {

// Uniform double in [0, 1) from the top 53 bits of the generator output.
// Avoids the library-defined std distributions so that seeded streams are
// identical across standard library implementations.
inline double uniform01(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform_in(std::mt19937_64& gen, double lo, double hi) {
    return lo + (hi - lo) * uniform01(gen);
}

// Uniform integer in [0, n). Modulo bias is negligible for the small n used
// in instance generation.
inline std::uint64_t uniform_below(std::mt19937_64& gen, std::uint64_t n) {
    return n == 0 ? 0 : gen() % n;
}

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Deterministic child seed for stream `index` of a master seed. Used by the
// subselection optimizer so candidate runs and the shared evaluation sample
// draw from independent streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed ^ mix64(index + 1));
}

}  // namespace stochflow
