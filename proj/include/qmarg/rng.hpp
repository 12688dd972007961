#pragma once

#include <cstdint>
#include <random>

namespace qmarg {

/// SplitMix64 finalizer. Used to derive independent sub-seeds from a master
/// seed and a counter so that work can be partitioned across threads without
/// changing any sampled value.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Deterministic engine for stream `counter` of master seed `seed`.
inline std::mt19937_64 sub_rng(std::uint64_t seed, std::uint64_t counter) {
    return std::mt19937_64(splitmix64(seed ^ splitmix64(counter)));
}

}  // namespace qmarg
