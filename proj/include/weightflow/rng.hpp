#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace weightflow {

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Seed of the named sub-stream `name`/`index` of a master seed. Stages draw
// from distinct streams ("init", "shuffle", "sample", ...) so changing how
// much one stage consumes never shifts another.
constexpr std::uint64_t substream_seed(std::uint64_t master, std::string_view name, std::uint64_t index = 0) {
    return mix64(mix64(master ^ fnv1a64(name)) + index);
}

inline std::mt19937_64 substream(std::uint64_t master, std::string_view name, std::uint64_t index = 0) {
    return std::mt19937_64(substream_seed(master, name, index));
}

// Uniform integer in [0, n) by rejection, independent of the standard
// library's distribution implementation.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// Standard normal by Box-Muller (one draw per call, two uniforms consumed).
inline double normal01(std::mt19937_64& rng) {
    const double u1 = 1.0 - uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace weightflow
