#ifndef NEUROFEM_RNG_HPP
#define NEUROFEM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace neurofem {

// Counter-based per-neuron noise streams: the draw for (seed, neuron, step)
// is a pure function, so results do not depend on execution order.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t noise_word(std::uint64_t seed, std::uint64_t neuron, std::uint64_t step) {
    std::uint64_t key = seed;
    key = mix64(key ^ (neuron * 0xD6E8FEB86659FD93ull));
    key = mix64(key ^ (step * 0xC2B2AE3D27D4EB4Full));
    return key;
}

// Standard normal via Box-Muller on the two 32-bit halves of one draw.
inline double gaussian_noise(std::uint64_t seed, std::uint64_t neuron, std::uint64_t step) {
    std::uint64_t w = noise_word(seed, neuron, step);
    double u1 = (static_cast<double>(w >> 32) + 1.0) / 4294967297.0;
    double u2 = static_cast<double>(w & 0xFFFFFFFFull) / 4294967296.0;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Uniform signed 24-bit integer in [-2^23, 2^23 - 1].
inline std::int32_t uniform24_noise(std::uint64_t seed, std::uint64_t neuron,
                                    std::uint64_t step) {
    std::uint64_t w = noise_word(seed, neuron, step);
    return static_cast<std::int32_t>((w >> 40) & 0xFFFFFFull) - (1 << 23);
}

// Arithmetic right shift with floor semantics for negative values.
inline std::int64_t asr(std::int64_t v, int shift) { return v >> shift; }

}  // namespace neurofem

#endif
