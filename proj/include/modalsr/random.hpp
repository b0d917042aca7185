// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace modalsr {

using Rng = std::mt19937_64;

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stream seed for one task, derived from the master seed and a tag path
/// (e.g. {condition, trial, frequency}). Order-independent across tasks, so
/// parallel schedules draw identical numbers.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) noexcept {
    std::uint64_t h = mix64(master);
    for (auto t : tags)
        h = mix64(h ^ mix64(t + 0x632be59bd9b4e019ULL));
    return h;
}

/// Circular complex Gaussian with E|z|^2 = variance.
inline std::complex<double> complex_gaussian(Rng& rng, double variance) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const double s = std::sqrt(0.5 * variance);
    const double re = normal(rng);
    const double im = normal(rng);
    return {s * re, s * im};
}

} // namespace modalsr
