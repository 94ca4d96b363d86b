// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Deterministic sample streams. Everything stochastic in the library draws
// from these so outputs depend only on indices and seeds.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

#include "mvx/vec.hpp"

namespace mvx {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline double radical_inverse2(uint32_t i) {
    i = (i << 16) | (i >> 16);
    i = ((i & 0x00ff00ffu) << 8) | ((i & 0xff00ff00u) >> 8);
    i = ((i & 0x0f0f0f0fu) << 4) | ((i & 0xf0f0f0f0u) >> 4);
    i = ((i & 0x33333333u) << 2) | ((i & 0xccccccccu) >> 2);
    i = ((i & 0x55555555u) << 1) | ((i & 0xaaaaaaaau) >> 1);
    return double(i) * 0x1p-32;
}

inline double radical_inverse(uint32_t i, uint32_t base) {
    const double inv = 1.0 / base;
    double f = inv, r = 0;
    while (i > 0) {
        r += f * (i % base);
        i /= base;
        f *= inv;
    }
    return r;
}

/// k-th of n Hammersley points in [0,1)^2.
inline std::pair<double, double> hammersley(uint32_t k, uint32_t n) {
    return {(k + 0.5) / n, radical_inverse2(k)};
}

/// Prefix-stable 2D sequence (Roberts R2); the first m points never depend on n.
inline std::pair<double, double> r2_point(uint64_t k) {
    constexpr double g = 1.32471795724474602596;
    constexpr double a1 = 1.0 / g, a2 = 1.0 / (g * g);
    const double u = 0.5 + a1 * double(k), v = 0.5 + a2 * double(k);
    return {u - std::floor(u), v - std::floor(v)};
}

/// Uniform direction on the unit sphere.
inline Vec3 uniform_sphere(double u1, double u2) {
    const double z = 1.0 - 2.0 * u1;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(phi), r * std::sin(phi), z};
}

/// Small counter-based generator (PCG32). Used for render paths and rejection tails.
class Pcg32 {
public:
    explicit Pcg32(uint64_t seed = 0x853c49e6748fea9bull, uint64_t stream = 0xda3e39cb94b95bdbull) {
        state_ = 0;
        inc_ = (stream << 1u) | 1u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    uint32_t next_u32() {
        const uint64_t old = state_;
        state_ = old * 6364136223846793005ull + inc_;
        const uint32_t xorshifted = uint32_t(((old >> 18u) ^ old) >> 27u);
        const uint32_t rot = uint32_t(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((~rot + 1u) & 31));
    }

    /// Uniform in [0,1).
    double next() { return (next_u32() >> 5) * 0x1p-27 + (next_u32() >> 6) * 0x1p-53; }

private:
    uint64_t state_, inc_;
};

}  // namespace mvx
