// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

// AVX2 variants. Compiled with -mavx2 only (no FMA) so every lane performs
// the same IEEE operations as the scalar reference.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "mvx/simd.hpp"

namespace mvx::simd {
namespace {

// Four interleaved xyz vectors -> x, y, z lanes.
inline void load_xyz4(const double* p, __m256d& x, __m256d& y, __m256d& z) {
    const __m256d a = _mm256_loadu_pd(p);      // x0 y0 z0 x1
    const __m256d b = _mm256_loadu_pd(p + 4);  // y1 z1 x2 y2
    const __m256d c = _mm256_loadu_pd(p + 8);  // z2 x3 y3 z3
    x = _mm256_permute4x64_pd(_mm256_blend_pd(_mm256_blend_pd(a, b, 0b0100), c, 0b0010),
                              _MM_SHUFFLE(1, 2, 3, 0));
    y = _mm256_permute4x64_pd(_mm256_blend_pd(_mm256_blend_pd(a, b, 0b1001), c, 0b0100),
                              _MM_SHUFFLE(2, 3, 0, 1));
    z = _mm256_permute4x64_pd(_mm256_blend_pd(_mm256_blend_pd(a, b, 0b0010), c, 0b1001),
                              _MM_SHUFFLE(3, 0, 1, 2));
}

inline double pairwise_sum(__m256d v) {
    alignas(32) double l[4];
    _mm256_store_pd(l, v);
    return (l[0] + l[1]) + (l[2] + l[3]);
}

void second_moment(const double* xyz, size_t n, double out[6]) {
    __m256d acc[6];
    for (auto& a : acc) a = _mm256_setzero_pd();
    const size_t body = n & ~size_t(3);
    for (size_t i = 0; i < body; i += 4) {
        __m256d x, y, z;
        load_xyz4(xyz + 3 * i, x, y, z);
        acc[0] = _mm256_add_pd(acc[0], _mm256_mul_pd(x, x));
        acc[1] = _mm256_add_pd(acc[1], _mm256_mul_pd(y, y));
        acc[2] = _mm256_add_pd(acc[2], _mm256_mul_pd(z, z));
        acc[3] = _mm256_add_pd(acc[3], _mm256_mul_pd(x, y));
        acc[4] = _mm256_add_pd(acc[4], _mm256_mul_pd(x, z));
        acc[5] = _mm256_add_pd(acc[5], _mm256_mul_pd(y, z));
    }
    for (int c = 0; c < 6; ++c) out[c] = pairwise_sum(acc[c]);
    for (size_t i = body; i < n; ++i) {
        const double* p = xyz + 3 * i;
        out[0] += p[0] * p[0];
        out[1] += p[1] * p[1];
        out[2] += p[2] * p[2];
        out[3] += p[0] * p[1];
        out[4] += p[0] * p[2];
        out[5] += p[1] * p[2];
    }
}

inline __m256d bin4(__m256d d) {
    const __m256d f = _mm256_floor_pd(
        _mm256_mul_pd(_mm256_mul_pd(_mm256_add_pd(d, _mm256_set1_pd(1.0)), _mm256_set1_pd(0.5)),
                      _mm256_set1_pd(5.0)));
    return _mm256_min_pd(_mm256_max_pd(f, _mm256_setzero_pd()), _mm256_set1_pd(4.0));
}

inline int bin_of(double d) {
    const double f = std::floor((d + 1.0) * 0.5 * 5.0);
    return int(std::clamp(f, 0.0, 4.0));
}

void bin_directions(const double* xyz, size_t n, uint32_t* counts) {
    const size_t body = n & ~size_t(3);
    for (size_t i = 0; i < body; i += 4) {
        __m256d x, y, z;
        load_xyz4(xyz + 3 * i, x, y, z);
        const __m256d cell = _mm256_add_pd(
            bin4(x), _mm256_mul_pd(_mm256_set1_pd(5.0),
                                   _mm256_add_pd(bin4(y), _mm256_mul_pd(_mm256_set1_pd(5.0), bin4(z)))));
        alignas(16) int32_t idx[4];
        _mm_store_si128(reinterpret_cast<__m128i*>(idx), _mm256_cvtpd_epi32(cell));
        for (int lane = 0; lane < 4; ++lane) counts[idx[lane]] += 1;
    }
    for (size_t i = body; i < n; ++i) {
        const double* p = xyz + 3 * i;
        counts[bin_of(p[0]) + 5 * (bin_of(p[1]) + 5 * bin_of(p[2]))] += 1;
    }
}

void transform_normalize(const double* m, const double* px, const double* py, const double* pz,
                         size_t n, double* ox, double* oy, double* oz, double* len) {
    __m256d mm[9];
    for (int i = 0; i < 9; ++i) mm[i] = _mm256_set1_pd(m[i]);
    const size_t body = n & ~size_t(3);
    for (size_t i = 0; i < body; i += 4) {
        const __m256d x = _mm256_loadu_pd(px + i), y = _mm256_loadu_pd(py + i),
                      z = _mm256_loadu_pd(pz + i);
        auto row = [&](int r) {
            return _mm256_add_pd(
                _mm256_add_pd(_mm256_mul_pd(mm[3 * r], x), _mm256_mul_pd(mm[3 * r + 1], y)),
                _mm256_mul_pd(mm[3 * r + 2], z));
        };
        const __m256d vx = row(0), vy = row(1), vz = row(2);
        const __m256d l = _mm256_sqrt_pd(_mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(vx, vx), _mm256_mul_pd(vy, vy)), _mm256_mul_pd(vz, vz)));
        _mm256_storeu_pd(ox + i, _mm256_div_pd(vx, l));
        _mm256_storeu_pd(oy + i, _mm256_div_pd(vy, l));
        _mm256_storeu_pd(oz + i, _mm256_div_pd(vz, l));
        _mm256_storeu_pd(len + i, l);
    }
    for (size_t i = body; i < n; ++i) {
        const double vx = (m[0] * px[i] + m[1] * py[i]) + m[2] * pz[i];
        const double vy = (m[3] * px[i] + m[4] * py[i]) + m[5] * pz[i];
        const double vz = (m[6] * px[i] + m[7] * py[i]) + m[8] * pz[i];
        const double l = std::sqrt((vx * vx + vy * vy) + vz * vz);
        ox[i] = vx / l;
        oy[i] = vy / l;
        oz[i] = vz / l;
        len[i] = l;
    }
}

void ndf_moment(const double* s, const double* qx, const double* qy, const double* qz,
                const double* w, size_t n, double out[4]) {
    constexpr double tiny = 1e-300;
    const __m256d s0 = _mm256_set1_pd(s[0]), s1 = _mm256_set1_pd(s[1]), s2 = _mm256_set1_pd(s[2]);
    const __m256d vtiny = _mm256_set1_pd(tiny);
    __m256d acc[4];
    for (auto& a : acc) a = _mm256_setzero_pd();
    const size_t body = n & ~size_t(3);
    for (size_t i = 0; i < body; i += 4) {
        const __m256d x = _mm256_loadu_pd(qx + i), y = _mm256_loadu_pd(qy + i),
                      z = _mm256_loadu_pd(qz + i), wi = _mm256_loadu_pd(w + i);
        const __m256d tx = _mm256_mul_pd(s0, x), ty = _mm256_mul_pd(s1, y), tz = _mm256_mul_pd(s2, z);
        // max(a, tiny): operand order keeps a NaN-free a unchanged like std::max.
        const __m256d a = _mm256_max_pd(_mm256_sqrt_pd(_mm256_add_pd(_mm256_add_pd(tx, ty), tz)), vtiny);
        acc[0] = _mm256_add_pd(acc[0], _mm256_mul_pd(wi, _mm256_div_pd(tx, a)));
        acc[1] = _mm256_add_pd(acc[1], _mm256_mul_pd(wi, _mm256_div_pd(ty, a)));
        acc[2] = _mm256_add_pd(acc[2], _mm256_mul_pd(wi, _mm256_div_pd(tz, a)));
        acc[3] = _mm256_add_pd(acc[3], _mm256_mul_pd(wi, a));
    }
    for (int c = 0; c < 4; ++c) out[c] = pairwise_sum(acc[c]);
    for (size_t i = body; i < n; ++i) {
        const double a = std::max(std::sqrt((s[0] * qx[i] + s[1] * qy[i]) + s[2] * qz[i]), tiny);
        out[0] += w[i] * (s[0] * qx[i] / a);
        out[1] += w[i] * (s[1] * qy[i] / a);
        out[2] += w[i] * (s[2] * qz[i] / a);
        out[3] += w[i] * a;
    }
}

double sliced_w1(const double* diff, const int32_t* order, const double* gaps, size_t slices) {
    alignas(32) double lanes[4];
    double total = 0;
    const __m256d sign = _mm256_set1_pd(-0.0);
    const size_t body = slices & ~size_t(3);
    for (size_t s = 0; s < body; s += 4) {
        __m256d prefix = _mm256_setzero_pd(), acc = _mm256_setzero_pd();
        for (size_t k = 0; k < 124; ++k) {
            const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(order + k * slices + s));
            prefix = _mm256_add_pd(prefix, _mm256_i32gather_pd(diff, idx, 8));
            acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_andnot_pd(sign, prefix),
                                                   _mm256_loadu_pd(gaps + k * slices + s)));
        }
        _mm256_store_pd(lanes, acc);
        for (double v : lanes) total += v;
    }
    for (size_t s = body; s < slices; ++s) {
        double prefix = 0, acc = 0;
        for (size_t k = 0; k < 124; ++k) {
            prefix += diff[order[k * slices + s]];
            acc += std::fabs(prefix) * gaps[k * slices + s];
        }
        total += acc;
    }
    return total;
}

constexpr Kernels kAvx2{second_moment, bin_directions, transform_normalize, ndf_moment, sliced_w1};

}  // namespace

const Kernels* detail::avx2_kernels() { return &kAvx2; }

}  // namespace mvx::simd
