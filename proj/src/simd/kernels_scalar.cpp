// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>

#include "mvx/simd.hpp"

namespace mvx::simd {
namespace {

void second_moment(const double* xyz, size_t n, double out[6]) {
    double acc[6][4] = {};
    const size_t body = n & ~size_t(3);
    for (size_t i = 0; i < body; i += 4) {
        for (size_t lane = 0; lane < 4; ++lane) {
            const double* p = xyz + 3 * (i + lane);
            acc[0][lane] += p[0] * p[0];
            acc[1][lane] += p[1] * p[1];
            acc[2][lane] += p[2] * p[2];
            acc[3][lane] += p[0] * p[1];
            acc[4][lane] += p[0] * p[2];
            acc[5][lane] += p[1] * p[2];
        }
    }
    for (int c = 0; c < 6; ++c) out[c] = (acc[c][0] + acc[c][1]) + (acc[c][2] + acc[c][3]);
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

inline int bin_of(double d) {
    const double f = std::floor((d + 1.0) * 0.5 * 5.0);
    return int(std::clamp(f, 0.0, 4.0));
}

void bin_directions(const double* xyz, size_t n, uint32_t* counts) {
    for (size_t i = 0; i < n; ++i) {
        const double* p = xyz + 3 * i;
        counts[bin_of(p[0]) + 5 * (bin_of(p[1]) + 5 * bin_of(p[2]))] += 1;
    }
}

void transform_normalize(const double* m, const double* px, const double* py, const double* pz,
                         size_t n, double* ox, double* oy, double* oz, double* len) {
    for (size_t i = 0; i < n; ++i) {
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
    double acc[4][4] = {};
    auto term = [&](size_t i, double* o) {
        const double a = std::max(std::sqrt((s[0] * qx[i] + s[1] * qy[i]) + s[2] * qz[i]), tiny);
        o[0] += w[i] * (s[0] * qx[i] / a);
        o[1] += w[i] * (s[1] * qy[i] / a);
        o[2] += w[i] * (s[2] * qz[i] / a);
        o[3] += w[i] * a;
    };
    const size_t body = n & ~size_t(3);
    for (size_t i = 0; i < body; i += 4) {
        for (size_t lane = 0; lane < 4; ++lane) {
            double o[4] = {acc[0][lane], acc[1][lane], acc[2][lane], acc[3][lane]};
            term(i + lane, o);
            for (int c = 0; c < 4; ++c) acc[c][lane] = o[c];
        }
    }
    for (int c = 0; c < 4; ++c) out[c] = (acc[c][0] + acc[c][1]) + (acc[c][2] + acc[c][3]);
    for (size_t i = body; i < n; ++i) term(i, out);
}

double sliced_w1(const double* diff, const int32_t* order, const double* gaps, size_t slices) {
    double total = 0;
    for (size_t s = 0; s < slices; ++s) {
        double prefix = 0, acc = 0;
        for (size_t k = 0; k < 124; ++k) {
            prefix += diff[order[k * slices + s]];
            acc += std::fabs(prefix) * gaps[k * slices + s];
        }
        total += acc;
    }
    return total;
}

constexpr Kernels kScalar{second_moment, bin_directions, transform_normalize, ndf_moment, sliced_w1};

}  // namespace

const Kernels& detail::scalar_kernels() { return kScalar; }

}  // namespace mvx::simd
