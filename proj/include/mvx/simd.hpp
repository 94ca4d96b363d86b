// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Data-parallel inner loops with a scalar reference and SIMD variants chosen
// at runtime. Every kernel has a fixed reduction order shared by all variants,
// so results are bit-identical whichever variant runs.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace mvx::simd {

enum class Level { Scalar, Avx2 };

struct Kernels {
    /// Sums of (xx, yy, zz, xy, xz, yz) over n interleaved xyz vectors.
    /// Reduction: 4 strided partial sums over the first 4*floor(n/4) items,
    /// combined as (p0 + p1) + (p2 + p3), then the tail in order.
    void (*second_moment)(const double* xyz, size_t n, double out[6]);

    /// Adds n interleaved unit vectors to a 5x5x5 lattice over [-1,1]^3,
    /// cell = ix + 5 * (iy + 5 * iz), i = clamp(floor((d + 1) / 2 * 5), 0, 4).
    void (*bin_directions)(const double* xyz, size_t n, uint32_t* counts);

    /// v = M p for row-major m[9] and SoA points; writes normalize(v) to SoA
    /// out and |v| to len.
    void (*transform_normalize)(const double* m, const double* px, const double* py,
                                const double* pz, size_t n, double* ox, double* oy, double* oz,
                                double* len);

    /// Quadrature of the SGGX NDF second moment in the eigenframe. For nodes
    /// with squared coordinates (qx, qy, qz) and weights w, with
    /// a = sqrt(s0 qx + s1 qy + s2 qz): out[k] = sum w s_k q_k / a, out[3] = sum w a.
    /// Same 4-lane reduction order as second_moment.
    void (*ndf_moment)(const double* s, const double* qx, const double* qy, const double* qz,
                       const double* w, size_t n, double out[4]);

    /// Sum over slices of the 1D W1 distance of a signed mass difference over
    /// 125 lattice cells. order/gaps are cell-major transposed tables:
    /// order[k * slices + s] is the k-th cell along slice s, gaps[k * slices + s]
    /// the distance between cells k and k+1 on that slice. Slices summed in order.
    double (*sliced_w1)(const double* diff, const int32_t* order, const double* gaps,
                        size_t slices);
};

bool supported(Level level);
Level detected_level();

/// Active variant. Defaults to the best supported level; the MVX_SIMD
/// environment variable ("scalar" or "avx2") overrides it at first use.
Level active_level();
void set_level(Level level);
std::optional<Level> parse_level(std::string_view name);
const char* to_string(Level level);

const Kernels& kernels();
const Kernels& kernels(Level level);

namespace detail {
const Kernels& scalar_kernels();
const Kernels* avx2_kernels();
}  // namespace detail

}  // namespace mvx::simd
