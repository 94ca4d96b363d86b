// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "mvx/vec.hpp"

namespace mvx {

struct Aabb {
    Vec3 min, max;

    Vec3 extent() const { return max - min; }
    bool contains(const Vec3& p) const {
        return p.x >= min.x && p.y >= min.y && p.z >= min.z && p.x <= max.x && p.y <= max.y && p.z <= max.z;
    }
    bool operator==(const Aabb&) const = default;
};

/// Three-level grid: res1 level-1 blocks per axis, res2 leaf voxels per block
/// per axis, res3 sub-voxels per leaf voxel per axis.
struct GridConfig {
    uint32_t res1 = 8;
    uint32_t res2 = 16;
    uint32_t res3 = 8;
    /// Samples per spline segment or for the largest triangle; 0 picks a
    /// density keeping neighbouring samples within half a sub-voxel.
    uint32_t samples_per_element = 0;
    /// Generation radius in world units; 0 derives it from the model.
    double delta = 0;
    /// Upper bound on generated samples (CapacityExceeded beyond it).
    uint64_t max_samples = uint64_t(1) << 28;
    /// Worker threads; output does not depend on it.
    uint32_t threads = 1;

    uint32_t leaf_resolution() const { return res1 * res2; }
    uint64_t resolution() const { return uint64_t(res1) * res2 * res3; }
    /// Throws InvalidConfig.
    void validate() const;

    bool operator==(const GridConfig&) const = default;
};

/// Linear index with x varying fastest: x + r * (y + r * z).
constexpr uint32_t linear_index(const Int3& i, uint32_t r) {
    return uint32_t(i.x) + r * (uint32_t(i.y) + r * uint32_t(i.z));
}

constexpr Int3 unlinear_index(uint32_t index, uint32_t r) {
    return {int32_t(index % r), int32_t((index / r) % r), int32_t(index / (r * r))};
}

/// Largest leaf resolution whose cube still fits a 32-bit linear index.
inline constexpr uint32_t kMaxLeafResolution = 1625;

}  // namespace mvx
