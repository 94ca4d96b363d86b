// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "mvx/vec.hpp"

namespace mvx {

struct ModelVertex {
    Vec3 position;
    Vec3 normal{0, 0, 1};
    Vec3 tangent{1, 0, 0};
    uint32_t material = 0;
};

/// Either a set of Catmull-Rom control sequences or an indexed triangle soup.
struct InputModel {
    enum class Kind { Splines, Triangles };

    Kind kind = Kind::Triangles;
    std::vector<ModelVertex> vertices;
    /// Triangles: vertex index triples.
    std::vector<std::array<uint32_t, 3>> triangles;
    /// Splines: [offset, offset + count) ranges into `vertices`, count >= 2.
    std::vector<std::pair<uint32_t, uint32_t>> splines;
    /// Spline cross-section radius in world units.
    double radius = 0;
    /// Material names; ids index this table. Empty means ids are unnamed.
    std::vector<std::string> materials;

    bool empty() const { return kind == Kind::Triangles ? triangles.empty() : splines.empty(); }
    /// Throws NonUnitDirection, InvalidParams or OutOfBounds.
    void validate() const;
};

}  // namespace mvx
