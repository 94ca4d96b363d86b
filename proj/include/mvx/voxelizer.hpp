// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Four-stage voxelizer: block map over control nodes, dense sub-sampling of
// splines and triangles, gathering samples per leaf voxel, and per-voxel
// aggregation into fitted SGGX lobes, axis densities and occupancy.
//
// Grid positions are in sub-voxel units, [0, res1 * res2 * res3) per axis.
// Leaf (level-2) voxel ids are global linear indices over res1 * res2 voxels
// per axis; level-3 ids are local to their voxel. Both use x + r * (y + r * z).

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mvx/grid.hpp"
#include "mvx/model.hpp"
#include "mvx/sggx.hpp"
#include "mvx/volume.hpp"

namespace mvx {

struct ModelBounds {
    Aabb bbox;
    /// Largest distance between a generated sample and the nearest node of
    /// its element, plus the spline radius.
    double delta = 0;
};

/// Throws EmptyModel.
ModelBounds compute_bounds(const InputModel& model);

/// Cube centred on the bounds, padded by the spline radius.
Aabb cubic_domain(const ModelBounds& bounds, double radius);

/// Maps into [0, resolution) per axis; b_max lands just below resolution.
/// Throws DegenerateBounds.
Vec3 normalize_position(const Vec3& p, const Aabb& bbox, double resolution);

/// Box distance term D = |max(Q, 0)|^2 + min(max_i Q_i, 0) for
/// Q = |p - C| - s/2, accepted when D < delta^2.
double block_distance(const Vec3& p_volume, const Int3& block, double block_size);
bool block_distance_test(const Vec3& p_volume, const Int3& block, double block_size, double delta);

/// Control nodes per level-1 block, stored sparsely (only non-empty blocks).
struct BlockMap {
    uint32_t res1 = 0;
    std::vector<uint32_t> blocks;   // ascending non-empty block ids
    std::vector<uint32_t> offsets;  // blocks.size() + 1
    std::vector<uint32_t> node_ids; // ascending within each block
    std::vector<uint8_t> occupied_bits;

    bool empty(const Int3& block) const;
    bool empty(uint32_t block) const { return !((occupied_bits[block >> 3] >> (block & 7)) & 1); }
    uint32_t count(const Int3& block) const;
    std::span<const uint32_t> nodes(const Int3& block) const;
};

/// Node positions in grid units: spline control points in order, or the
/// three corners of each triangle (node id = 3 * triangle + corner).
std::vector<Vec3> control_nodes(const InputModel& model, const Aabb& domain, const GridConfig& config);

/// delta_grid is the generation radius in grid (sub-voxel) units.
BlockMap build_block_map(std::span<const Vec3> nodes, const GridConfig& config, double delta_grid);

struct SplinePoint {
    Vec3 position, tangent, normal;
    uint32_t material = 0;
};

/// Uniform Catmull-Rom over the middle segment c[1] -> c[2]. Normals follow
/// a rotation-minimizing frame from c[1]'s normal through t_values in order.
/// Throws DegenerateSegment when c[1] == c[2].
std::vector<SplinePoint> subdivide_spline(const std::array<ModelVertex, 4>& controls,
                                          std::span<const double> t_values);

/// Catmull-Rom segment as cubic Bezier control points.
std::array<Vec3, 4> catmull_rom_bezier(const std::array<Vec3, 4>& p);

/// Low-distortion square to triangle map, returned as barycentrics (b0, b1);
/// b2 = 1 - b0 - b1.
std::array<double, 2> square_to_triangle(double u, double v);

/// Sample count for a triangle: round(budget * area / max_area), at least
/// one for positive area, zero otherwise.
uint64_t triangle_sample_count(double area, uint64_t budget, double max_area);

/// Places triangle_sample_count samples on the R2 sequence through the
/// low-distortion map, interpolating attributes barycentrically.
std::vector<SplinePoint> sample_triangle(const std::array<ModelVertex, 3>& tri, uint64_t budget, double max_area);

/// Signed 8-bit quantized unit vector.
using QDir = std::array<int8_t, 3>;
QDir quantize_direction(const Vec3& d);
Vec3 dequantize_direction(const QDir& q);

struct SampleNode {
    uint32_t level2_index = 0;
    uint32_t level3_index = 0;
    QDir tangent{};
    QDir normal{};
    uint32_t material_id = 0;
};

SampleNode make_sample(const SplinePoint& p, const Vec3& p_volume, const GridConfig& config);

struct VoxelSpan {
    uint32_t level2_index;
    uint32_t start;
    uint32_t count;
    bool operator==(const VoxelSpan&) const = default;
};

/// Stable-sorts by level-2 id in place and returns one span per voxel.
std::vector<VoxelSpan> gather_samples(std::vector<SampleNode>& samples);

struct VoxelAggregate {
    DirectionHistogram tangent_histogram, normal_histogram;
    /// Coverage of the YZ, XZ and XY projections.
    std::array<double, 3> axis_density{};
    double occupancy = 0;
    uint32_t material_id = 0;
};

VoxelAggregate aggregate_voxel(std::span<const SampleNode> span, const GridConfig& config);

struct VoxelizeStats {
    uint64_t nodes = 0;
    uint64_t samples = 0;
    /// Samples landing in blocks with no node within delta.
    uint64_t dropped_samples = 0;
    uint64_t occupied_voxels = 0;
    uint64_t occupied_blocks = 0;
    double delta_world = 0;
    double sample_seconds = 0, gather_seconds = 0, fit_seconds = 0;
};

struct VoxelizeResult {
    SparseVolume volume;
    BlockMap blocks;
    VoxelizeStats stats;
};

/// Full pipeline. `domain` overrides the cubic domain derived from the model.
/// An empty model yields an empty volume over the unit cube.
VoxelizeResult voxelize(const InputModel& model, const GridConfig& config,
                        const std::optional<Aabb>& domain = std::nullopt, uint32_t k = 3);

}  // namespace mvx
