// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// CPU volumetric path tracer over SparseVolume LoD chains.
//
// Extinction at a point along unit direction w is
//   sigma_max * (wx^2 d_yz + wy^2 d_xz + wz^2 d_xy)
// with the voxel's three axis densities. Voxels scatter as SGGX microflakes
// drawn from their normal-channel lobes.

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "mvx/image.hpp"
#include "mvx/sequence.hpp"
#include "mvx/sggx.hpp"
#include "mvx/volume.hpp"

namespace mvx {

struct Camera {
    Vec3 position{0, 0, -3};
    Vec3 target{0, 0, 0};
    Vec3 up{0, 1, 0};
    double fov_degrees = 40;  // vertical
    uint32_t width = 64, height = 64;
    bool operator==(const Camera&) const = default;
};

struct DirectionalLight {
    Vec3 direction{0, 0, -1};  // unit, pointing towards the light
    Vec3 radiance{1, 1, 1};
    bool operator==(const DirectionalLight&) const = default;
};

enum class FlakeMode { Specular, Diffuse };

struct Material {
    FlakeMode mode = FlakeMode::Diffuse;
    Vec3 albedo{0.8, 0.8, 0.8};
    bool operator==(const Material&) const = default;
};

struct Scene {
    std::vector<SparseVolume> lods;  // fine to coarse
    Camera camera;
    std::vector<DirectionalLight> lights;
    Vec3 environment{0, 0, 0};
    std::map<uint32_t, Material> materials;
    Material default_material;
    double sigma_max = 1;  // extinction per unit length at density 1

    const Material& material(uint32_t id) const;
    /// Throws InvalidConfig.
    void validate() const;
};

struct LodSelection {
    uint32_t level0 = 0, level1 = 0;
    double blend = 0;  // probability of level1
};

/// level = max_levels - 1 + log2(width), clamped to [0, max_levels - 1].
/// `width` is the footprint measured in coarsest-level voxels.
LodSelection select_lod(double width, uint32_t max_levels);

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit
};

/// Entry and exit distances of a ray through a box; empty when missed.
bool intersect_box(const Ray& ray, const Aabb& box, double& t0, double& t1);

/// Normal-channel lobe with its mass weight normalized over the voxel.
/// `flake_area` is the lobe's total flake area over pi; 0 means not yet
/// computed.
struct ShadingLobe {
    SggxParams sggx;
    double weight = 1;
    double flake_area = 0;
};

/// Total flake area over pi of an SGGX ellipsoid, between 2 (flat disk) and
/// 4 (sphere) for normalized S. Thomsen's ellipsoid area formula, within
/// about 1.1%.
double sggx_flake_area(const SggxParams& s);

struct ShadingVoxel {
    std::array<float, 3> axis_density{};
    uint32_t material_id = 0;
    uint32_t first_lobe = 0, lobe_count = 0;
};

/// Read-only decoded copy of one volume for tracking and shading. The
/// volume must outlive the view.
class VolumeView {
public:
    explicit VolumeView(const SparseVolume& volume);

    const VolumeHeader& header() const { return header_; }
    /// Voxel containing p, or null for empty space.
    const ShadingVoxel* voxel_at(const Vec3& p) const;
    std::span<const ShadingLobe> lobes(const ShadingVoxel& v) const {
        return {lobes_.data() + v.first_lobe, v.lobe_count};
    }
    bool block_occupied(uint32_t linear_block) const { return (mask_[linear_block >> 3] >> (linear_block & 7)) & 1; }
    uint32_t blocks_per_axis() const { return header_.grid.res1; }

private:
    const SparseVolume* volume_;
    VolumeHeader header_;
    Vec3 inv_voxel_;
    int32_t res_;
    std::vector<uint8_t> mask_;
    std::vector<ShadingVoxel> voxels_;  // by record slot
    std::vector<ShadingLobe> lobes_;
};

/// Directional density in [0, 1].
double directional_density(const std::array<float, 3>& axis_density, const Vec3& w);

struct TrackingResult {
    bool escaped = true;
    double distance = 0;
    const ShadingVoxel* voxel = nullptr;
    const VolumeView* view = nullptr;  // owner of voxel
    /// Single-sample transmittance estimate over [0, t_max]: 1 on escape, else 0.
    double transmittance() const { return escaped ? 1.0 : 0.0; }
};

/// Woodcock free-flight sampling over [0, t_max] with the global majorant
/// sigma_max, skipping empty level-1 blocks.
TrackingResult delta_tracking(const Ray& ray, double t_max, const VolumeView& view, double sigma_max, Pcg32& rng);

/// Ratio-tracking transmittance estimate over [0, t_max].
double ratio_tracking(const Ray& ray, double t_max, const VolumeView& view, double sigma_max, Pcg32& rng);

struct ScatterSample {
    Vec3 direction;  // unit, new travel direction
    Vec3 weight;     // phase / pdf, includes albedo
};

/// Picks a lobe with probability proportional to weight times its projected
/// area per unit flake area toward the incoming direction, samples a visible
/// normal and reflects (specular) or scatters about it with a cosine lobe
/// (diffuse). An empty lobe list scatters like an isotropic SGGX.
ScatterSample shade_event(const Vec3& travel, std::span<const ShadingLobe> lobes, const Material& material,
                          Pcg32& rng);
/// Decodes the payload's normal channel and calls the overload above.
ScatterSample shade_event(const Vec3& travel, const VoxelPayload& payload, const Material& material, Pcg32& rng);

std::vector<ShadingLobe> shading_lobes(const VoxelPayload& payload);

/// Phase function density (per steradian, without albedo) for scattering
/// from travel direction `travel` into `out`. Specular flakes are evaluated in
/// closed form; diffuse flakes by a fixed `quadrature`-point visible-normal rule.
double phase_density(FlakeMode mode, std::span<const ShadingLobe> lobes, const Vec3& travel, const Vec3& out,
                     uint32_t quadrature = 64);

/// Unbiased single-sample estimate of phase_density.
double phase_estimate(FlakeMode mode, std::span<const ShadingLobe> lobes, const Vec3& travel, const Vec3& out,
                      Pcg32& rng);

struct RenderOptions {
    uint32_t spp = 16;
    uint32_t max_bounces = 8;
    uint64_t seed = 0;
    unsigned threads = 1;
    /// Renders a single LoD when >= 0, otherwise selects per collision.
    int fixed_level = -1;
};

struct RenderResult {
    RadianceImage image;
    ImageMask mask;  // pixels whose centre ray crosses an occupied block
};

/// Throws InvalidConfig for spp == 0 or an invalid scene.
RenderResult render(const Scene& scene, const RenderOptions& options);

/// Primary ray through image position (px, py) in pixels, y down.
Ray camera_ray(const Camera& camera, double px, double py);

}  // namespace mvx
