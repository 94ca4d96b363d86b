// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "mvx/error.hpp"
#include "mvx/image.hpp"
#include "mvx/render.hpp"
#include "mvx/scene_io.hpp"

namespace mvx {
namespace {

constexpr double kPi = std::numbers::pi;

VoxelPayload flat_payload(std::array<float, 3> density, const SggxParams& s = SggxParams{}) {
    VoxelPayload p;
    for (auto& ch : p.channels) ch.push_back({encode_compact(s), 1.0f});
    p.axis_density = density;
    p.occupancy = 1;
    return p;
}

VolumeHeader header(uint32_t res1, uint32_t res2, Aabb domain = {{0, 0, 0}, {1, 1, 1}}) {
    VolumeHeader h;
    h.grid.res1 = res1;
    h.grid.res2 = res2;
    h.grid.res3 = 4;
    h.domain = domain;
    return h;
}

/// Every voxel of the grid filled with the same payload.
SparseVolume filled(uint32_t res1, uint32_t res2, const VoxelPayload& p, Aabb domain = {{0, 0, 0}, {1, 1, 1}}) {
    SparseVolume v(header(res1, res2, domain));
    const int r = int(res1 * res2);
    for (int z = 0; z < r; ++z)
        for (int y = 0; y < r; ++y)
            for (int x = 0; x < r; ++x) v.set_voxel({x, y, z}, p);
    return v;
}

struct Stats {
    double mean, stderr_;
};

template <class F>
Stats estimate(int n, F&& f) {
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double v = f(i);
        s += v;
        s2 += v * v;
    }
    const double mean = s / n;
    const double var = std::max(0.0, s2 / n - mean * mean);
    return {mean, std::sqrt(var / n)};
}

double angle_degrees(const Vec3& a, const Vec3& b) {
    return std::acos(std::clamp(dot(normalize(a), normalize(b)), -1.0, 1.0)) * 180.0 / kPi;
}

SggxParams anisotropic_sggx() {
    // Eigenvalues 1, 0.3, 0.08 in a rotated frame.
    const Vec3 a = normalize(Vec3{1, 2, 0.5}), b0 = normalize(cross(a, Vec3{0, 0, 1})), c = cross(a, b0);
    const double l[3] = {1.0, 0.3, 0.08};
    const Vec3 e[3] = {a, b0, c};
    Sym3 m;
    for (int i = 0; i < 3; ++i) {
        const Vec3& v = e[i];
        m = m + Sym3{v.x * v.x, v.y * v.y, v.z * v.z, v.x * v.y, v.x * v.z, v.y * v.z} * l[i];
    }
    return SggxParams::from_matrix(m);
}

// ---------------------------------------------------------------- select_lod

TEST(SelectLod, DocumentedExamples) {
    auto a = select_lod(1.0, 4);
    EXPECT_EQ(a.level0, 3u);
    EXPECT_EQ(a.blend, 0.0);
    auto b = select_lod(1.0 / 8, 4);
    EXPECT_EQ(b.level0, 0u);
    EXPECT_EQ(b.blend, 0.0);
    auto c = select_lod(0.5, 4);
    EXPECT_EQ(c.level0, 2u);
    EXPECT_EQ(c.blend, 0.0);
}

TEST(SelectLod, ClampsAndBlends) {
    EXPECT_EQ(select_lod(100.0, 4).level0, 3u);
    EXPECT_EQ(select_lod(1e-6, 4).level0, 0u);
    EXPECT_EQ(select_lod(1e-6, 4).blend, 0.0);
    const auto s = select_lod(std::pow(2.0, -1.25), 4);  // level 1.75
    EXPECT_EQ(s.level0, 1u);
    EXPECT_EQ(s.level1, 2u);
    EXPECT_NEAR(s.blend, 0.75, 1e-12);
    EXPECT_EQ(select_lod(0.3, 1).level0, 0u);
}

// ---------------------------------------------------------------- tracking

TEST(Tracking, HomogeneousTransmittanceIsUnbiased) {
    const SparseVolume vol = filled(2, 4, flat_payload({1, 1, 1}));
    const VolumeView view(vol);
    for (double sigma : {0.1, 1.0, 4.0}) {
        Pcg32 rng(7, uint64_t(sigma * 100));
        const Ray ray{{-0.5, 0.3, 0.6}, {1, 0, 0}};
        const Stats d = estimate(100000, [&](int) {
            return delta_tracking(ray, std::numeric_limits<double>::infinity(), view, sigma, rng).transmittance();
        });
        const double expected = std::exp(-sigma);
        EXPECT_LT(std::fabs(d.mean - expected), 3 * d.stderr_) << "sigma d = " << sigma;
        const Stats r = estimate(100000, [&](int) {
            return ratio_tracking(ray, std::numeric_limits<double>::infinity(), view, sigma, rng);
        });
        EXPECT_LT(std::fabs(r.mean - expected), 3 * r.stderr_ + 1e-12) << "sigma d = " << sigma;
    }
}

TEST(Tracking, SegmentLengthLimitsOpticalDepth) {
    const SparseVolume vol = filled(1, 4, flat_payload({1, 1, 1}));
    const VolumeView view(vol);
    Pcg32 rng(3);
    const Ray ray{{0, 0.5, 0.5}, {1, 0, 0}};
    const Stats d = estimate(100000, [&](int) { return delta_tracking(ray, 0.25, view, 2.0, rng).transmittance(); });
    EXPECT_LT(std::fabs(d.mean - std::exp(-0.5)), 3 * d.stderr_);
}

TEST(Tracking, EmptyBlocksAreSkipped) {
    // Blocks 4 per axis; only blocks x = 1 and x = 3 on the ray's row hold matter.
    SparseVolume vol(header(4, 2));
    for (int bx : {1, 3})
        for (int x = bx * 2; x < bx * 2 + 2; ++x)
            for (int y = 2; y < 4; ++y)
                for (int z = 2; z < 4; ++z) vol.set_voxel({x, y, z}, flat_payload({1, 1, 1}));
    const VolumeView view(vol);
    Pcg32 rng(11);
    const Ray ray{{-1, 0.3, 0.3}, {1, 0, 0}};
    const double sigma = 2.0;
    const Stats d = estimate(100000, [&](int) {
        return delta_tracking(ray, std::numeric_limits<double>::infinity(), view, sigma, rng).transmittance();
    });
    EXPECT_LT(std::fabs(d.mean - std::exp(-sigma * 0.5)), 3 * d.stderr_);

    // Events only happen inside occupied blocks.
    for (int i = 0; i < 2000; ++i) {
        const auto ev = delta_tracking(ray, std::numeric_limits<double>::infinity(), view, sigma, rng);
        if (ev.escaped) continue;
        const double x = ray.origin.x + ev.distance;
        EXPECT_TRUE((x >= 0.25 && x < 0.5) || (x >= 0.75 && x < 1.0)) << x;
    }
}

TEST(Tracking, EmptyVolumeAlwaysEscapes) {
    const SparseVolume vol(header(4, 4));
    const VolumeView view(vol);
    Pcg32 rng(1);
    for (int i = 0; i < 1000; ++i) {
        const Ray ray{{0.5, 0.5, -1}, normalize(Vec3{0.1 * (i % 7), 0.05, 1})};
        EXPECT_EQ(delta_tracking(ray, 1e9, view, 10.0, rng).transmittance(), 1.0);
        EXPECT_EQ(ratio_tracking(ray, 1e9, view, 10.0, rng), 1.0);
    }
}

TEST(Tracking, AxisDensitiesAreDirectional) {
    EXPECT_DOUBLE_EQ(directional_density({1, 0, 0}, {1, 0, 0}), 1.0);
    EXPECT_DOUBLE_EQ(directional_density({1, 0, 0}, {0, 0, 1}), 0.0);
    EXPECT_NEAR(directional_density({0.2f, 0.4f, 0.8f}, normalize(Vec3{1, 1, 1})), (0.2 + 0.4 + 0.8) / 3, 1e-6);

    const SparseVolume vol = filled(1, 2, flat_payload({1, 0, 0}));
    const VolumeView view(vol);
    Pcg32 rng(5);
    const double sigma = 1.5;
    const Ray along_x{{-1, 0.5, 0.5}, {1, 0, 0}}, along_z{{0.5, 0.5, -1}, {0, 0, 1}};
    const Stats x = estimate(100000, [&](int) { return delta_tracking(along_x, 1e9, view, sigma, rng).transmittance(); });
    EXPECT_LT(std::fabs(x.mean - std::exp(-sigma)), 3 * x.stderr_);
    for (int i = 0; i < 1000; ++i) EXPECT_TRUE(delta_tracking(along_z, 1e9, view, sigma, rng).escaped);
}

TEST(Tracking, BoxIntersection) {
    double t0, t1;
    ASSERT_TRUE(intersect_box({{-1, 0.5, 0.5}, {1, 0, 0}}, {{0, 0, 0}, {1, 1, 1}}, t0, t1));
    EXPECT_DOUBLE_EQ(t0, 1.0);
    EXPECT_DOUBLE_EQ(t1, 2.0);
    ASSERT_TRUE(intersect_box({{0.5, 0.5, 0.5}, {0, 1, 0}}, {{0, 0, 0}, {1, 1, 1}}, t0, t1));
    EXPECT_DOUBLE_EQ(t0, 0.0);
    EXPECT_DOUBLE_EQ(t1, 0.5);
    EXPECT_FALSE(intersect_box({{-1, 2, 0.5}, {1, 0, 0}}, {{0, 0, 0}, {1, 1, 1}}, t0, t1));
    EXPECT_FALSE(intersect_box({{2, 0.5, 0.5}, {1, 0, 0}}, {{0, 0, 0}, {1, 1, 1}}, t0, t1));
}

// ---------------------------------------------------------------- shading

TEST(Shading, SpecularDeltaMirrors) {
    const std::vector<ShadingLobe> lobes{{SggxParams{0, 0, 1, 0, 0, 0}, 1}};
    const Material mat{FlakeMode::Specular, {1, 1, 1}};
    Pcg32 rng(2);
    for (int i = 0; i < 1000; ++i) {
        const ScatterSample s = shade_event({0, 0, -1}, lobes, mat, rng);
        EXPECT_LT(angle_degrees(s.direction, {0, 0, 1}), 5.0);
        EXPECT_EQ(s.weight, (Vec3{1, 1, 1}));
    }
}

TEST(Shading, ZeroAlbedoAbsorbs) {
    const VoxelPayload p = flat_payload({1, 1, 1});
    Pcg32 rng(3);
    for (FlakeMode mode : {FlakeMode::Specular, FlakeMode::Diffuse}) {
        const ScatterSample s = shade_event(normalize(Vec3{1, 2, 3}), p, Material{mode, {0, 0, 0}}, rng);
        EXPECT_EQ(s.weight, (Vec3{0, 0, 0}));
    }
}

TEST(Shading, WeightNeverExceedsAlbedo) {
    const std::vector<ShadingLobe> lobes{{anisotropic_sggx(), 0.7}, {SggxParams{}, 0.3}};
    Pcg32 rng(4);
    for (FlakeMode mode : {FlakeMode::Specular, FlakeMode::Diffuse})
        for (int i = 0; i < 1000; ++i) {
            const ScatterSample s = shade_event(uniform_sphere(rng.next(), rng.next()), lobes,
                                                Material{mode, {0.9, 0.5, 0.2}}, rng);
            EXPECT_LE(s.weight.x, 0.9);
            EXPECT_NEAR(length(s.direction), 1.0, 1e-9);
        }
}

TEST(Shading, DiffuseIsotropicHasZeroMeanCosine) {
    const VoxelPayload p = flat_payload({1, 1, 1});
    const auto lobes = shading_lobes(p);
    const Material mat{FlakeMode::Diffuse, {1, 1, 1}};
    Pcg32 rng(9);
    const int n = 100000;
    // Isotropic incidence: no axis is preferred.
    Vec3 sum;
    int octants[8] = {};
    for (int i = 0; i < n; ++i) {
        const Vec3 travel = uniform_sphere(rng.next(), rng.next());
        const Vec3 d = shade_event(travel, lobes, mat, rng).direction;
        sum += d;
        ++octants[(d.x > 0) + 2 * (d.y > 0) + 4 * (d.z > 0)];
    }
    for (int a = 0; a < 3; ++a) EXPECT_NEAR(sum[a] / n, 0.0, 0.02) << "axis " << a;
    for (int o = 0; o < 8; ++o) EXPECT_GT(octants[o], n / 10) << "octant " << o;

    // Fixed incidence: an isotropic diffuse flake cloud scatters like a
    // Lambertian sphere, whose mean cosine is -4/9; across the travel axis it
    // stays symmetric.
    Vec3 fixed;
    for (int i = 0; i < n; ++i) fixed += shade_event({0, 0, 1}, lobes, mat, rng).direction;
    EXPECT_NEAR(fixed.x / n, 0.0, 0.02);
    EXPECT_NEAR(fixed.y / n, 0.0, 0.02);
    EXPECT_NEAR(fixed.z / n, -4.0 / 9.0, 0.01);
}

TEST(Shading, PhaseDensitiesIntegrateToOne) {
    const std::vector<ShadingLobe> lobes{{anisotropic_sggx(), 0.6}, {SggxParams{0.3, 1, 0.5, 0.2, 0, 0}, 0.4}};
    const Vec3 travel = normalize(Vec3{0.3, -0.5, 0.8});
    for (FlakeMode mode : {FlakeMode::Specular, FlakeMode::Diffuse}) {
        const int nz = 200, nphi = 400;
        double total = 0;
        for (int i = 0; i < nz; ++i)
            for (int j = 0; j < nphi; ++j) {
                const double z = -1 + 2 * (i + 0.5) / nz, phi = 2 * kPi * (j + 0.5) / nphi;
                const double r = std::sqrt(1 - z * z);
                total += phase_density(mode, lobes, travel, {r * std::cos(phi), r * std::sin(phi), z}, 16);
            }
        total *= 4 * kPi / (nz * nphi);
        EXPECT_NEAR(total, 1.0, 0.01) << (mode == FlakeMode::Specular ? "specular" : "diffuse");
    }
}

TEST(Shading, EstimateIsUnbiased) {
    const std::vector<ShadingLobe> lobes{{anisotropic_sggx(), 1}};
    const Vec3 travel = normalize(Vec3{0.2, 0.1, -1});
    Pcg32 rng(12);
    for (const Vec3 out : {Vec3{0, 0, 1}, normalize(Vec3{1, 0, 1}), normalize(Vec3{-1, 1, -0.2})}) {
        const double exact = phase_density(FlakeMode::Diffuse, lobes, travel, out, 4096);
        const Stats s = estimate(100000, [&](int) { return phase_estimate(FlakeMode::Diffuse, lobes, travel, out, rng); });
        EXPECT_LT(std::fabs(s.mean - exact), 3 * s.stderr_ + 1e-3 * exact);
    }
}

/// Chi-square goodness of fit of sampled directions against the evaluated
/// phase density on an equal-area (z, phi) grid.
double chi_square_p(FlakeMode mode, std::span<const ShadingLobe> lobes, const Vec3& travel, uint64_t seed) {
    constexpr int nz = 16, nphi = 32, n = 100000;
    std::vector<double> observed(nz * nphi, 0), expected(nz * nphi, 0);
    Pcg32 rng(seed);
    const Material mat{mode, {1, 1, 1}};
    for (int i = 0; i < n; ++i) {
        const Vec3 d = shade_event(travel, lobes, mat, rng).direction;
        const int iz = std::clamp(int((d.z + 1) * 0.5 * nz), 0, nz - 1);
        double phi = std::atan2(d.y, d.x);
        if (phi < 0) phi += 2 * kPi;
        const int ip = std::clamp(int(phi / (2 * kPi) * nphi), 0, nphi - 1);
        observed[iz * nphi + ip] += 1;
    }
    constexpr int sub = 6;
    const double cell = (2.0 / nz) * (2 * kPi / nphi) / (sub * sub);
    for (int iz = 0; iz < nz; ++iz)
        for (int ip = 0; ip < nphi; ++ip) {
            double acc = 0;
            for (int a = 0; a < sub; ++a)
                for (int b = 0; b < sub; ++b) {
                    const double z = -1 + 2.0 * (iz + (a + 0.5) / sub) / nz;
                    const double phi = 2 * kPi * (ip + (b + 0.5) / sub) / nphi;
                    const double r = std::sqrt(std::max(0.0, 1 - z * z));
                    acc += phase_density(mode, lobes, travel, {r * std::cos(phi), r * std::sin(phi), z}, 256);
                }
            expected[iz * nphi + ip] = acc * cell * n;
        }
    double chi2 = 0, pooled_obs = 0, pooled_exp = 0;
    int dof = 0;
    for (size_t i = 0; i < observed.size(); ++i) {
        if (expected[i] < 5) {
            pooled_obs += observed[i];
            pooled_exp += expected[i];
            continue;
        }
        chi2 += (observed[i] - expected[i]) * (observed[i] - expected[i]) / expected[i];
        ++dof;
    }
    if (pooled_exp >= 5) {
        chi2 += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
        ++dof;
    }
    const boost::math::chi_squared dist(dof - 1);
    return boost::math::cdf(boost::math::complement(dist, chi2));
}

TEST(Shading, SampledDirectionsMatchEvaluatedDensity) {
    const std::vector<ShadingLobe> lobes{{anisotropic_sggx(), 0.6}, {SggxParams{0.3, 1, 0.5, 0.2, 0, 0}, 0.4}};
    const Vec3 travel = normalize(Vec3{0.3, -0.5, 0.8});
    EXPECT_GT(chi_square_p(FlakeMode::Specular, lobes, travel, 21), 0.01);
    EXPECT_GT(chi_square_p(FlakeMode::Diffuse, lobes, travel, 22), 0.01);
}

TEST(Shading, FlakeAreaMatchesNdfIntegral) {
    // Oracle: the NDF integrates to the flake area over pi; midpoint rule on
    // an equal-area (z, phi) grid.
    auto rotated = [](const Vec3& ev) {
        const Vec3 a = normalize(Vec3{1, 2, 0.5}), b = normalize(cross(a, Vec3{0, 0, 1})), c = cross(a, b);
        Sym3 m;
        const Vec3 e[3] = {a, b, c};
        for (int i = 0; i < 3; ++i) m = m + Sym3{e[i].x * e[i].x, e[i].y * e[i].y, e[i].z * e[i].z, e[i].x * e[i].y,
                                                 e[i].x * e[i].z, e[i].y * e[i].z} * ev[i];
        return SggxParams::from_matrix(m);
    };
    for (const Vec3 ev : {Vec3{1, 1, 1}, Vec3{1, 0.05, 0.05}, Vec3{0.05, 1, 1}, Vec3{1, 0.3, 0.08}, Vec3{1, 0.5, 0.2}}) {
        const SggxParams s = rotated(ev);
        constexpr int nz = 600, nphi = 1200;
        double integral = 0;
        for (int i = 0; i < nz; ++i)
            for (int j = 0; j < nphi; ++j) {
                const double z = -1 + 2 * (i + 0.5) / nz, phi = 2 * kPi * (j + 0.5) / nphi;
                const double r = std::sqrt(1 - z * z);
                integral += ndf_density(s, {r * std::cos(phi), r * std::sin(phi), z});
            }
        integral *= 4 * kPi / (double(nz) * nphi);
        EXPECT_NEAR(sggx_flake_area(s) / integral, 1.0, 0.012) << ev.x << " " << ev.y << " " << ev.z;
    }
    EXPECT_NEAR(sggx_flake_area(SggxParams{}), 4.0, 1e-12);
}

TEST(Shading, LobeChoiceFollowsProjectedArea) {
    // Two mirror disks of equal mass facing z and x. Seen from 26.6 degrees
    // off z their projected areas are cos and sin, so the z disk takes 2/3 of
    // the collisions rather than half.
    const SggxParams dz{0.01, 0.01, 1, 0, 0, 0}, dx{1, 0.01, 0.01, 0, 0, 0};
    const std::vector<ShadingLobe> lobes{{dz, 0.5}, {dx, 0.5}};
    const Vec3 wi = normalize(Vec3{0.5, 0, 1});
    const Vec3 mirror_z{-wi.x, wi.y, wi.z};
    Pcg32 rng(31);
    const Material mat{FlakeMode::Specular, {1, 1, 1}};
    constexpr int n = 100000;
    int from_z = 0;
    for (int i = 0; i < n; ++i) from_z += dot(shade_event(-wi, lobes, mat, rng).direction, mirror_z) > 0.9;
    const double expected = wi.z / (wi.z + wi.x);
    EXPECT_NEAR(double(from_z) / n, expected, 0.01);
}

// ---------------------------------------------------------------- rendering

Scene single_voxel_scene(const Material& mat, const SggxParams& s = SggxParams{}) {
    Scene scene;
    scene.lods.push_back(filled(1, 1, flat_payload({1, 1, 1}, s), {{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}}));
    scene.camera.position = {0, 0, -3};
    scene.camera.target = {0, 0, 0};
    scene.camera.fov_degrees = 30;
    scene.camera.width = scene.camera.height = 8;
    scene.default_material = mat;
    scene.sigma_max = 5;
    return scene;
}

TEST(Render, EmptyVolumeShowsEnvironment) {
    Scene scene;
    scene.lods.emplace_back(header(4, 4));
    scene.environment = {0.25, 0.5, 2.0};
    scene.camera.width = 12;
    scene.camera.height = 9;
    const RenderResult r = render(scene, {.spp = 4, .max_bounces = 4});
    for (uint32_t y = 0; y < 9; ++y)
        for (uint32_t x = 0; x < 12; ++x) {
            EXPECT_EQ(r.image.pixel(x, y), (Vec3{0.25, 0.5, 2.0}));
            EXPECT_EQ(r.mask.values[y * 12 + x], 0);
        }
    EXPECT_EQ(r.image.samples[0], 4u);
}

TEST(Render, BlackEnvironmentWithoutLightsIsBlack) {
    const Scene scene = single_voxel_scene({FlakeMode::Diffuse, {1, 1, 1}});
    const RenderResult r = render(scene, {.spp = 8});
    for (float v : r.image.rgb) EXPECT_EQ(v, 0.0f);
    EXPECT_GT(r.mask.count(), 0u);
}

/// Per-pixel mean and standard error over `spp` single-sample renders.
void furnace_check(const Scene& scene, uint32_t spp, uint32_t bounces) {
    const uint32_t n = scene.camera.width * scene.camera.height;
    std::vector<double> s(n, 0), s2(n, 0);
    for (uint32_t k = 0; k < spp; ++k) {
        const RenderResult r = render(scene, {.spp = 1, .max_bounces = bounces, .seed = 1000 + k});
        for (uint32_t p = 0; p < n; ++p) {
            const double lum = (r.image.rgb[3 * p] + r.image.rgb[3 * p + 1] + r.image.rgb[3 * p + 2]) / 3.0;
            s[p] += lum;
            s2[p] += lum * lum;
        }
    }
    double total = 0, total_var = 0;
    for (uint32_t p = 0; p < n; ++p) {
        const double mean = s[p] / spp;
        const double se = std::sqrt(std::max(0.0, s2[p] / spp - mean * mean) / spp);
        EXPECT_LE(mean, 1.0 + 4 * se + 1e-6) << "pixel " << p;
        total += mean;
        total_var += se * se;
    }
    // Without absorption a uniformly lit medium is invisible.
    EXPECT_NEAR(total / n, 1.0, 4 * std::sqrt(total_var) / n + 1e-3);
}

TEST(Render, FurnaceDiffuse) {
    Scene scene = single_voxel_scene({FlakeMode::Diffuse, {1, 1, 1}}, anisotropic_sggx());
    scene.environment = {1, 1, 1};
    furnace_check(scene, 1024, 256);
}

TEST(Render, FurnaceSpecular) {
    Scene scene = single_voxel_scene({FlakeMode::Specular, {1, 1, 1}}, anisotropic_sggx());
    scene.environment = {1, 1, 1};
    furnace_check(scene, 1024, 256);
}

TEST(Render, AbsorbingVoxelShowsTransmittance) {
    Scene scene = single_voxel_scene({FlakeMode::Diffuse, {0, 0, 0}});
    scene.environment = {1, 1, 1};
    scene.camera.fov_degrees = 2;  // all rays nearly along +z through the full voxel
    const RenderResult r = render(scene, {.spp = 4096});
    double mean = 0;
    for (float v : r.image.rgb) mean += v;
    mean /= double(r.image.rgb.size());
    EXPECT_NEAR(mean, std::exp(-5.0), 0.002);
}

TEST(Render, DirectionalLightOnly) {
    Scene scene = single_voxel_scene({FlakeMode::Diffuse, {0.8, 0.8, 0.8}});
    scene.lights.push_back({{0, 0, -1}, {2, 2, 2}});
    const RenderResult r = render(scene, {.spp = 64});
    double centre = r.image.pixel(4, 4).x;
    EXPECT_GT(centre, 0.05);
    for (float v : r.image.rgb) EXPECT_TRUE(std::isfinite(v) && v >= 0);
}

TEST(Render, DeterministicAcrossThreadCounts) {
    Scene scene = single_voxel_scene({FlakeMode::Specular, {0.9, 0.7, 0.5}}, anisotropic_sggx());
    scene.environment = {0.5, 0.6, 0.7};
    scene.lights.push_back({normalize(Vec3{1, 1, -1}), {1, 1, 1}});
    scene.camera.width = 20;
    scene.camera.height = 18;
    const RenderResult a = render(scene, {.spp = 8, .seed = 42, .threads = 1});
    for (unsigned t : {2u, 4u, 8u}) {
        const RenderResult b = render(scene, {.spp = 8, .seed = 42, .threads = t});
        EXPECT_EQ(a.image, b.image) << t << " threads";
        EXPECT_EQ(a.mask, b.mask);
    }
    const RenderResult c = render(scene, {.spp = 8, .seed = 43, .threads = 1});
    EXPECT_NE(a.image, c.image);
}

TEST(Render, MaskFollowsStencil) {
    Scene scene;
    SparseVolume v(header(2, 2, {{-1, -1, -1}, {1, 1, 1}}));
    v.set_voxel({0, 0, 0}, flat_payload({1, 1, 1}));  // block (0,0,0): x, y in [-1, 0]
    scene.lods.push_back(std::move(v));
    scene.camera = {{0, 0, -4}, {0, 0, 0}, {0, 1, 0}, 40, 16, 16};
    const RenderResult r = render(scene, {.spp = 1});
    for (uint32_t y = 0; y < 16; ++y)
        for (uint32_t x = 0; x < 16; ++x) {
            const Ray ray = camera_ray(scene.camera, x + 0.5, y + 0.5);
            double t0, t1;
            const bool through = intersect_box(ray, {{-1, -1, -1}, {0, 0, 0}}, t0, t1);
            EXPECT_EQ(r.mask.values[y * 16 + x], through ? 1 : 0) << x << "," << y;
        }
}

TEST(Render, CameraConventions) {
    Camera c{{0, 0, -3}, {0, 0, 0}, {0, 1, 0}, 90, 10, 10};
    EXPECT_LT(angle_degrees(camera_ray(c, 5, 5).direction, {0, 0, 1}), 1e-9);
    EXPECT_GT(camera_ray(c, 5, 0).direction.y, 0);    // top row looks up
    EXPECT_LT(camera_ray(c, 10, 5).direction.x, 0);   // right edge, right-handed
    EXPECT_NEAR(angle_degrees(camera_ray(c, 5, 0).direction, {0, 0, 1}), 45, 1e-9);
}

TEST(Render, RejectsInvalidScenes) {
    Scene scene;
    EXPECT_THROW(render(scene, {}), Error);  // no volume
    scene.lods.emplace_back(header(2, 2));
    EXPECT_THROW(render(scene, {.spp = 0}), Error);
    scene.default_material.albedo = {1.2, 0, 0};
    EXPECT_THROW(render(scene, {}), Error);
    scene.default_material.albedo = {1, 0, 0};
    scene.camera.target = scene.camera.position;
    EXPECT_THROW(render(scene, {}), Error);
    scene.camera.target = {0, 0, 0};
    scene.lods.emplace_back(header(2, 4));  // coarser level finer than the first
    EXPECT_THROW(render(scene, {}), Error);
    scene.lods.pop_back();
    EXPECT_THROW(render(scene, {.fixed_level = 1}), Error);
    EXPECT_NO_THROW(render(scene, {.spp = 1}));
}

/// Flat two-level chain: the renderer's radiance must move between the pure
/// levels without a jump as the pixel footprint crosses the level boundary.
TEST(Render, LodBlendIsContinuous) {
    Scene scene;
    scene.lods.push_back(filled(1, 8, flat_payload({0.1f, 0.1f, 0.1f}), {{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}}));
    scene.lods.push_back(filled(1, 4, flat_payload({0.9f, 0.9f, 0.9f}), {{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}}));
    scene.sigma_max = 2;
    scene.environment = {1, 1, 1};
    scene.default_material = {FlakeMode::Diffuse, {0, 0, 0}};
    scene.camera = {{0, 0, -30}, {0, 0, 0}, {0, 1, 0}, 1.6, 4, 4};

    auto mean_radiance = [&](uint32_t h, int fixed) {
        scene.camera.width = scene.camera.height = h;
        const RenderResult r = render(scene, {.spp = 40000 / (h * h), .max_bounces = 0, .fixed_level = fixed});
        double m = 0;
        for (float v : r.image.rgb) m += v;
        return m / double(r.image.rgb.size());
    };
    const double fine = mean_radiance(4, 0), coarse = mean_radiance(4, 1);
    const double gap = fine - coarse;
    ASSERT_GT(gap, 0.4);
    std::vector<double> curve;
    for (uint32_t h = 2; h <= 10; ++h) curve.push_back(mean_radiance(h, -1));
    EXPECT_NEAR(curve.front(), coarse, 0.03);
    EXPECT_NEAR(curve.back(), fine, 0.03);
    for (size_t i = 1; i < curve.size(); ++i) {
        EXPECT_LT(std::fabs(curve[i] - curve[i - 1]), 0.6 * gap) << "step " << i;
        EXPECT_GT(curve[i], curve[i - 1] - 0.03);
    }
}

// ---------------------------------------------------------------- images

RadianceImage ramp(uint32_t w, uint32_t h) {
    RadianceImage img(w, h);
    for (size_t i = 0; i < img.rgb.size(); ++i) img.rgb[i] = float(i % 97) / 50.0f;
    return img;
}

TEST(Images, CompareExamples) {
    const RadianceImage a = ramp(6, 5);
    const ImageMask all(6, 5, 1);
    EXPECT_EQ(compare_images(a, a, all).l1, 0.0);
    EXPECT_EQ(compare_images(a, a, all).rmse, 0.0);

    ImageMask half(6, 5, 0);
    for (size_t i = 0; i < half.values.size(); i += 2) half.values[i] = 1;
    RadianceImage b = a;
    for (size_t p = 0; p < half.values.size(); ++p)
        for (int c = 0; c < 3; ++c) b.rgb[p * 3 + c] += half.values[p] ? 0.1f : 5.0f;
    const ImageMetrics m = compare_images(a, b, half);
    EXPECT_NEAR(m.l1, 0.1, 1e-6);
    EXPECT_NEAR(m.rmse, 0.1, 1e-6);
    EXPECT_EQ(m.pixels, half.count());

    const ImageMetrics none = compare_images(a, b, ImageMask(6, 5, 0));
    EXPECT_FALSE(none.defined());
    EXPECT_TRUE(std::isnan(none.l1));
    EXPECT_TRUE(std::isnan(none.rmse));
}

TEST(Images, CompareRejectsMismatchedSizes) {
    try {
        compare_images(ramp(6, 5), ramp(5, 6), ImageMask(6, 5));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
    }
    EXPECT_THROW(compare_images(ramp(6, 5), ramp(6, 5), ImageMask(5, 5)), Error);
}

TEST(Images, RelativeImprovement) {
    EXPECT_EQ(relative_improvement(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(relative_improvement(0.2, 0.1), 50.0);
    EXPECT_DOUBLE_EQ(relative_improvement(0.1, 0.1), 0.0);
}

class ImageFiles : public ::testing::Test {
protected:
    std::filesystem::path dir = std::filesystem::temp_directory_path() /
                                ("mvx_image_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                 "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    void SetUp() override { std::filesystem::create_directories(dir); }
    void TearDown() override { std::filesystem::remove_all(dir); }
    std::string path(const char* name) const { return (dir / name).string(); }
};

TEST_F(ImageFiles, PfmRoundTrip) {
    RadianceImage a = ramp(7, 3);
    a.rgb[5] = 123.25f;
    write_pfm(path("a.pfm"), a);
    const RadianceImage b = read_pfm(path("a.pfm"));
    EXPECT_EQ(b.width, 7u);
    EXPECT_EQ(b.height, 3u);
    EXPECT_EQ(b.rgb, a.rgb);

    std::ifstream in(path("a.pfm"), std::ios::binary);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "PF");
    std::getline(in, header);
    EXPECT_EQ(header, "7 3");
    std::getline(in, header);
    EXPECT_EQ(header, "-1.0");
    float first[3];
    in.read(reinterpret_cast<char*>(first), sizeof first);  // bottom row comes first
    EXPECT_EQ(first[0], a.pixel(0, 2).x);
}

TEST_F(ImageFiles, PfmBigEndian) {
    {
        std::ofstream out(path("be.pfm"), std::ios::binary);
        out << "PF\n1 1\n1.0\n";
        const float v[3] = {1.5f, 2.0f, 0.25f};
        for (float f : v) {
            uint8_t b[4];
            std::memcpy(b, &f, 4);
            for (int i = 3; i >= 0; --i) out.put(char(b[i]));
        }
    }
    const RadianceImage img = read_pfm(path("be.pfm"));
    EXPECT_EQ(img.pixel(0, 0), (Vec3{1.5, 2.0, 0.25}));
}

TEST_F(ImageFiles, MalformedPfmIsRejected) {
    auto code_of = [&](const std::string& content) {
        {
            std::ofstream out(path("bad.pfm"), std::ios::binary);
            out << content;
        }
        try {
            read_pfm(path("bad.pfm"));
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::EmptyInput;
    };
    EXPECT_EQ(code_of("P6\n1 1\n255\n"), ErrorCode::ParseError);
    EXPECT_EQ(code_of("PF\n2 2\n-1.0\nabc"), ErrorCode::ParseError);
    EXPECT_EQ(code_of("PF\n-2 2\n-1.0\n"), ErrorCode::ParseError);
    EXPECT_EQ(code_of(""), ErrorCode::ParseError);
    try {
        read_pfm(path("missing.pfm"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::IoError);
    }
}

TEST_F(ImageFiles, PngOutputs) {
    RadianceImage a = ramp(9, 4);
    write_png(path("a.png"), a);
    EXPECT_GT(std::filesystem::file_size(path("a.png")), 8u);
    ImageMask m(9, 4, 0);
    m.values[3] = m.values[20] = 1;
    write_mask_png(path("m.png"), m);
    EXPECT_EQ(read_mask_png(path("m.png")), m);
    EXPECT_THROW(read_mask_png(path("a.pfm")), Error);
}

TEST(Images, SrgbEncoding) {
    EXPECT_EQ(srgb_encode(0.0), 0);
    EXPECT_EQ(srgb_encode(1.0), 255);
    EXPECT_EQ(srgb_encode(7.0), 255);
    EXPECT_EQ(srgb_encode(-1.0), 0);
    EXPECT_EQ(srgb_encode(0.5), 188);
}

// ---------------------------------------------------------------- scene files

TEST(SceneFiles, RoundTrip) {
    SceneDescription d;
    d.volumes = {"a.mvox", "dir with space/b.mvox"};
    d.scene.sigma_max = 12.5;
    d.scene.camera = {{1, 2, 3}, {0, 0.5, 0}, {0, 0, 1}, 35, 320, 200};
    d.scene.lights.push_back({normalize(Vec3{1, 1, 1}), {3, 2, 1}});
    d.scene.environment = {0.1, 0.2, 0.3};
    d.scene.default_material = {FlakeMode::Specular, {0.5, 0.5, 0.5}};
    d.scene.materials[3] = {FlakeMode::Diffuse, {0.9, 0.1, 0.0}};
    std::stringstream ss;
    write_scene(ss, d);
    const SceneDescription e = parse_scene(ss);
    EXPECT_EQ(e.volumes, d.volumes);
    EXPECT_EQ(e.scene.sigma_max, 12.5);
    EXPECT_EQ(e.scene.camera, d.scene.camera);
    EXPECT_EQ(e.scene.lights, d.scene.lights);
    EXPECT_EQ(e.scene.environment, d.scene.environment);
    EXPECT_EQ(e.scene.default_material, d.scene.default_material);
    EXPECT_EQ(e.scene.materials, d.scene.materials);
}

TEST(SceneFiles, ParseErrorsNameTheLine) {
    for (const char* text : {"sigma\n", "camera 0 0 0 1 1 1\n", "material 2 shiny 1 1 1\n", "bogus 1\n",
                             "environment 1 1 1 1\n", "sigma x\n"}) {
        std::istringstream in(std::string("# header\n") + text);
        try {
            parse_scene(in);
            ADD_FAILURE() << text;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::ParseError);
            EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
        }
    }
}

TEST(SceneFiles, LoadResolvesRelativeVolumes) {
    const auto dir = std::filesystem::temp_directory_path() / "mvx_scene_load";
    std::filesystem::create_directories(dir / "vols");
    filled(1, 2, flat_payload({1, 1, 1})).write_file((dir / "vols" / "l0.mvox").string());
    {
        std::ofstream out(dir / "scene.txt");
        out << "volume vols/l0.mvox\nsigma 3\nenvironment 1 1 1\n";
    }
    const Scene s = load_scene((dir / "scene.txt").string());
    EXPECT_EQ(s.lods.size(), 1u);
    EXPECT_EQ(s.lods[0].occupied_count(), 8u);
    EXPECT_EQ(s.sigma_max, 3.0);
    {
        std::ofstream out(dir / "bad.txt");
        out << "volume vols/missing.mvox\n";
    }
    EXPECT_THROW(load_scene((dir / "bad.txt").string()), Error);
    std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace mvx
