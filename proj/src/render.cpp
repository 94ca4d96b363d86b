// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mvx/render.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

#include "mvx/error.hpp"

namespace mvx {

namespace {

constexpr double kInvFourPi = 0.25 * std::numbers::inv_pi;
constexpr double kRegularization = 1e-10;  // matches the NDF's regularized S
constexpr uint32_t kMisQuadrature = 8;

bool finite_nonneg(const Vec3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z) && v.x >= 0 && v.y >= 0 && v.z >= 0;
}

const ShadingLobe kIsotropicLobe{SggxParams{}, 1.0, 4.0};

std::span<const ShadingLobe> or_isotropic(std::span<const ShadingLobe> lobes) {
    return lobes.empty() ? std::span<const ShadingLobe>(&kIsotropicLobe, 1) : lobes;
}

double visible_area(const SggxParams& s, const Vec3& w) {
    return std::sqrt(std::max(s.matrix().quad(w) + kRegularization, 0.0));
}

/// Share of the collisions a lobe receives from direction wi, unnormalized.
double hit_share(const ShadingLobe& l, const Vec3& wi) {
    const double area = l.flake_area > 0 ? l.flake_area : sggx_flake_area(l.sggx);
    return l.weight * visible_area(l.sggx, wi) / area;
}

/// Lobe selection for incoming direction wi; a single lobe skips the shares.
struct LobeChoice {
    std::span<const ShadingLobe> lobes;
    Vec3 wi;
    double total = 1;

    LobeChoice(std::span<const ShadingLobe> l, const Vec3& w) : lobes(l), wi(w) {
        if (lobes.size() == 1) return;
        total = 0;
        for (const auto& lobe : lobes) total += hit_share(lobe, wi);
    }
    double probability(size_t i) const { return lobes.size() == 1 ? 1.0 : hit_share(lobes[i], wi) / total; }
    const ShadingLobe& pick(double u) const {
        if (lobes.size() == 1) return lobes[0];
        u *= total;
        for (const auto& lobe : lobes) {
            const double s = hit_share(lobe, wi);
            if (u < s) return lobe;
            u -= s;
        }
        return lobes.back();
    }
};

Vec3 reflect(const Vec3& wi, const Vec3& m) { return m * (2.0 * dot(wi, m)) - wi; }

/// Cosine-weighted direction about unit m.
Vec3 cosine_about(const Vec3& m, double u1, double u2) {
    const double r = std::sqrt(u1), phi = 2.0 * std::numbers::pi * u2;
    const double z = std::sqrt(std::max(0.0, 1.0 - u1));
    Vec3 t, b;
    orthonormal_basis(m, t, b);
    return normalize(t * (r * std::cos(phi)) + b * (r * std::sin(phi)) + m * z);
}

}  // namespace

// ---------------------------------------------------------------- scene

const Material& Scene::material(uint32_t id) const {
    auto it = materials.find(id);
    return it == materials.end() ? default_material : it->second;
}

void Scene::validate() const {
    auto bad = [](const std::string& why) { return Error(ErrorCode::InvalidConfig, why); };
    if (lods.empty()) throw bad("scene has no volume");
    const VolumeHeader& h0 = lods.front().header();
    for (size_t l = 1; l < lods.size(); ++l) {
        const VolumeHeader& h = lods[l].header();
        if (h.grid.res1 != h0.grid.res1 || !(h.domain == h0.domain))
            throw bad("LoD " + std::to_string(l) + " has a different block layout or domain");
        if (h.resolution() > lods[l - 1].header().resolution())
            throw bad("LoD volumes must be ordered fine to coarse");
    }
    if (!std::isfinite(sigma_max) || sigma_max < 0) throw bad("sigma_max must be finite and non-negative");
    auto check_material = [&](const Material& m) {
        for (int c = 0; c < 3; ++c)
            if (!(m.albedo[c] >= 0 && m.albedo[c] <= 1)) throw bad("albedo components must lie in [0, 1]");
    };
    check_material(default_material);
    for (const auto& [id, m] : materials) check_material(m);
    if (!finite_nonneg(environment)) throw bad("environment radiance must be finite and non-negative");
    for (const auto& l : lights) {
        if (!finite_nonneg(l.radiance)) throw bad("light radiance must be finite and non-negative");
        if (!(length(l.direction) > 0) || !std::isfinite(length(l.direction))) throw bad("light direction is zero");
    }
    const Camera& c = camera;
    if (c.width < 1 || c.height < 1) throw bad("image size must be positive");
    if (!(c.fov_degrees > 0 && c.fov_degrees < 180)) throw bad("fov must lie in (0, 180) degrees");
    const Vec3 f = c.target - c.position;
    if (!(length(f) > 0) || !(length(cross(f, c.up)) > 1e-12 * length(f) * length(c.up)))
        throw bad("camera target must differ from its position and not be parallel to up");
}

// ---------------------------------------------------------------- LoD

LodSelection select_lod(double width, uint32_t max_levels) {
    LodSelection s;
    if (max_levels <= 1 || !(width > 0)) return s;
    const double top = double(max_levels - 1);
    const double level = std::clamp(top + std::log2(width), 0.0, top);
    s.level0 = uint32_t(std::floor(level));
    s.level1 = std::min(s.level0 + 1, max_levels - 1);
    s.blend = s.level1 == s.level0 ? 0.0 : level - s.level0;
    return s;
}

// ---------------------------------------------------------------- geometry

bool intersect_box(const Ray& ray, const Aabb& box, double& t0, double& t1) {
    t0 = 0;
    t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        const double o = ray.origin[a], d = ray.direction[a];
        if (d == 0) {
            if (o < box.min[a] || o > box.max[a]) return false;
            continue;
        }
        const double inv = 1.0 / d;
        double n = (box.min[a] - o) * inv, f = (box.max[a] - o) * inv;
        if (n > f) std::swap(n, f);
        t0 = std::max(t0, n);
        t1 = std::min(t1, f);
    }
    return t0 < t1;
}

Ray camera_ray(const Camera& c, double px, double py) {
    const Vec3 forward = normalize(c.target - c.position);
    const Vec3 right = normalize(cross(forward, c.up));
    const Vec3 up = cross(right, forward);
    const double tan_half = std::tan(c.fov_degrees * std::numbers::pi / 360.0);
    const double aspect = double(c.width) / c.height;
    const double x = (2.0 * px / c.width - 1.0) * tan_half * aspect;
    const double y = (1.0 - 2.0 * py / c.height) * tan_half;
    return {c.position, normalize(forward + right * x + up * y)};
}

// ---------------------------------------------------------------- volume view

VolumeView::VolumeView(const SparseVolume& volume)
    : volume_(&volume), header_(volume.header()), res_(int32_t(volume.resolution())), mask_(volume.block_mask()) {
    const Vec3 e = header_.domain.extent();
    inv_voxel_ = {res_ / e.x, res_ / e.y, res_ / e.z};
    voxels_.resize(volume.occupied_count());
    for (uint32_t slot = 0; slot < voxels_.size(); ++slot) {
        const VoxelPayload p = volume.payload(slot);
        ShadingVoxel& v = voxels_[slot];
        v.axis_density = p.axis_density;
        v.material_id = p.material_id;
        v.first_lobe = uint32_t(lobes_.size());
        const auto decoded = shading_lobes(p);
        lobes_.insert(lobes_.end(), decoded.begin(), decoded.end());
        v.lobe_count = uint32_t(decoded.size());
    }
}

const ShadingVoxel* VolumeView::voxel_at(const Vec3& p) const {
    const Vec3 q = mul(p - header_.domain.min, inv_voxel_);
    const double fx = std::floor(q.x), fy = std::floor(q.y), fz = std::floor(q.z);
    if (!(fx >= 0 && fy >= 0 && fz >= 0 && fx < res_ && fy < res_ && fz < res_)) return nullptr;
    const uint32_t x = uint32_t(fx), y = uint32_t(fy), z = uint32_t(fz);
    const uint32_t r2 = header_.grid.res2;
    const uint32_t n1 = header_.grid.res1;
    const uint32_t block = x / r2 + n1 * (y / r2 + n1 * (z / r2));
    if (!block_occupied(block)) return nullptr;
    const uint32_t r = uint32_t(res_);
    const auto slot = volume_->find_slot(x + r * (y + r * z));
    return slot ? &voxels_[*slot] : nullptr;
}

std::vector<ShadingLobe> shading_lobes(const VoxelPayload& payload) {
    std::vector<ShadingLobe> out;
    double total = 0;
    for (const Lobe& l : payload.channels[kNormal]) total += l.weight;
    if (!(total > 0)) return out;
    for (const Lobe& l : payload.channels[kNormal])
        if (l.weight > 0) {
            const SggxParams s = decode_compact(l.sggx);
            out.push_back({s, l.weight / total, sggx_flake_area(s)});
        }
    return out;
}

double sggx_flake_area(const SggxParams& s) {
    // Semi-axis products of the ellipsoid are the square roots of S's
    // eigenvalues, so the area needs only those.
    constexpr double p = 1.6075;
    const Vec3 l = eigen_decompose(s.matrix()).values;
    double mean = 0;
    for (int i = 0; i < 3; ++i) mean += std::pow(std::max(l[i], 0.0), p / 2) / 3;
    const double area = 4.0 * std::pow(mean, 1.0 / p);
    return area > 0 ? area : 4.0;
}

double directional_density(const std::array<float, 3>& d, const Vec3& w) {
    return w.x * w.x * d[0] + w.y * w.y * d[1] + w.z * w.z * d[2];
}

// ---------------------------------------------------------------- tracking

namespace {

/// Views sharing one block layout, with the union of their stencils.
struct Medium {
    std::vector<const VolumeView*> views;
    Aabb domain;
    uint32_t blocks = 1;
    Vec3 block_size;
    std::vector<uint8_t> mask;
    double sigma_max = 0;

    Medium(std::vector<const VolumeView*> v, double sigma) : views(std::move(v)), sigma_max(sigma) {
        const VolumeHeader& h = views.front()->header();
        domain = h.domain;
        blocks = h.grid.res1;
        block_size = domain.extent() / double(blocks);
        const size_t n = size_t(blocks) * blocks * blocks;
        mask.assign((n + 7) / 8, 0);
        for (size_t b = 0; b < n; ++b)
            for (const VolumeView* view : views)
                if (view->block_occupied(uint32_t(b))) mask[b >> 3] |= uint8_t(1u << (b & 7));
    }

    bool occupied(uint32_t b) const { return (mask[b >> 3] >> (b & 7)) & 1; }

    /// Calls f(t0, t1) for each occupied block crossed within [0, t_max], in
    /// order, until f returns false.
    template <class F>
    void for_each_block(const Ray& ray, double t_max, F&& f) const {
        double t0, t1;
        if (!intersect_box(ray, domain, t0, t1)) return;
        t1 = std::min(t1, t_max);
        if (t0 >= t1) return;
        const Vec3 p = ray.origin + ray.direction * (0.5 * (t0 + std::min(t1, t0 + 1e-9 * (1 + t1))));
        int32_t cell[3], step[3];
        double next[3], delta[3];
        const int32_t n = int32_t(blocks);
        for (int a = 0; a < 3; ++a) {
            const double local = (p[a] - domain.min[a]) / block_size[a];
            cell[a] = std::clamp(int32_t(std::floor(local)), 0, n - 1);
            const double d = ray.direction[a];
            if (d > 0) {
                step[a] = 1;
                next[a] = (domain.min[a] + (cell[a] + 1) * block_size[a] - ray.origin[a]) / d;
                delta[a] = block_size[a] / d;
            } else if (d < 0) {
                step[a] = -1;
                next[a] = (domain.min[a] + cell[a] * block_size[a] - ray.origin[a]) / d;
                delta[a] = -block_size[a] / d;
            } else {
                step[a] = 0;
                next[a] = std::numeric_limits<double>::infinity();
                delta[a] = 0;
            }
        }
        double t = t0;
        while (t < t1) {
            const int a = next[0] < next[1] ? (next[0] < next[2] ? 0 : 2) : (next[1] < next[2] ? 1 : 2);
            const double exit = std::min(next[a], t1);
            const uint32_t b = uint32_t(cell[0] + n * (cell[1] + n * cell[2]));
            if (exit > t && occupied(b) && !f(t, exit)) return;
            t = exit;
            cell[a] += step[a];
            if (cell[a] < 0 || cell[a] >= n) return;
            next[a] += delta[a];
        }
    }

    /// Free-flight sampling; pick(t) chooses the view used for a tentative collision.
    template <class Pick>
    TrackingResult track(const Ray& ray, double t_max, Pcg32& rng, Pick&& pick) const {
        TrackingResult r;
        if (!(sigma_max > 0)) return r;
        const double inv = 1.0 / sigma_max;
        for_each_block(ray, t_max, [&](double a, double b) {
            double t = a;
            for (;;) {
                t -= std::log1p(-rng.next()) * inv;
                if (t >= b) return true;
                const VolumeView& view = pick(t);
                const ShadingVoxel* v = view.voxel_at(ray.origin + ray.direction * t);
                if (!v) continue;
                if (rng.next() < directional_density(v->axis_density, ray.direction)) {
                    r.escaped = false;
                    r.distance = t;
                    r.voxel = v;
                    r.view = &view;
                    return false;
                }
            }
        });
        return r;
    }

    template <class Pick>
    double transmittance(const Ray& ray, double t_max, Pcg32& rng, Pick&& pick) const {
        double tr = 1;
        if (!(sigma_max > 0)) return tr;
        const double inv = 1.0 / sigma_max;
        for_each_block(ray, t_max, [&](double a, double b) {
            double t = a;
            for (;;) {
                t -= std::log1p(-rng.next()) * inv;
                if (t >= b) return true;
                const ShadingVoxel* v = pick(t).voxel_at(ray.origin + ray.direction * t);
                if (!v) continue;
                tr *= 1.0 - directional_density(v->axis_density, ray.direction);
                if (tr <= 0) return false;
                if (tr < 1e-3) {
                    if (rng.next() < 0.5) {
                        tr = 0;
                        return false;
                    }
                    tr *= 2;
                }
            }
        });
        return std::max(tr, 0.0);
    }
};

}  // namespace

TrackingResult delta_tracking(const Ray& ray, double t_max, const VolumeView& view, double sigma_max, Pcg32& rng) {
    const Medium m({&view}, sigma_max);
    return m.track(ray, t_max, rng, [&](double) -> const VolumeView& { return view; });
}

double ratio_tracking(const Ray& ray, double t_max, const VolumeView& view, double sigma_max, Pcg32& rng) {
    const Medium m({&view}, sigma_max);
    return m.transmittance(ray, t_max, rng, [&](double) -> const VolumeView& { return view; });
}

// ---------------------------------------------------------------- phase functions

ScatterSample shade_event(const Vec3& travel, std::span<const ShadingLobe> lobes, const Material& material,
                          Pcg32& rng) {
    lobes = or_isotropic(lobes);
    const Vec3 wi = -travel;
    const ShadingLobe& lobe = LobeChoice(lobes, wi).pick(rng.next());
    const double u1 = rng.next(), u2 = rng.next();
    const Vec3 m = sample_vndf(lobe.sggx, wi, u1, u2);
    ScatterSample s;
    if (material.mode == FlakeMode::Specular) {
        s.direction = normalize(reflect(wi, m));
    } else {
        const double v1 = rng.next(), v2 = rng.next();
        s.direction = cosine_about(m, v1, v2);
    }
    s.weight = material.albedo;
    return s;
}

ScatterSample shade_event(const Vec3& travel, const VoxelPayload& payload, const Material& material, Pcg32& rng) {
    const auto lobes = shading_lobes(payload);
    return shade_event(travel, lobes, material, rng);
}

double phase_density(FlakeMode mode, std::span<const ShadingLobe> lobes, const Vec3& travel, const Vec3& out,
                     uint32_t quadrature) {
    lobes = or_isotropic(lobes);
    const Vec3 wi = -travel;
    const LobeChoice choice(lobes, wi);
    double p = 0;
    if (mode == FlakeMode::Specular) {
        const Vec3 h = wi + out;
        const double len = length(h);
        if (!(len > 1e-12)) return 0;
        const Vec3 hn = h / len;
        for (size_t i = 0; i < lobes.size(); ++i)
            p += choice.probability(i) * ndf_density(lobes[i].sggx, hn) / (4.0 * visible_area(lobes[i].sggx, wi));
        return p;
    }
    quadrature = std::max(quadrature, 1u);
    for (size_t i = 0; i < lobes.size(); ++i) {
        double acc = 0;
        for (uint32_t q = 0; q < quadrature; ++q) {
            const auto [u1, u2] = hammersley(q, quadrature);
            acc += std::max(0.0, dot(out, sample_vndf(lobes[i].sggx, wi, u1, u2)));
        }
        p += choice.probability(i) * acc / quadrature;
    }
    return p * std::numbers::inv_pi;
}

double phase_estimate(FlakeMode mode, std::span<const ShadingLobe> lobes, const Vec3& travel, const Vec3& out,
                      Pcg32& rng) {
    if (mode == FlakeMode::Specular) return phase_density(mode, lobes, travel, out);
    lobes = or_isotropic(lobes);
    const ShadingLobe& lobe = LobeChoice(lobes, -travel).pick(rng.next());
    const double u1 = rng.next(), u2 = rng.next();
    const Vec3 m = sample_vndf(lobe.sggx, -travel, u1, u2);
    return std::max(0.0, dot(out, m)) * std::numbers::inv_pi;
}

// ---------------------------------------------------------------- path tracing

namespace {

struct Tracer {
    const Scene& scene;
    const RenderOptions& options;
    const Medium& medium;
    double finest_voxel;   // world size of a finest-level voxel
    double pixel_spread;   // footprint growth per unit distance
    double env_pdf;        // 0 without an environment light

    /// View used at distance t along a path segment whose footprint is
    /// `width0` at t = 0.
    const VolumeView& pick(double width0, double t, Pcg32& rng) const {
        const auto& views = medium.views;
        if (views.size() == 1) return *views.front();
        const double finest = (width0 + pixel_spread * t) / finest_voxel;
        const double coarse_units = finest / std::ldexp(1.0, int(views.size()) - 1);
        const LodSelection s = select_lod(coarse_units, uint32_t(views.size()));
        uint32_t level = s.level0;
        if (s.blend > 0 && rng.next() < s.blend) level = s.level1;
        return *views[level];
    }

    double visibility(const Vec3& x, const Vec3& dir, double width0, Pcg32& rng) const {
        const Ray r{x, dir};
        return medium.transmittance(r, std::numeric_limits<double>::infinity(), rng,
                                    [&](double t) -> const VolumeView& { return pick(width0, t, rng); });
    }

    Vec3 radiance(Ray ray, Pcg32& rng) const {
        Vec3 result, beta{1, 1, 1};
        double width = 0;
        double mis_phase = -1;  // negative: camera vertex, no MIS
        for (uint32_t bounce = 0;; ++bounce) {
            const TrackingResult ev =
                medium.track(ray, std::numeric_limits<double>::infinity(), rng,
                             [&](double t) -> const VolumeView& { return pick(width, t, rng); });
            if (ev.escaped) {
                double w = 1;
                if (mis_phase >= 0 && env_pdf > 0) w = mis_phase / (mis_phase + env_pdf);
                result += mul(beta, scene.environment) * w;
                break;
            }
            if (bounce >= options.max_bounces) break;
            width += pixel_spread * ev.distance;
            const Vec3 x = ray.origin + ray.direction * ev.distance;
            const ShadingVoxel& voxel = *ev.voxel;
            const Material& mat = scene.material(voxel.material_id);
            const auto vl = ev.view->lobes(voxel);

            for (const DirectionalLight& light : scene.lights) {
                const Vec3 l = normalize(light.direction);
                const double f = phase_estimate(mat.mode, vl, ray.direction, l, rng);
                if (f <= 0) continue;
                const double tr = visibility(x, l, width, rng);
                result += mul(mul(beta, mat.albedo), light.radiance) * (f * tr);
            }
            if (env_pdf > 0) {
                const double u1 = rng.next(), u2 = rng.next();
                const Vec3 l = uniform_sphere(u1, u2);
                const double f = phase_estimate(mat.mode, vl, ray.direction, l, rng);
                if (f > 0) {
                    const double tr = visibility(x, l, width, rng);
                    const double q = phase_density(mat.mode, vl, ray.direction, l, kMisQuadrature);
                    const double w = env_pdf / (env_pdf + q);
                    result += mul(mul(beta, mat.albedo), scene.environment) * (f * tr * w / env_pdf);
                }
            }

            const ScatterSample s = shade_event(ray.direction, vl, mat, rng);
            beta = mul(beta, s.weight);
            if (beta.x <= 0 && beta.y <= 0 && beta.z <= 0) break;
            mis_phase = phase_density(mat.mode, vl, ray.direction, s.direction, kMisQuadrature);
            ray = {x, s.direction};
        }
        return result;
    }
};

}  // namespace

RenderResult render(const Scene& scene, const RenderOptions& options) {
    if (options.spp < 1) throw Error(ErrorCode::InvalidConfig, "spp must be at least 1");
    scene.validate();
    if (options.fixed_level >= int(scene.lods.size()))
        throw Error(ErrorCode::InvalidConfig, "fixed LoD level " + std::to_string(options.fixed_level) +
                                                  " exceeds the " + std::to_string(scene.lods.size()) +
                                                  " available levels");

    std::vector<VolumeView> views;
    views.reserve(scene.lods.size());
    for (const auto& v : scene.lods) views.emplace_back(v);
    std::vector<const VolumeView*> used;
    if (options.fixed_level >= 0) {
        used.push_back(&views[size_t(options.fixed_level)]);
    } else {
        for (const auto& v : views) used.push_back(&v);
    }
    const Medium medium(used, scene.sigma_max);

    const Camera& cam = scene.camera;
    const double env_lum = scene.environment.x + scene.environment.y + scene.environment.z;
    const Tracer tracer{scene,
                        options,
                        medium,
                        views.front().header().voxel_size(),
                        2.0 * std::tan(cam.fov_degrees * std::numbers::pi / 360.0) / cam.height,
                        env_lum > 0 ? kInvFourPi : 0.0};

    RenderResult out{RadianceImage(cam.width, cam.height), ImageMask(cam.width, cam.height, 0)};
    constexpr uint32_t kTile = 16;
    const uint32_t tiles_x = (cam.width + kTile - 1) / kTile, tiles_y = (cam.height + kTile - 1) / kTile;
    const uint32_t tile_count = tiles_x * tiles_y;
    std::atomic<uint32_t> next_tile{0};
    auto worker = [&] {
        for (uint32_t tile; (tile = next_tile.fetch_add(1)) < tile_count;) {
            const uint32_t x0 = (tile % tiles_x) * kTile, y0 = (tile / tiles_x) * kTile;
            for (uint32_t y = y0; y < std::min(y0 + kTile, cam.height); ++y)
                for (uint32_t x = x0; x < std::min(x0 + kTile, cam.width); ++x) {
                    const uint64_t pixel = uint64_t(y) * cam.width + x;
                    Pcg32 rng(splitmix64(options.seed ^ splitmix64(pixel)), pixel);
                    Vec3 sum;
                    for (uint32_t s = 0; s < options.spp; ++s) {
                        const double jx = rng.next(), jy = rng.next();
                        const Vec3 L = tracer.radiance(camera_ray(cam, x + jx, y + jy), rng);
                        if (finite_nonneg(L)) sum += L;
                    }
                    out.image.set_pixel(x, y, sum / double(options.spp));
                    out.image.samples[pixel] = options.spp;

                    bool hit = false;
                    medium.for_each_block(camera_ray(cam, x + 0.5, y + 0.5), std::numeric_limits<double>::infinity(),
                                          [&](double, double) {
                                              hit = true;
                                              return false;
                                          });
                    out.mask.values[pixel] = hit;
                }
        }
    };
    const unsigned threads = std::max(1u, std::min(options.threads, tile_count));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    return out;
}

}  // namespace mvx
