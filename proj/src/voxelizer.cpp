// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mvx/voxelizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "mvx/error.hpp"
#include "mvx/parallel.hpp"
#include "mvx/sequence.hpp"

namespace mvx {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

constexpr uint32_t kDropped = std::numeric_limits<uint32_t>::max();

// Control 4-tuple of segment `s` of a spline, with reflected phantom ends.
std::array<ModelVertex, 4> segment_controls(const InputModel& m, std::pair<uint32_t, uint32_t> spline, uint32_t s) {
    const auto [off, n] = spline;
    auto at = [&](int64_t i) -> ModelVertex {
        if (i < 0) {
            ModelVertex v = m.vertices[off];
            v.position = 2.0 * m.vertices[off].position - m.vertices[off + 1].position;
            return v;
        }
        if (i >= int64_t(n)) {
            ModelVertex v = m.vertices[off + n - 1];
            v.position = 2.0 * m.vertices[off + n - 1].position - m.vertices[off + n - 2].position;
            return v;
        }
        return m.vertices[off + uint32_t(i)];
    };
    return {at(int64_t(s) - 1), at(s), at(int64_t(s) + 1), at(int64_t(s) + 2)};
}

std::array<Vec3, 4> positions(const std::array<ModelVertex, 4>& c) {
    return {c[0].position, c[1].position, c[2].position, c[3].position};
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) { return 0.5 * length(cross(b - a, c - a)); }

Vec3 catmull_rom(const std::array<Vec3, 4>& p, double t) {
    const double t2 = t * t, t3 = t2 * t;
    return 0.5 * (2.0 * p[1] + (p[2] - p[0]) * t + (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3]) * t2 +
                  (3.0 * p[1] - p[0] - 3.0 * p[2] + p[3]) * t3);
}

Vec3 catmull_rom_derivative(const std::array<Vec3, 4>& p, double t) {
    return 0.5 * ((p[2] - p[0]) + 2.0 * (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3]) * t +
                  3.0 * (3.0 * p[1] - p[0] - 3.0 * p[2] + p[3]) * t * t);
}

Vec3 unit_or(const Vec3& v, const Vec3& fallback) {
    const double l = length(v);
    return l > 1e-12 ? v / l : fallback;
}

Vec3 perpendicular_to(const Vec3& n, const Vec3& t) {
    const Vec3 r = n - dot(n, t) * t;
    const double l = length(r);
    if (l > 1e-9) return r / l;
    Vec3 a, b;
    orthonormal_basis(t, a, b);
    return a;
}

uint64_t spline_segment_samples(const std::array<Vec3, 4>& bezier_grid, uint32_t fixed) {
    if (fixed > 0) return fixed;
    const double len = length(bezier_grid[1] - bezier_grid[0]) + length(bezier_grid[2] - bezier_grid[1]) +
                       length(bezier_grid[3] - bezier_grid[2]);
    return std::max<uint64_t>(1, uint64_t(std::ceil(len / 0.5)));
}

}  // namespace

void InputModel::validate() const {
    for (const auto& v : vertices) {
        if (std::abs(length(v.normal) - 1) > 1e-3 || std::abs(length(v.tangent) - 1) > 1e-3)
            throw Error(ErrorCode::NonUnitDirection, "vertex normal and tangent must be unit length");
        if (!materials.empty() && v.material >= materials.size())
            throw Error(ErrorCode::InvalidParams, "material id " + std::to_string(v.material) + " is not declared");
    }
    for (const auto& t : triangles)
        for (uint32_t i : t)
            if (i >= vertices.size()) throw Error(ErrorCode::OutOfBounds, "triangle index out of range");
    for (const auto& [off, n] : splines) {
        if (n < 2) throw Error(ErrorCode::InvalidParams, "spline needs at least two nodes");
        if (uint64_t(off) + n > vertices.size()) throw Error(ErrorCode::OutOfBounds, "spline range out of range");
    }
    if (!(radius >= 0) || !std::isfinite(radius)) throw Error(ErrorCode::InvalidParams, "radius must be >= 0");
}

ModelBounds compute_bounds(const InputModel& model) {
    if (model.empty()) throw Error(ErrorCode::EmptyModel, "model has no primitives");
    constexpr double inf = std::numeric_limits<double>::infinity();
    ModelBounds b{{{inf, inf, inf}, {-inf, -inf, -inf}}, 0};
    auto grow = [&](const Vec3& p) {
        b.bbox.min = vmin(b.bbox.min, p);
        b.bbox.max = vmax(b.bbox.max, p);
    };
    if (model.kind == InputModel::Kind::Triangles) {
        for (const auto& t : model.triangles) {
            const Vec3& a = model.vertices[t[0]].position;
            const Vec3& c = model.vertices[t[1]].position;
            const Vec3& d = model.vertices[t[2]].position;
            grow(a), grow(c), grow(d);
            b.delta = std::max({b.delta, length(c - a), length(d - c), length(a - d)});
        }
    } else {
        for (const auto& sp : model.splines) {
            for (uint32_t i = 0; i < sp.second; ++i) grow(model.vertices[sp.first + i].position);
            for (uint32_t s = 0; s + 1 < sp.second; ++s) {
                const auto bz = catmull_rom_bezier(positions(segment_controls(model, sp, s)));
                for (const Vec3& q : bz) {
                    grow(q);
                    b.delta = std::max(b.delta, length(q - bz[0]));
                }
            }
        }
        b.delta += model.radius;
    }
    return b;
}

Aabb cubic_domain(const ModelBounds& bounds, double radius) {
    const Vec3 e = bounds.bbox.extent();
    const double side = max_component(e) + 2 * radius;
    if (!(side > 0) || !std::isfinite(side)) throw Error(ErrorCode::DegenerateBounds, "model bounds have zero extent");
    const Vec3 c = 0.5 * (bounds.bbox.min + bounds.bbox.max);
    const Vec3 h{side / 2, side / 2, side / 2};
    return {c - h, c + h};
}

Vec3 normalize_position(const Vec3& p, const Aabb& bbox, double resolution) {
    const Vec3 e = bbox.extent();
    if (!(e.x > 0) || !(e.y > 0) || !(e.z > 0))
        throw Error(ErrorCode::DegenerateBounds, "bounding box has a zero-extent axis");
    const double top = std::nextafter(resolution, 0.0);
    Vec3 q;
    for (int a = 0; a < 3; ++a) q[a] = std::clamp((p[a] - bbox.min[a]) / e[a] * resolution, 0.0, top);
    return q;
}

double block_distance(const Vec3& p, const Int3& block, double s) {
    const Vec3 corner{block.x * s, block.y * s, block.z * s};
    const Vec3 center = corner + Vec3{s / 2, s / 2, s / 2};
    Vec3 q;
    for (int a = 0; a < 3; ++a) q[a] = std::abs(p[a] - center[a]) - s / 2;
    const Vec3 pos = vmax(q, Vec3{0, 0, 0});
    return dot(pos, pos) + std::min(max_component(q), 0.0);
}

bool block_distance_test(const Vec3& p, const Int3& block, double block_size, double delta) {
    return block_distance(p, block, block_size) < delta * delta;
}

bool BlockMap::empty(const Int3& b) const { return empty(linear_index(b, res1)); }

uint32_t BlockMap::count(const Int3& b) const { return uint32_t(nodes(b).size()); }

std::span<const uint32_t> BlockMap::nodes(const Int3& b) const {
    const uint32_t id = linear_index(b, res1);
    const auto it = std::lower_bound(blocks.begin(), blocks.end(), id);
    if (it == blocks.end() || *it != id) return {};
    const size_t k = size_t(it - blocks.begin());
    return std::span(node_ids).subspan(offsets[k], offsets[k + 1] - offsets[k]);
}

std::vector<Vec3> control_nodes(const InputModel& model, const Aabb& domain, const GridConfig& config) {
    const double res = double(config.resolution());
    std::vector<Vec3> nodes;
    if (model.kind == InputModel::Kind::Triangles) {
        nodes.reserve(model.triangles.size() * 3);
        for (const auto& t : model.triangles)
            for (uint32_t c : t) nodes.push_back(normalize_position(model.vertices[c].position, domain, res));
    } else {
        nodes.reserve(model.vertices.size());
        for (const auto& v : model.vertices) nodes.push_back(normalize_position(v.position, domain, res));
    }
    return nodes;
}

BlockMap build_block_map(std::span<const Vec3> nodes, const GridConfig& config, double delta_grid) {
    BlockMap map;
    map.res1 = config.res1;
    map.occupied_bits.assign((size_t(config.res1) * config.res1 * config.res1 + 7) / 8, 0);
    const double s = double(config.res2) * config.res3;
    const int last = int(config.res1) - 1;

    std::vector<std::vector<std::pair<uint32_t, uint32_t>>> parts(std::max(1u, config.threads));
    const unsigned threads = unsigned(parts.size());
    parallel_for(threads, threads, [&](size_t tb, size_t te) {
        for (size_t t = tb; t < te; ++t) {
            auto& out = parts[t];
            const size_t nb = nodes.size() * t / threads, ne = nodes.size() * (t + 1) / threads;
            for (size_t i = nb; i < ne; ++i) {
                const Vec3& p = nodes[i];
                Int3 lo, hi;
                for (int a = 0; a < 3; ++a) {
                    lo[a] = std::clamp(int(std::floor((p[a] - delta_grid) / s)), 0, last);
                    hi[a] = std::clamp(int(std::floor((p[a] + delta_grid) / s)), 0, last);
                }
                for (int z = lo.z; z <= hi.z; ++z)
                    for (int y = lo.y; y <= hi.y; ++y)
                        for (int x = lo.x; x <= hi.x; ++x)
                            if (block_distance_test(p, {x, y, z}, s, delta_grid))
                                out.emplace_back(linear_index({x, y, z}, config.res1), uint32_t(i));
            }
        }
    });
    std::vector<std::pair<uint32_t, uint32_t>> pairs;
    for (auto& p : parts) pairs.insert(pairs.end(), p.begin(), p.end());
    std::sort(pairs.begin(), pairs.end());
    map.node_ids.reserve(pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i) {
        if (i == 0 || pairs[i].first != pairs[i - 1].first) {
            map.blocks.push_back(pairs[i].first);
            map.offsets.push_back(uint32_t(i));
            map.occupied_bits[pairs[i].first >> 3] |= uint8_t(1u << (pairs[i].first & 7));
        }
        map.node_ids.push_back(pairs[i].second);
    }
    map.offsets.push_back(uint32_t(pairs.size()));
    return map;
}

std::array<Vec3, 4> catmull_rom_bezier(const std::array<Vec3, 4>& p) {
    return {p[1], p[1] + (p[2] - p[0]) / 6.0, p[2] - (p[3] - p[1]) / 6.0, p[2]};
}

std::vector<SplinePoint> subdivide_spline(const std::array<ModelVertex, 4>& controls,
                                          std::span<const double> t_values) {
    const auto p = positions(controls);
    const Vec3 chord = p[2] - p[1];
    if (!(length(chord) > 0)) throw Error(ErrorCode::DegenerateSegment, "segment endpoints coincide");
    const Vec3 chord_dir = normalize(chord);
    auto tangent_at = [&](double t) { return unit_or(catmull_rom_derivative(p, t), chord_dir); };

    Vec3 x = p[1], t = tangent_at(0.0);
    Vec3 r = perpendicular_to(controls[1].normal, t);
    std::vector<SplinePoint> out;
    out.reserve(t_values.size());
    for (double tv : t_values) {
        const Vec3 x1 = catmull_rom(p, tv), t1 = tangent_at(tv);
        // Double reflection keeps the frame rotation-minimizing.
        const Vec3 v1 = x1 - x;
        const double c1 = dot(v1, v1);
        Vec3 rl = r, tl = t;
        if (c1 > 0) {
            rl = r - (2.0 / c1) * dot(v1, r) * v1;
            tl = t - (2.0 / c1) * dot(v1, t) * v1;
        }
        const Vec3 v2 = t1 - tl;
        const double c2 = dot(v2, v2);
        r = c2 > 0 ? rl - (2.0 / c2) * dot(v2, rl) * v2 : rl;
        r = perpendicular_to(r, t1);
        x = x1;
        t = t1;
        out.push_back({x1, t1, r, controls[1].material});
    }
    return out;
}

std::array<double, 2> square_to_triangle(double u, double v) {
    const double upper = double(v > u);
    const double b0 = upper * (0.5 * u) + (1 - upper) * (u - 0.5 * v);
    const double b1 = upper * (v - 0.5 * u) + (1 - upper) * (0.5 * v);
    return {b0, b1};
}

uint64_t triangle_sample_count(double area, uint64_t budget, double max_area) {
    if (!(area > 0)) return 0;
    return std::max<uint64_t>(1, uint64_t(std::llround(double(budget) * area / max_area)));
}

std::vector<SplinePoint> sample_triangle(const std::array<ModelVertex, 3>& tri, uint64_t budget, double max_area) {
    if (!(max_area > 0)) throw Error(ErrorCode::InvalidParams, "max_area must be positive");
    const Vec3 &a = tri[0].position, &b = tri[1].position, &c = tri[2].position;
    const uint64_t n = triangle_sample_count(triangle_area(a, b, c), budget, max_area);
    const Vec3 face_n = unit_or(cross(b - a, c - a), tri[0].normal);
    std::vector<SplinePoint> out;
    out.reserve(n);
    for (uint64_t k = 0; k < n; ++k) {
        const auto [u, v] = r2_point(k);
        const auto [b0, b1] = square_to_triangle(u, v);
        const double b2 = 1 - b0 - b1;
        SplinePoint s;
        s.position = b0 * a + b1 * b + b2 * c;
        s.normal = unit_or(b0 * tri[0].normal + b1 * tri[1].normal + b2 * tri[2].normal, face_n);
        s.tangent = unit_or(b0 * tri[0].tangent + b1 * tri[1].tangent + b2 * tri[2].tangent, tri[0].tangent);
        s.material = tri[0].material;
        out.push_back(s);
    }
    return out;
}

QDir quantize_direction(const Vec3& d) {
    QDir q;
    for (int a = 0; a < 3; ++a) q[a] = int8_t(std::clamp<long>(std::lround(d[a] * 127.0), -127, 127));
    return q;
}

Vec3 dequantize_direction(const QDir& q) { return unit_or(Vec3{double(q[0]), double(q[1]), double(q[2])}, {0, 0, 1}); }

SampleNode make_sample(const SplinePoint& p, const Vec3& pv, const GridConfig& config) {
    const uint64_t res = config.resolution();
    Int3 l2, l3;
    for (int a = 0; a < 3; ++a) {
        const uint64_t s = std::min<uint64_t>(uint64_t(std::max(pv[a], 0.0)), res - 1);
        l2[a] = int32_t(s / config.res3);
        l3[a] = int32_t(s % config.res3);
    }
    return {linear_index(l2, config.leaf_resolution()), linear_index(l3, config.res3), quantize_direction(p.tangent),
            quantize_direction(p.normal), p.material};
}

std::vector<VoxelSpan> gather_samples(std::vector<SampleNode>& samples) {
    std::stable_sort(samples.begin(), samples.end(),
                     [](const SampleNode& a, const SampleNode& b) { return a.level2_index < b.level2_index; });
    std::vector<VoxelSpan> spans;
    for (uint32_t i = 0; i < samples.size(); ++i) {
        if (i == 0 || samples[i].level2_index != samples[i - 1].level2_index)
            spans.push_back({samples[i].level2_index, i, 0});
        ++spans.back().count;
    }
    return spans;
}

VoxelAggregate aggregate_voxel(std::span<const SampleNode> span, const GridConfig& config) {
    if (span.empty()) throw Error(ErrorCode::EmptyInput, "voxel has no samples");
    const uint32_t r = config.res3;
    std::vector<bool> hit(size_t(r) * r * r), yz(size_t(r) * r), xz(size_t(r) * r), xy(size_t(r) * r);
    size_t n_hit = 0, n_yz = 0, n_xz = 0, n_xy = 0;
    auto mark = [](std::vector<bool>& set, size_t i, size_t& n) {
        if (!set[i]) {
            set[i] = true;
            ++n;
        }
    };
    std::vector<Direction> tangents, normals;
    tangents.reserve(span.size());
    normals.reserve(span.size());
    std::vector<uint32_t> materials;
    materials.reserve(span.size());
    for (const SampleNode& s : span) {
        const Int3 c = unlinear_index(s.level3_index, r);
        mark(hit, s.level3_index, n_hit);
        mark(yz, size_t(c.y) + r * size_t(c.z), n_yz);
        mark(xz, size_t(c.x) + r * size_t(c.z), n_xz);
        mark(xy, size_t(c.x) + r * size_t(c.y), n_xy);
        tangents.push_back(dequantize_direction(s.tangent));
        normals.push_back(dequantize_direction(s.normal));
        materials.push_back(s.material_id);
    }
    VoxelAggregate a;
    a.tangent_histogram = histogram_of_samples(tangents);
    a.normal_histogram = histogram_of_samples(normals);
    const double plane = double(r) * r;
    a.occupancy = double(n_hit) / (plane * r);
    a.axis_density = {double(n_yz) / plane, double(n_xz) / plane, double(n_xy) / plane};
    std::sort(materials.begin(), materials.end());
    size_t best = 0;
    for (size_t i = 0; i < materials.size();) {
        size_t j = i;
        while (j < materials.size() && materials[j] == materials[i]) ++j;
        if (j - i > best) {
            best = j - i;
            a.material_id = materials[i];
        }
        i = j;
    }
    return a;
}

VoxelizeResult voxelize(const InputModel& model, const GridConfig& config, const std::optional<Aabb>& domain,
                        uint32_t k) {
    config.validate();
    model.validate();
    VolumeHeader header;
    header.grid = config;
    header.k = k;
    if (model.empty()) {
        if (domain) header.domain = *domain;
        VoxelizeResult out{SparseVolume(header), {}, {}};
        out.blocks = build_block_map({}, config, 0);
        return out;
    }
    const ModelBounds bounds = compute_bounds(model);
    header.domain = domain ? *domain : cubic_domain(bounds, model.radius);
    SparseVolume volume(header);
    const Aabb& dom = header.domain;
    const double res = double(config.resolution());
    const double scale = res / dom.extent().x;  // grid units per world unit
    const double delta_world = config.delta > 0 ? config.delta : bounds.delta;
    const unsigned threads = config.threads;

    VoxelizeStats stats;
    stats.delta_world = delta_world;
    auto t0 = Clock::now();

    // Stage 1: control nodes per level-1 block.
    const auto nodes = control_nodes(model, dom, config);
    stats.nodes = nodes.size();
    BlockMap blocks = build_block_map(nodes, config, delta_world * scale);
    stats.occupied_blocks = blocks.blocks.size();

    // Stage 2: per-element counts, prefix sum, then independent fills.
    const bool splines = model.kind == InputModel::Kind::Splines;
    struct Element {
        uint32_t spline, segment;  // or triangle index in `spline`
    };
    std::vector<Element> elements;
    if (splines) {
        for (uint32_t s = 0; s < model.splines.size(); ++s)
            for (uint32_t g = 0; g + 1 < model.splines[s].second; ++g) elements.push_back({s, g});
    } else {
        for (uint32_t t = 0; t < model.triangles.size(); ++t) elements.push_back({t, 0});
    }
    double max_area = 0;
    if (!splines)
        for (const auto& t : model.triangles)
            max_area = std::max(max_area, triangle_area(model.vertices[t[0]].position, model.vertices[t[1]].position,
                                                        model.vertices[t[2]].position));
    uint64_t budget = config.samples_per_element;
    if (!splines && budget == 0)
        budget = std::max<uint64_t>(1, uint64_t(std::ceil(4.0 * max_area * scale * scale)));

    auto bezier_grid = [&](const Element& e) {
        auto bz = catmull_rom_bezier(positions(segment_controls(model, model.splines[e.spline], e.segment)));
        for (Vec3& q : bz) q = q * scale;
        return bz;
    };
    auto last_segment = [&](const Element& e) { return e.segment + 2 == model.splines[e.spline].second; };

    std::vector<uint64_t> offsets(elements.size() + 1, 0);
    parallel_for(elements.size(), threads, [&](size_t b, size_t e) {
        for (size_t i = b; i < e; ++i) {
            const Element& el = elements[i];
            if (splines) {
                offsets[i + 1] = spline_segment_samples(bezier_grid(el), config.samples_per_element) +
                                 (last_segment(el) ? 1 : 0);
            } else {
                const auto& t = model.triangles[el.spline];
                offsets[i + 1] = triangle_sample_count(
                    triangle_area(model.vertices[t[0]].position, model.vertices[t[1]].position,
                                  model.vertices[t[2]].position),
                    budget, max_area);
            }
        }
    });
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
    const uint64_t total = offsets.back();
    if (total > config.max_samples || total >= kDropped)
        throw Error(ErrorCode::CapacityExceeded, std::to_string(total) + " samples exceed the budget of " +
                                                     std::to_string(config.max_samples));

    std::vector<SampleNode> samples(total);
    const uint32_t r2 = config.res2, rl = config.leaf_resolution();
    parallel_for(elements.size(), threads, [&](size_t b, size_t e) {
        std::vector<double> ts;
        for (size_t i = b; i < e; ++i) {
            const Element& el = elements[i];
            std::vector<SplinePoint> pts;
            if (splines) {
                const uint64_t n = spline_segment_samples(bezier_grid(el), config.samples_per_element);
                ts.resize(n + (last_segment(el) ? 1 : 0));
                for (uint64_t j = 0; j < ts.size(); ++j) ts[j] = double(j) / double(n);
                pts = subdivide_spline(segment_controls(model, model.splines[el.spline], el.segment), ts);
            } else {
                const auto& t = model.triangles[el.spline];
                pts = sample_triangle({model.vertices[t[0]], model.vertices[t[1]], model.vertices[t[2]]}, budget,
                                      max_area);
            }
            SampleNode* out = samples.data() + offsets[i];
            for (const SplinePoint& p : pts) {
                SampleNode s;
                s.level2_index = kDropped;
                Vec3 pn;
                bool inside = true;
                for (int a = 0; a < 3; ++a) {
                    pn[a] = (p.position[a] - dom.min[a]) * scale;
                    inside = inside && pn[a] >= 0 && pn[a] <= res;
                }
                if (inside) {
                    s = make_sample(p, normalize_position(p.position, dom, res), config);
                    const Int3 v = unlinear_index(s.level2_index, rl);
                    const Int3 blk{v.x / int(r2), v.y / int(r2), v.z / int(r2)};
                    if (blocks.empty(blk)) s.level2_index = kDropped;
                }
                *out++ = s;
            }
        }
    });
    stats.sample_seconds = seconds_since(t0);

    // Stage 3: gather.
    t0 = Clock::now();
    auto spans = gather_samples(samples);
    if (!spans.empty() && spans.back().level2_index == kDropped) {
        stats.dropped_samples = spans.back().count;
        spans.pop_back();
    }
    stats.samples = total - stats.dropped_samples;
    stats.gather_seconds = seconds_since(t0);

    // Stage 4: aggregate and fit per voxel.
    t0 = Clock::now();
    std::vector<VoxelPayload> payloads(spans.size());
    parallel_for(spans.size(), threads, [&](size_t b, size_t e) {
        std::vector<Direction> dirs;
        for (size_t i = b; i < e; ++i) {
            const auto span = std::span(samples).subspan(spans[i].start, spans[i].count);
            const VoxelAggregate agg = aggregate_voxel(span, config);
            VoxelPayload& p = payloads[i];
            for (int c = 0; c < kChannels; ++c) {
                dirs.clear();
                for (const SampleNode& s : span) dirs.push_back(dequantize_direction(c == kTangent ? s.tangent : s.normal));
                p.channels[c] = {Lobe{encode_compact(fit_sggx(dirs)), 1.0f}};
            }
            for (int a = 0; a < 3; ++a) p.axis_density[a] = float(agg.axis_density[a]);
            p.occupancy = float(agg.occupancy);
            p.material_id = agg.material_id;
        }
    });
    for (size_t i = 0; i < spans.size(); ++i)
        volume.set_voxel(unlinear_index(spans[i].level2_index, rl), payloads[i]);
    stats.occupied_voxels = spans.size();
    stats.fit_seconds = seconds_since(t0);
    return {std::move(volume), std::move(blocks), stats};
}

}  // namespace mvx
