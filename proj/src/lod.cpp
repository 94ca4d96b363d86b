// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mvx/lod.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "mvx/error.hpp"
#include "mvx/parallel.hpp"
#include "mvx/simd.hpp"

namespace mvx {
namespace {

constexpr int kCells = DirectionHistogram::kCells;

struct SliceTable {
    std::vector<int32_t> order;  // [k * slices + s]
    std::vector<double> gaps;    // [k * slices + s], k < kCells - 1
};

SliceTable make_table(uint32_t slices) {
    const auto dirs = slice_directions(slices);
    SliceTable t;
    t.order.assign(size_t(kCells) * slices, 0);
    t.gaps.assign(size_t(kCells - 1) * slices, 0);
    std::array<double, kCells> proj;
    std::array<int32_t, kCells> idx;
    for (uint32_t s = 0; s < slices; ++s) {
        for (int c = 0; c < kCells; ++c) {
            const Vec3 centre{-0.8 + 0.4 * (c % 5), -0.8 + 0.4 * ((c / 5) % 5), -0.8 + 0.4 * (c / 25)};
            proj[c] = dot(centre, dirs[s]);
            idx[c] = c;
        }
        std::stable_sort(idx.begin(), idx.end(), [&](int32_t a, int32_t b) { return proj[a] < proj[b]; });
        for (int k = 0; k < kCells; ++k) t.order[size_t(k) * slices + s] = idx[k];
        for (int k = 0; k + 1 < kCells; ++k) t.gaps[size_t(k) * slices + s] = proj[idx[k + 1]] - proj[idx[k]];
    }
    return t;
}

const SliceTable& table(uint32_t slices) {
    static std::mutex mutex;
    static std::map<uint32_t, std::unique_ptr<SliceTable>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[slices];
    if (!slot) slot = std::make_unique<SliceTable>(make_table(slices));
    return *slot;
}

Sym3 mix(const Sym3& a, double wa, const Sym3& b, double wb) { return a * (wa / (wa + wb)) + b * (wb / (wa + wb)); }

HistogramMass cluster_histogram(const SggxCluster& c, uint32_t n) {
    return normalized_histogram(histogram_of_sggx(c.distribution, n));
}

}  // namespace

SggxCluster make_cluster(const SggxParams& s, double weight) {
    if (!(weight > 0) || !std::isfinite(weight)) throw Error(ErrorCode::InvalidParams, "cluster weight must be > 0");
    return {s, weight, 1, ndf_second_moment(s)};
}

HistogramMass normalized_histogram(const DirectionHistogram& h) {
    if (h.total == 0) throw Error(ErrorCode::EmptyHistogram, "histogram has no samples");
    HistogramMass m;
    for (int c = 0; c < kCells; ++c) m[c] = double(h.counts[c]) / double(h.total);
    return m;
}

std::vector<Vec3> slice_directions(uint32_t slices) {
    if (slices == 0) throw Error(ErrorCode::InvalidConfig, "need at least one slice");
    const double golden = (1 + std::sqrt(5.0)) / 2;
    std::vector<Vec3> d(slices);
    for (uint32_t i = 0; i < slices; ++i) {
        const double z = (i + 0.5) / slices, r = std::sqrt(1 - z * z);
        const double phi = 2 * std::numbers::pi * i / golden;
        d[i] = {r * std::cos(phi), r * std::sin(phi), z};
    }
    return d;
}

double sliced_wasserstein(const HistogramMass& a, const HistogramMass& b, uint32_t slices) {
    const SliceTable& t = table(slices);
    HistogramMass diff;
    for (int c = 0; c < kCells; ++c) diff[c] = a[c] - b[c];
    return simd::kernels().sliced_w1(diff.data(), t.order.data(), t.gaps.data(), slices) / slices;
}

double wasserstein_distance(const DirectionHistogram& h1, const DirectionHistogram& h2, uint32_t slices) {
    return sliced_wasserstein(normalized_histogram(h1), normalized_histogram(h2), slices);
}

TriangularMatrix pairwise_distances(std::span<const SggxCluster> clusters, uint32_t n, uint32_t slices) {
    if (clusters.size() < 2) throw Error(ErrorCode::EmptyInput, "need at least two clusters");
    std::vector<HistogramMass> h;
    for (const auto& c : clusters) h.push_back(cluster_histogram(c, n));
    TriangularMatrix m(clusters.size());
    for (size_t i = 1; i < h.size(); ++i)
        for (size_t j = 0; j < i; ++j) m.set(i, j, sliced_wasserstein(h[i], h[j], slices));
    return m;
}

SggxCluster merge_pair(const SggxCluster& a, const SggxCluster& b) {
    SggxCluster m;
    m.weight = a.weight + b.weight;
    m.member_count = a.member_count + b.member_count;
    m.moment = mix(a.moment, a.weight, b.moment, b.weight);
    m.distribution = fit_moment(m.moment);
    return m;
}

HistogramMass mixture_histogram(std::span<const SggxCluster> clusters, uint32_t n) {
    if (clusters.empty()) throw Error(ErrorCode::EmptyInput, "no clusters to mix");
    HistogramMass out{};
    double total = 0;
    for (const auto& c : clusters) total += c.weight;
    for (const auto& c : clusters) {
        const HistogramMass h = cluster_histogram(c, n);
        for (int k = 0; k < kCells; ++k) out[k] += h[k] * (c.weight / total);
    }
    return out;
}

SggxParams naive_aggregate(std::span<const SggxCluster> clusters) {
    if (clusters.empty()) throw Error(ErrorCode::EmptyInput, "no clusters to aggregate");
    Sym3 pooled;
    double total = 0;
    for (const auto& c : clusters) {
        pooled = pooled + c.moment * c.weight;
        total += c.weight;
    }
    return fit_moment(pooled * (1.0 / total));
}

namespace {

std::pair<size_t, size_t> closest_pair(size_t size, auto&& dist) {
    std::pair<size_t, size_t> best{0, 1};
    double d = dist(0, 1);
    for (size_t i = 0; i < size; ++i)
        for (size_t j = i + 1; j < size; ++j)
            if (dist(i, j) < d) {
                d = dist(i, j);
                best = {i, j};
            }
    return best;
}

std::vector<SggxCluster> without_pair(std::span<const SggxCluster> c, size_t i, size_t j, const SggxCluster& merged) {
    std::vector<SggxCluster> out;
    out.reserve(c.size() - 1);
    for (size_t k = 0; k < c.size(); ++k)
        if (k != i && k != j) out.push_back(c[k]);
    out.push_back(merged);
    return out;
}

}  // namespace

MergeResult merge_closest(std::span<const SggxCluster> clusters, const TriangularMatrix& distances) {
    if (clusters.size() < 2) throw Error(ErrorCode::EmptyInput, "need at least two clusters");
    if (distances.size() != clusters.size()) throw Error(ErrorCode::DimensionMismatch, "distance matrix size");
    const auto [i, j] = closest_pair(clusters.size(), [&](size_t a, size_t b) { return distances.at(a, b); });
    MergeResult r;
    r.record = {uint32_t(i), uint32_t(j), distances.at(i, j), merge_pair(clusters[i], clusters[j])};
    r.clusters = without_pair(clusters, i, j, r.record.merged);
    return r;
}

Dendrogram build_dendrogram(std::span<const SggxCluster> initial, uint32_t n, uint32_t slices, size_t stop_size,
                            double collapse_distance) {
    if (initial.empty()) throw Error(ErrorCode::EmptyInput, "dendrogram needs at least one cluster");
    Dendrogram d;
    d.levels.emplace_back(initial.begin(), initial.end());
    std::vector<HistogramMass> hist;
    if (initial.size() > 1)
        for (const auto& c : initial) hist.push_back(cluster_histogram(c, n));
    // Full symmetric matrix, rebuilt by row removal after each merge.
    size_t size = initial.size();
    std::vector<double> dist(size * size, 0);
    for (size_t i = 0; i < size; ++i)
        for (size_t j = 0; j < i; ++j) dist[i * size + j] = dist[j * size + i] = sliced_wasserstein(hist[i], hist[j], slices);

    while (size > 1) {
        const auto [i, j] = closest_pair(size, [&](size_t a, size_t b) { return dist[a * size + b]; });
        const double dij = dist[i * size + j];
        if (size <= stop_size && !(dij <= collapse_distance)) break;
        const auto& cur = d.levels.back();
        MergeRecord rec{uint32_t(i), uint32_t(j), dij, merge_pair(cur[i], cur[j])};
        auto next = without_pair(cur, i, j, rec.merged);

        std::vector<size_t> keep;
        for (size_t k = 0; k < size; ++k)
            if (k != i && k != j) keep.push_back(k);
        std::vector<HistogramMass> next_hist;
        for (size_t k : keep) next_hist.push_back(hist[k]);
        next_hist.push_back(cluster_histogram(rec.merged, n));
        const size_t ns = size - 1;
        std::vector<double> nd(ns * ns, 0);
        for (size_t a = 0; a < keep.size(); ++a)
            for (size_t b = 0; b < keep.size(); ++b) nd[a * ns + b] = dist[keep[a] * size + keep[b]];
        for (size_t a = 0; a < keep.size(); ++a)
            nd[a * ns + ns - 1] = nd[(ns - 1) * ns + a] = sliced_wasserstein(next_hist[a], next_hist.back(), slices);

        hist = std::move(next_hist);
        dist = std::move(nd);
        size = ns;
        d.merges.push_back(std::move(rec));
        d.levels.push_back(std::move(next));
    }
    return d;
}

std::vector<SggxCluster> select_representatives(const Dendrogram& d, uint32_t k) {
    if (k < 1) throw Error(ErrorCode::InvalidConfig, "k must be >= 1");
    const size_t initial = d.levels.front().size();
    size_t m = initial - std::min<size_t>(initial, k);
    m = std::min(m, d.merges.size());
    while (m < d.merges.size() && d.merges[m].distance <= kCollapseDistance) ++m;
    return d.levels[m];
}

std::array<float, 3> aggregate_axis_density(const ChildPayloads& c) {
    std::array<float, 3> out{};
    for (int axis = 0; axis < 3; ++axis) {
        const int u = (axis + 1) % 3, v = (axis + 2) % 3;
        double sum = 0;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                double clear = 1;
                for (int t = 0; t < 2; ++t) {
                    int q[3];
                    q[axis] = t, q[u] = a, q[v] = b;
                    const VoxelPayload* p = c.child[q[0] + 2 * (q[1] + 2 * q[2])];
                    if (p) clear *= 1.0 - double(p->axis_density[axis]);
                }
                sum += 1 - clear;
            }
        out[axis] = float(sum / 4);
    }
    return out;
}

float aggregate_occupancy(const ChildPayloads& c) {
    double sum = 0;
    for (const auto* p : c.child)
        if (p) sum += p->occupancy;
    return float(sum / 8);
}

namespace {

uint32_t dominant_material(const ChildPayloads& c) {
    std::map<uint32_t, double> mass;
    for (const auto* p : c.child)
        if (p) mass[p->material_id] += p->occupancy;
    uint32_t best = 0;
    double top = -1;
    for (const auto& [id, m] : mass)
        if (m > top) {
            top = m;
            best = id;
        }
    return best;
}

VoxelPayload coarse_payload(const ChildPayloads& c, const LodConfig& cfg) {
    VoxelPayload out;
    out.axis_density = aggregate_axis_density(c);
    out.occupancy = aggregate_occupancy(c);
    out.material_id = dominant_material(c);
    for (int ch = 0; ch < kChannels; ++ch) {
        std::vector<std::pair<SggxParams, double>> entries;
        for (const auto* p : c.child) {
            if (!p) continue;
            for (const Lobe& l : p->channels[ch]) {
                const double w = double(p->occupancy) * double(l.weight);
                if (w > 0) entries.emplace_back(decode_compact(l.sggx), w);
            }
        }
        if (entries.empty()) continue;
        double total = 0;
        for (const auto& e : entries) total += e.second;
        if (cfg.method == LodConfig::Method::Naive) {
            out.channels[ch] = {Lobe{encode_compact(interpolate_sggx(entries)), 1.0f}};
            continue;
        }
        std::vector<SggxCluster> leaves;
        for (const auto& [s, w] : entries) leaves.push_back(make_cluster(s, w));
        const Dendrogram d = build_dendrogram(leaves, cfg.n, cfg.slices, cfg.k, kCollapseDistance);
        for (const SggxCluster& r : select_representatives(d, cfg.k))
            out.channels[ch].push_back(Lobe{encode_compact(normalized(r.distribution.matrix())),
                                            float(r.weight / total)});
    }
    return out;
}

}  // namespace

std::vector<SparseVolume> build_lod_chain(const SparseVolume& leaf, const LodConfig& cfg) {
    if (leaf.occupied_count() == 0) throw Error(ErrorCode::EmptyInput, "leaf volume is empty");
    if (cfg.k < 1 || cfg.n < 1 || cfg.slices < 1) throw Error(ErrorCode::InvalidConfig, "k, n and slices must be >= 1");
    if (cfg.levels > 31 || leaf.header().grid.res2 % (1u << cfg.levels) != 0)
        throw Error(ErrorCode::InvalidConfig, "res2 = " + std::to_string(leaf.header().grid.res2) +
                                                  " is not divisible by 2^" + std::to_string(cfg.levels));
    std::vector<SparseVolume> chain{leaf};
    for (uint32_t level = 1; level <= cfg.levels; ++level) {
        const SparseVolume& fine = chain.back();
        VolumeHeader h = fine.header();
        h.grid.res2 /= 2;
        h.level = level;
        h.k = cfg.method == LodConfig::Method::Naive ? 1 : cfg.k;
        SparseVolume coarse(h);
        const uint32_t rf = fine.resolution(), rc = coarse.resolution();

        std::vector<uint32_t> parents;
        parents.reserve(fine.occupied_count());
        for (uint32_t s = 0; s < fine.occupied_count(); ++s) {
            const Int3 i = unlinear_index(fine.slot_index(s), rf);
            parents.push_back(linear_index({i.x / 2, i.y / 2, i.z / 2}, rc));
        }
        std::sort(parents.begin(), parents.end());
        parents.erase(std::unique(parents.begin(), parents.end()), parents.end());

        std::vector<VoxelPayload> out(parents.size());
        parallel_for(parents.size(), cfg.threads, [&](size_t b, size_t e) {
            for (size_t i = b; i < e; ++i) {
                const Int3 p = unlinear_index(parents[i], rc);
                std::array<VoxelPayload, 8> storage;
                ChildPayloads kids;
                for (int c = 0; c < 8; ++c) {
                    const Int3 q{2 * p.x + (c & 1), 2 * p.y + ((c >> 1) & 1), 2 * p.z + (c >> 2)};
                    if (auto slot = fine.find_slot(linear_index(q, rf))) {
                        storage[c] = fine.payload(*slot);
                        kids.child[c] = &storage[c];
                    }
                }
                out[i] = coarse_payload(kids, cfg);
            }
        });
        for (size_t i = 0; i < parents.size(); ++i) coarse.set_voxel(unlinear_index(parents[i], rc), out[i]);
        chain.push_back(std::move(coarse));
    }
    return chain;
}

}  // namespace mvx
