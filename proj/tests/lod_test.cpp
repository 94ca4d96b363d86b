// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "mvx/error.hpp"
#include "mvx/lod.hpp"
#include "oracles.hpp"

namespace mvx {
namespace {

SggxParams delta_along(const Vec3& axis, double eps = 1e-3) {
    const Vec3 a = normalize(axis);
    Sym3 m{eps, eps, eps, 0, 0, 0};
    const double k = 1 - eps;
    m.xx += k * a.x * a.x, m.yy += k * a.y * a.y, m.zz += k * a.z * a.z;
    m.xy += k * a.x * a.y, m.xz += k * a.x * a.z, m.yz += k * a.y * a.z;
    return SggxParams::from_matrix(m);
}

DirectionHistogram single_cell(int ix, int iy, int iz, uint32_t count = 10) {
    DirectionHistogram h;
    h.counts[DirectionHistogram::cell(ix, iy, iz)] = count;
    h.total = count;
    return h;
}

Vec3 centre(int c) { return {-0.8 + 0.4 * (c % 5), -0.8 + 0.4 * ((c / 5) % 5), -0.8 + 0.4 * (c / 25)}; }

// Test-side copy of the documented slice set.
std::vector<Vec3> fibonacci_hemisphere(int m) {
    std::vector<Vec3> d;
    const double golden = (1 + std::sqrt(5.0)) / 2;
    for (int i = 0; i < m; ++i) {
        const double z = (i + 0.5) / m, r = std::sqrt(1 - z * z), phi = 2 * std::numbers::pi * i / golden;
        d.push_back({r * std::cos(phi), r * std::sin(phi), z});
    }
    return d;
}

double brute_sliced(const HistogramMass& a, const HistogramMass& b) {
    double total = 0;
    const auto dirs = fibonacci_hemisphere(32);
    for (const Vec3& u : dirs) {
        std::vector<std::pair<double, double>> pa, pb;
        for (int c = 0; c < 125; ++c) {
            if (a[c] > 0) pa.emplace_back(dot(centre(c), u), a[c]);
            if (b[c] > 0) pb.emplace_back(dot(centre(c), u), b[c]);
        }
        total += test::w1_quantile(pa, pb);
    }
    return total / double(dirs.size());
}

HistogramMass random_mass(std::mt19937_64& rng, int support) {
    HistogramMass m{};
    double total = 0;
    for (int i = 0; i < support; ++i) {
        const double w = 1 + double(rng() % 9);
        m[rng() % 125] += w;
        total += w;
    }
    for (double& x : m) x /= total;
    return m;
}

ErrorCode code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::IoError;
}

TEST(Wasserstein, IdentityAndSymmetry) {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 50; ++t) {
        DirectionHistogram a, b;
        for (int i = 0; i < 40; ++i) {
            ++a.counts[rng() % 125], ++a.total;
            ++b.counts[rng() % 125], ++b.total;
        }
        EXPECT_EQ(wasserstein_distance(a, a), 0.0);
        EXPECT_EQ(wasserstein_distance(a, b), wasserstein_distance(b, a));
        EXPECT_GT(wasserstein_distance(a, b), 0.0);
    }
}

TEST(Wasserstein, AdjacentDeltasAlongX) {
    const auto dirs = fibonacci_hemisphere(32);
    double mean_abs = 0;
    for (const Vec3& u : dirs) mean_abs += std::fabs(u.x);
    mean_abs /= 32;
    EXPECT_NEAR(wasserstein_distance(single_cell(1, 2, 3), single_cell(2, 2, 3, 7)), 0.4 * mean_abs, 1e-15);
}

TEST(Wasserstein, DirectionSetMatchesDocumentation) {
    const auto a = slice_directions(32), b = fibonacci_hemisphere(32);
    for (int i = 0; i < 32; ++i) EXPECT_EQ(a[size_t(i)], b[size_t(i)]);
}

TEST(Wasserstein, MatchesPerSliceExactTransport) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 100; ++t) {
        const auto a = random_mass(rng, 1 + int(rng() % 20)), b = random_mass(rng, 1 + int(rng() % 20));
        EXPECT_NEAR(sliced_wasserstein(a, b), brute_sliced(a, b), 1e-12);
    }
}

TEST(Wasserstein, LowerBoundsExactTransport) {
    // Projections are 1-Lipschitz, so every slice under-estimates full 3D
    // transport; collinear deltas along a slice-free axis stay proportional.
    std::mt19937_64 rng(3);
    for (int t = 0; t < 60; ++t) {
        std::vector<std::pair<Vec3, int>> pa, pb;
        DirectionHistogram ha, hb;
        int ta = 0;
        for (int i = 0; i < 4; ++i) {
            const int c = int(rng() % 125), w = 1 + int(rng() % 5);
            pa.emplace_back(centre(c), w);
            ha.counts[c] += uint32_t(w);
            ta += w;
        }
        int tb = 0;
        for (int i = 0; i < 3; ++i) {
            const int c = int(rng() % 125), w = (i == 2) ? ta - tb : 1 + int(rng() % std::max(1, ta / 3));
            if (w <= 0) continue;
            pb.emplace_back(centre(c), w);
            hb.counts[c] += uint32_t(w);
            tb += w;
        }
        ha.total = uint64_t(ta), hb.total = uint64_t(tb);
        ASSERT_EQ(ta, tb);
        const double exact = test::exact_emd(pa, pb) / ta;
        EXPECT_LE(wasserstein_distance(ha, hb), exact + 1e-12);
    }
}

TEST(Wasserstein, EmptyHistogramThrows) {
    EXPECT_EQ(code_of([] { (void)wasserstein_distance(DirectionHistogram{}, single_cell(0, 0, 0)); }),
              ErrorCode::EmptyHistogram);
}

TEST(Pairwise, Examples) {
    const auto x = make_cluster(delta_along({1, 0, 0}), 1), y = make_cluster(delta_along({0, 1, 0}), 1);
    const std::vector<SggxCluster> same{x, x};
    EXPECT_EQ(pairwise_distances(same).at(1, 0), 0.0);
    std::vector<SggxCluster> five(5, x);
    EXPECT_EQ(pairwise_distances(five).stored(), 10u);
    const std::vector<SggxCluster> xyx{x, y, x};
    const auto d = pairwise_distances(xyx);
    EXPECT_EQ(d.at(2, 0), 0.0);
    EXPECT_GT(d.at(1, 0), 0.1);
    EXPECT_GT(d.at(2, 1), 0.1);
    EXPECT_EQ(d.at(0, 1), d.at(1, 0));
}

TEST(Merge, IdenticalPairMergesFirst) {
    const auto a = make_cluster(SggxParams{1, 0.5, 0.3, 0.2, 0, 0.1}, 1.5);
    const auto c = make_cluster(delta_along({0, 0, 1}), 1);
    const std::vector<SggxCluster> set{a, a, c};
    const auto r = merge_closest(set, pairwise_distances(set));
    EXPECT_EQ(r.record.i, 0u);
    EXPECT_EQ(r.record.j, 1u);
    ASSERT_EQ(r.clusters.size(), 2u);
    const Sym3 got = r.record.merged.distribution.matrix(), want = normalized(a.distribution.matrix()).matrix();
    for (double e : {got.xx - want.xx, got.yy - want.yy, got.zz - want.zz, got.xy - want.xy, got.xz - want.xz,
                     got.yz - want.yz})
        EXPECT_NEAR(e, 0, 1e-9);
    EXPECT_EQ(r.record.merged.weight, 3.0);
    EXPECT_EQ(r.record.merged.member_count, 2u);
}

TEST(Merge, TwoClustersBecomeOne) {
    const std::vector<SggxCluster> set{make_cluster(delta_along({1, 1, 0}), 1), make_cluster(SggxParams{}, 2)};
    const auto r = merge_closest(set, pairwise_distances(set));
    EXPECT_EQ(r.clusters.size(), 1u);
    EXPECT_EQ(r.clusters[0].weight, 3.0);
}

TEST(Merge, PerpendicularDeltasGiveEqualInPlaneAreas) {
    const auto x = make_cluster(delta_along({1, 0, 0}, 0), 1), y = make_cluster(delta_along({0, 1, 0}, 0), 1);
    const std::vector<SggxCluster> set{x, y};
    const SggxParams m = merge_closest(set, pairwise_distances(set)).record.merged.distribution;
    EXPECT_NEAR(projected_area(m, {1, 0, 0}), projected_area(m, {0, 1, 0}), 1e-6);
    EXPECT_LT(projected_area(m, {0, 0, 1}), 0.05);
    // Oracle: fit to the concatenated sample sets.
    std::vector<Direction> pooled;
    for (int i = 0; i < 20000; ++i) pooled.push_back(i % 2 ? Vec3{1, 0, 0} : Vec3{0, 1, 0});
    const SggxParams f = fit_sggx(pooled);
    for (const Vec3& w : {Vec3{1, 0, 0}, Vec3{0, 1, 0}, normalize(Vec3{1, 1, 0})})
        EXPECT_NEAR(projected_area(m, w), projected_area(f, w), 0.02);
}

TEST(Dendrogram, Counts) {
    std::mt19937_64 rng(4);
    std::vector<SggxCluster> eight;
    for (int i = 0; i < 8; ++i) eight.push_back(make_cluster(delta_along(test::random_unit(rng), 0.05), 1 + i));
    const Dendrogram d = build_dendrogram(eight);
    EXPECT_EQ(d.merges.size(), 7u);
    ASSERT_EQ(d.levels.size(), 8u);
    for (size_t m = 0; m < d.levels.size(); ++m) EXPECT_EQ(d.levels[m].size(), 8 - m);
    const std::vector<SggxCluster> one{eight[0]};
    EXPECT_TRUE(build_dendrogram(one).merges.empty());
}

TEST(Dendrogram, IdenticalPairsMergeFirst) {
    const auto a = make_cluster(delta_along({1, 0, 0}, 0.02), 1), b = make_cluster(delta_along({0, 1, 1}, 0.2), 1);
    const std::vector<SggxCluster> set{a, b, a, b};
    const Dendrogram d = build_dendrogram(set);
    ASSERT_EQ(d.merges.size(), 3u);
    EXPECT_EQ(d.merges[0].distance, 0.0);
    EXPECT_EQ((std::pair{d.merges[0].i, d.merges[0].j}), (std::pair{0u, 2u}));
    // Survivors are [b, b, aa]; the remaining identical pair goes next.
    EXPECT_EQ((std::pair{d.merges[1].i, d.merges[1].j}), (std::pair{0u, 1u}));
    EXPECT_LT(d.merges[1].distance, 1e-12);
}

TEST(Dendrogram, Deterministic) {
    std::mt19937_64 rng(5);
    std::vector<SggxCluster> set;
    for (int i = 0; i < 10; ++i) set.push_back(make_cluster(delta_along(test::random_unit(rng), 0.1), 1));
    const auto a = build_dendrogram(set), b = build_dendrogram(set);
    for (size_t m = 0; m < a.merges.size(); ++m) {
        EXPECT_EQ(a.merges[m].i, b.merges[m].i);
        EXPECT_EQ(a.merges[m].j, b.merges[m].j);
        EXPECT_EQ(a.merges[m].merged.distribution, b.merges[m].merged.distribution);
    }
}

std::vector<SggxCluster> random_set(std::mt19937_64& rng, int modes, int count) {
    std::vector<Vec3> axes;
    for (int m = 0; m < modes; ++m) axes.push_back(test::random_unit(rng));
    std::uniform_real_distribution<double> u(0.2, 3);
    std::vector<SggxCluster> out;
    for (int i = 0; i < count; ++i) {
        const Vec3 jitter = test::random_unit(rng) * 0.05;
        out.push_back(make_cluster(delta_along(axes[size_t(i % modes)] + jitter, 0.01 + 0.05 * u(rng) / 3), u(rng)));
    }
    return out;
}

TEST(Representatives, Cuts) {
    std::mt19937_64 rng(6);
    const auto set = random_set(rng, 3, 6);
    const Dendrogram d = build_dendrogram(set);
    const auto all = select_representatives(d, 10);
    ASSERT_EQ(all.size(), 6u);
    for (size_t i = 0; i < 6; ++i) EXPECT_EQ(all[i].distribution, set[i].distribution);
    const auto root = select_representatives(d, 1);
    ASSERT_EQ(root.size(), 1u);
    EXPECT_EQ(root[0].distribution, d.levels.back()[0].distribution);
    const Sym3 r = root[0].distribution.matrix(), n = naive_aggregate(set).matrix();
    for (double e : {r.xx - n.xx, r.yy - n.yy, r.zz - n.zz, r.xy - n.xy, r.xz - n.xz, r.yz - n.yz})
        EXPECT_NEAR(e, 0, 1e-9);
}

TEST(Representatives, PerpendicularDeltasKept) {
    const std::vector<SggxCluster> set{make_cluster(delta_along({1, 0, 0}), 1), make_cluster(delta_along({0, 1, 0}), 1),
                                       make_cluster(delta_along({0, 0, 1}), 1)};
    const auto reps = select_representatives(build_dendrogram(set), 3);
    ASSERT_EQ(reps.size(), 3u);
    for (size_t i = 0; i < 3; ++i) EXPECT_EQ(reps[i].distribution, set[i].distribution);
}

TEST(Representatives, WeightConservedAtEveryLevel) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 20; ++t) {
        const auto set = random_set(rng, 1 + int(rng() % 3), 2 + int(rng() % 10));
        double w0 = 0;
        for (const auto& c : set) w0 += c.weight;
        const Dendrogram d = build_dendrogram(set);
        for (size_t m = 0; m < d.levels.size(); ++m) {
            double w = 0;
            for (const auto& c : d.levels[m]) w += c.weight;
            EXPECT_NEAR(w, w0, 1e-6 * w0);
            if (m > 0) {
                EXPECT_EQ(d.levels[m].size() + 1, d.levels[m - 1].size());
            }
        }
    }
}

TEST(Representatives, ErrorNonIncreasingInK) {
    // Merging two near-identical lobes can move the mixture histogram by a
    // few 1e-4 either way (5000-sample histograms), so monotonicity is
    // checked above that noise floor.
    constexpr double kNoise = 1e-3;
    std::mt19937_64 rng(8);
    for (int t = 0; t < 25; ++t) {
        const auto set = random_set(rng, 2 + int(rng() % 3), 8);
        const HistogramMass pooled = mixture_histogram(set);
        const Dendrogram d = build_dendrogram(set);
        std::vector<double> err;
        for (uint32_t k = 1; k <= 8; ++k)
            err.push_back(sliced_wasserstein(mixture_histogram(select_representatives(d, k)), pooled));
        for (size_t k = 1; k < err.size(); ++k)
            for (size_t j = 0; j < k; ++j) EXPECT_LE(err[k], err[j] + kNoise) << "trial " << t << " k " << k + 1;
        EXPECT_EQ(err.back(), 0.0);
    }
}

TEST(Representatives, HierarchicalBeatsNaiveOnMultiModalSets) {
    std::mt19937_64 rng(9);
    for (int t = 0; t < 20; ++t) {
        const auto set = random_set(rng, 2 + t % 2, 8);
        const HistogramMass pooled = mixture_histogram(set);
        const double ours = sliced_wasserstein(mixture_histogram(select_representatives(build_dendrogram(set), 3)), pooled);
        const std::vector<SggxCluster> naive{make_cluster(naive_aggregate(set), 1)};
        EXPECT_LT(ours, sliced_wasserstein(mixture_histogram(naive), pooled)) << t;
    }
}

// LoD chain

VolumeHeader header(uint32_t res2 = 4) {
    VolumeHeader h;
    h.grid.res1 = 2, h.grid.res2 = res2, h.grid.res3 = 4;
    h.k = 3;
    return h;
}

VoxelPayload payload(const SggxParams& t, const SggxParams& n, float occ = 1, std::array<float, 3> d = {1, 1, 1}) {
    VoxelPayload p;
    p.channels[kTangent] = {Lobe{encode_compact(t), 1}};
    p.channels[kNormal] = {Lobe{encode_compact(n), 1}};
    p.occupancy = occ;
    p.axis_density = d;
    return p;
}

TEST(LodChain, UniformVolumeKeepsSingleLobe) {
    SparseVolume leaf(header());
    const SggxParams s = decode_compact(encode_compact(SggxParams{0.9, 0.4, 0.2, 0.3, -0.1, 0.05}));
    for (int z = 0; z < 8; ++z)
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) leaf.set_voxel({x, y, z}, payload(s, s));
    LodConfig cfg;
    cfg.levels = 2;
    const auto chain = build_lod_chain(leaf, cfg);
    ASSERT_EQ(chain.size(), 3u);
    EXPECT_EQ(chain[1].resolution(), 4u);
    EXPECT_EQ(chain[2].resolution(), 2u);
    for (size_t l = 1; l < chain.size(); ++l)
        for (uint32_t i = 0; i < chain[l].occupied_count(); ++i) {
            const auto p = chain[l].payload(i);
            for (const auto& ch : p.channels) {
                ASSERT_EQ(ch.size(), 1u);
                EXPECT_EQ(ch[0].weight, 1.0f);
                const Sym3 a = decode_compact(ch[0].sggx).matrix(), b = normalized(s.matrix()).matrix();
                for (double e : {a.xx - b.xx, a.yy - b.yy, a.zz - b.zz, a.xy - b.xy, a.xz - b.xz, a.yz - b.yz})
                    EXPECT_NEAR(e, 0, 2.0 / 255);
            }
            EXPECT_EQ(p.occupancy, 1.0f);
            EXPECT_EQ(p.axis_density, (std::array<float, 3>{1, 1, 1}));
        }
}

TEST(LodChain, CheckerboardKeepsBothOrientations) {
    SparseVolume leaf(header());
    const SggxParams x = delta_along({1, 0, 0}), y = delta_along({0, 1, 0});
    for (int z = 0; z < 8; ++z)
        for (int yy = 0; yy < 8; ++yy)
            for (int xx = 0; xx < 8; ++xx) {
                const SggxParams& s = (xx + yy + z) % 2 ? x : y;
                leaf.set_voxel({xx, yy, z}, payload(s, s));
            }
    LodConfig cfg;
    cfg.levels = 1;
    const auto ours = build_lod_chain(leaf, cfg);
    cfg.method = LodConfig::Method::Naive;
    const auto naive = build_lod_chain(leaf, cfg);
    const std::vector<SggxCluster> leaves{make_cluster(decode_compact(encode_compact(x)), 1),
                                          make_cluster(decode_compact(encode_compact(y)), 1)};
    const HistogramMass truth = mixture_histogram(leaves);
    for (uint32_t i = 0; i < ours[1].occupied_count(); ++i) {
        const auto p = ours[1].payload(i);
        ASSERT_EQ(p.channels[kNormal].size(), 2u);
        std::vector<SggxCluster> reps;
        for (const Lobe& l : p.channels[kNormal]) {
            EXPECT_NEAR(l.weight, 0.5f, 1e-6);
            reps.push_back(make_cluster(decode_compact(l.sggx), l.weight));
        }
        const auto q = naive[1].get_voxel(unlinear_index(ours[1].slot_index(i), 4));
        ASSERT_TRUE(q.has_value());
        ASSERT_EQ(q->channels[kNormal].size(), 1u);
        const std::vector<SggxCluster> blended{make_cluster(decode_compact(q->channels[kNormal][0].sggx), 1)};
        EXPECT_LT(sliced_wasserstein(mixture_histogram(reps), truth),
                  sliced_wasserstein(mixture_histogram(blended), truth));
    }
}

TEST(LodChain, SlabDensities) {
    // Solid slab normal to z, one leaf layer thick, in a res 8 grid.
    SparseVolume leaf(header());
    const SggxParams z = delta_along({0, 0, 1});
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) leaf.set_voxel({x, y, 2}, payload(z, z));
    LodConfig cfg;
    cfg.levels = 2;
    const auto chain = build_lod_chain(leaf, cfg);
    // Level 1 from binary leaf coverage: enumeration gives the slab's
    // thickness fraction (one of two layers) on the edge-on planes.
    for (uint32_t i = 0; i < chain[1].occupied_count(); ++i) {
        const auto p = chain[1].payload(i);
        EXPECT_EQ(p.axis_density, (std::array<float, 3>{0.5f, 0.5f, 1.0f}));
        EXPECT_EQ(p.occupancy, 0.5f);
    }
    // Level 2 composes fractional children as independent coverage:
    // two half-covered cells in a column give 1 - 0.5^2, over half the columns.
    for (uint32_t i = 0; i < chain[2].occupied_count(); ++i) {
        const auto p = chain[2].payload(i);
        EXPECT_EQ(p.axis_density, (std::array<float, 3>{0.375f, 0.375f, 1.0f}));
        EXPECT_EQ(p.occupancy, 0.25f);
    }
}

TEST(LodChain, Errors) {
    SparseVolume empty(header());
    EXPECT_EQ(code_of([&] { (void)build_lod_chain(empty, LodConfig{}); }), ErrorCode::EmptyInput);
    SparseVolume leaf(header(4));
    leaf.set_voxel({0, 0, 0}, payload(SggxParams{}, SggxParams{}));
    LodConfig cfg;
    cfg.levels = 3;
    EXPECT_EQ(code_of([&] { (void)build_lod_chain(leaf, cfg); }), ErrorCode::InvalidConfig);
}

TEST(LodChain, ThreadCountInvariant) {
    SparseVolume leaf(header(8));
    std::mt19937_64 rng(10);
    for (int i = 0; i < 300; ++i) {
        const Int3 v{int(rng() % 16), int(rng() % 16), int(rng() % 16)};
        const auto a = delta_along(test::random_unit(rng), 0.05), b = delta_along(test::random_unit(rng), 0.2);
        leaf.set_voxel(v, payload(a, b, float(0.1 + (rng() % 9) / 10.0)));
    }
    LodConfig cfg;
    cfg.levels = 3;
    cfg.threads = 1;
    const auto a = build_lod_chain(leaf, cfg);
    cfg.threads = 4;
    const auto b = build_lod_chain(leaf, cfg);
    for (size_t l = 0; l < a.size(); ++l) EXPECT_EQ(a[l].serialize(), b[l].serialize());
}

}  // namespace
}  // namespace mvx
