// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Level-of-detail construction. Each coarse voxel clusters its children's
// SGGX lobes agglomeratively under a sliced Wasserstein distance between
// direction histograms and keeps the dendrogram cut with at most k lobes.
// A naive chain (one interpolated lobe per channel) is provided as baseline.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mvx/sggx.hpp"
#include "mvx/volume.hpp"

namespace mvx {

struct SggxCluster {
    SggxParams distribution;
    /// Aggregate mass, > 0 for live clusters.
    double weight = 1;
    uint32_t member_count = 1;
    /// NDF second moment of all members, mass weighted.
    Sym3 moment;
};

/// Leaf cluster; computes the exact NDF moment of `s`.
SggxCluster make_cluster(const SggxParams& s, double weight);

/// Histogram as normalized masses.
using HistogramMass = std::array<double, DirectionHistogram::kCells>;
HistogramMass normalized_histogram(const DirectionHistogram& h);

inline constexpr uint32_t kDefaultSlices = 32;

/// Slice directions: a Fibonacci lattice on the upper hemisphere,
/// z_i = (i + 1/2) / m, phi_i = 2 pi i / golden ratio.
std::vector<Vec3> slice_directions(uint32_t slices = kDefaultSlices);

/// Mean over slices of the exact 1D W1 between the projected cell masses
/// (bin centres at -0.8, -0.4, 0, 0.4, 0.8 per axis).
double sliced_wasserstein(const HistogramMass& a, const HistogramMass& b, uint32_t slices = kDefaultSlices);

/// Throws EmptyHistogram if either total is zero.
double wasserstein_distance(const DirectionHistogram& h1, const DirectionHistogram& h2,
                            uint32_t slices = kDefaultSlices);

/// Strictly lower-triangular distance matrix, L (L - 1) / 2 entries.
class TriangularMatrix {
public:
    explicit TriangularMatrix(size_t size = 0) : size_(size), entries_(size * (size ? size - 1 : 0) / 2) {}
    size_t size() const { return size_; }
    size_t stored() const { return entries_.size(); }
    /// Symmetric access; i != j.
    double at(size_t i, size_t j) const { return entries_[offset(i, j)]; }
    void set(size_t i, size_t j, double v) { entries_[offset(i, j)] = v; }

private:
    static size_t offset(size_t i, size_t j) {
        if (i < j) std::swap(i, j);
        return i * (i - 1) / 2 + j;
    }
    size_t size_;
    std::vector<double> entries_;
};

TriangularMatrix pairwise_distances(std::span<const SggxCluster> clusters, uint32_t n = kHistogramSamples,
                                    uint32_t slices = kDefaultSlices);

/// Pools two clusters: masses add, moments average by mass, and the
/// distribution is refit to the pooled moment.
SggxCluster merge_pair(const SggxCluster& a, const SggxCluster& b);

/// Mass-weighted mixture of the clusters' normalized NDF histograms.
HistogramMass mixture_histogram(std::span<const SggxCluster> clusters, uint32_t n = kHistogramSamples);

/// Single SGGX fit to the mass-weighted pool of every cluster.
SggxParams naive_aggregate(std::span<const SggxCluster> clusters);

struct MergeRecord {
    uint32_t i = 0, j = 0;  // i < j, indices into the level before the merge
    double distance = 0;
    SggxCluster merged;
};

struct MergeResult {
    /// Survivors in order, then the merged cluster appended.
    std::vector<SggxCluster> clusters;
    MergeRecord record;
};

/// Merges the closest pair; ties go to the lexicographically smallest (i, j).
MergeResult merge_closest(std::span<const SggxCluster> clusters, const TriangularMatrix& distances);

struct Dendrogram {
    std::vector<MergeRecord> merges;
    /// levels[m] is the cluster set after m merges.
    std::vector<std::vector<SggxCluster>> levels;
};

/// Merges until one cluster remains, or until at most `stop_size` remain
/// and the next closest pair is farther apart than `collapse_distance`.
Dendrogram build_dendrogram(std::span<const SggxCluster> initial, uint32_t n = kHistogramSamples,
                            uint32_t slices = kDefaultSlices, size_t stop_size = 1, double collapse_distance = -1);

/// Distances at or below this count as identical distributions.
inline constexpr double kCollapseDistance = 1e-12;

/// Cut with min(initial, k) clusters, further collapsing merges of
/// identical distributions recorded below it.
std::vector<SggxCluster> select_representatives(const Dendrogram& d, uint32_t k);

struct LodConfig {
    enum class Method { Hierarchical, Naive };

    uint32_t levels = 3;
    uint32_t k = 3;
    uint32_t n = kHistogramSamples;
    uint32_t slices = kDefaultSlices;
    Method method = Method::Hierarchical;
    unsigned threads = 1;
};

/// Coarse level values for one coarse voxel, shared by both methods.
struct ChildPayloads {
    std::array<const VoxelPayload*, 8> child{};  // index cx + 2 * (cy + 2 * cz), null if empty
};
std::array<float, 3> aggregate_axis_density(const ChildPayloads& c);
float aggregate_occupancy(const ChildPayloads& c);

/// Returns [leaf, level 1, ..., level `levels`]; level l has res2 >> l voxels
/// per block. Throws InvalidConfig when res2 is not divisible by 2^levels,
/// EmptyInput for an empty leaf volume.
std::vector<SparseVolume> build_lod_chain(const SparseVolume& leaf, const LodConfig& config);

}  // namespace mvx
