// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// SGGX orientation distributions: fitting, projected area, NDF/VNDF sampling,
// the 6-byte compact encoding, interpolation and lattice histograms.
//
// All functions are pure; SggxParams values are immutable once built.

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mvx/vec.hpp"

namespace mvx {

/// Compact SGGX parameters: sigma_* = sqrt(S_ii), r_ij = S_ij / sqrt(S_ii S_jj).
struct SggxParams {
    double sigma_x = 1, sigma_y = 1, sigma_z = 1;
    double r_xy = 0, r_xz = 0, r_yz = 0;

    Sym3 matrix() const;
    static SggxParams from_matrix(const Sym3& s);

    bool operator==(const SggxParams&) const = default;
};

/// Unit direction sample.
using Direction = Vec3;

/// 5x5x5 counts of unit directions over [-1,1]^3; cell = ix + 5 * (iy + 5 * iz).
struct DirectionHistogram {
    static constexpr int kBins = 5;
    static constexpr int kCells = kBins * kBins * kBins;

    std::array<uint32_t, kCells> counts{};
    uint64_t total = 0;

    static constexpr int cell(int ix, int iy, int iz) { return ix + kBins * (iy + kBins * iz); }
    uint32_t at(int ix, int iy, int iz) const { return counts[cell(ix, iy, iz)]; }
    bool operator==(const DirectionHistogram&) const = default;
};

using CompactSggx = std::array<uint8_t, 6>;

inline constexpr double kDegeneracyRatio = 1e-4;
inline constexpr double kDefaultJitter = 1e-2;
inline constexpr uint32_t kHistogramSamples = 5000;

/// Symmetric eigendecomposition, eigenvalues ascending, columns of `vectors`
/// are the matching unit eigenvectors.
struct Eigen3 {
    Vec3 values;
    std::array<Vec3, 3> vectors;
};
Eigen3 eigen_decompose(const Sym3& s);
Sym3 assemble(const Eigen3& e);

/// Second moment (1/n) sum d d^T of the antipodally symmetrized set.
Sym3 second_moment(std::span<const Direction> samples);

/// Second moment of the normalized SGGX NDF with eigenvalues s (in its eigenframe).
Vec3 ndf_moment_eigenvalues(const Vec3& s);

/// SGGX whose NDF reproduces the given second moment (eigenvectors kept,
/// eigenvalues from inverting ndf_moment_eigenvalues), max eigenvalue 1.
SggxParams fit_moment(const Sym3& moment);

SggxParams fit_sggx(std::span<const Direction> samples);

/// Exact second moment of the NDF of s (octant quadrature in its eigenframe).
/// fit_moment inverts it. Throws InvalidParams for the zero matrix.
Sym3 ndf_second_moment(const SggxParams& s);

std::vector<Direction> jitter_degenerate(std::span<const Direction> samples,
                                         double epsilon = kDefaultJitter);

double projected_area(const SggxParams& s, const Vec3& w);

/// Normal distribution D(w) = 1 / (pi sqrt|S| (w^T S^-1 w)^2) of a regularized S.
double ndf_density(const SggxParams& s, const Vec3& w);

/// Samples the whole-sphere NDF. Deterministic in (u1, u2).
Direction sample_ndf(const SggxParams& s, double u1, double u2);

/// Visible normal for `view`; the returned normal lies in view's hemisphere.
Direction sample_vndf(const SggxParams& s, const Vec3& view, double u1, double u2);

CompactSggx encode_compact(const SggxParams& s);
SggxParams decode_compact(const CompactSggx& bytes);

/// Weighted average of the reconstructed matrices, renormalized to max eigenvalue 1.
SggxParams interpolate_sggx(std::span<const std::pair<SggxParams, double>> entries);

DirectionHistogram histogram_of_samples(std::span<const Direction> samples);
DirectionHistogram histogram_of_sggx(const SggxParams& s, uint32_t n = kHistogramSamples);

/// Draws n NDF samples (Hammersley-driven, same stream as histogram_of_sggx).
std::vector<Direction> sample_ndf_set(const SggxParams& s, uint32_t n);

/// Scales S so its largest eigenvalue is one; the zero matrix is returned as is.
SggxParams normalized(const Sym3& s);

}  // namespace mvx
