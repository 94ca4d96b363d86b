// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mvx/sggx.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "mvx/error.hpp"
#include "mvx/sequence.hpp"
#include "mvx/simd.hpp"

namespace mvx {

Sym3 SggxParams::matrix() const {
    return {sigma_x * sigma_x,         sigma_y * sigma_y,         sigma_z * sigma_z,
            r_xy * sigma_x * sigma_y, r_xz * sigma_x * sigma_z, r_yz * sigma_y * sigma_z};
}

SggxParams SggxParams::from_matrix(const Sym3& s) {
    SggxParams p;
    p.sigma_x = std::sqrt(std::max(s.xx, 0.0));
    p.sigma_y = std::sqrt(std::max(s.yy, 0.0));
    p.sigma_z = std::sqrt(std::max(s.zz, 0.0));
    auto corr = [](double off, double a, double b) {
        const double d = a * b;
        return d > 0 ? std::clamp(off / d, -1.0, 1.0) : 0.0;
    };
    p.r_xy = corr(s.xy, p.sigma_x, p.sigma_y);
    p.r_xz = corr(s.xz, p.sigma_x, p.sigma_z);
    p.r_yz = corr(s.yz, p.sigma_y, p.sigma_z);
    return p;
}

Eigen3 eigen_decompose(const Sym3& s) {
    Eigen::Matrix3d m;
    m << s.xx, s.xy, s.xz, s.xy, s.yy, s.yz, s.xz, s.yz, s.zz;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(m);
    Eigen3 e;
    for (int i = 0; i < 3; ++i) {
        e.values[i] = solver.eigenvalues()[i];
        const auto c = solver.eigenvectors().col(i);
        e.vectors[i] = {c[0], c[1], c[2]};
    }
    return e;
}

Sym3 assemble(const Eigen3& e) {
    Sym3 s;
    for (int i = 0; i < 3; ++i) {
        const Vec3& v = e.vectors[i];
        const double l = e.values[i];
        s.xx += l * v.x * v.x;
        s.yy += l * v.y * v.y;
        s.zz += l * v.z * v.z;
        s.xy += l * v.x * v.y;
        s.xz += l * v.x * v.z;
        s.yz += l * v.y * v.z;
    }
    return s;
}

SggxParams normalized(const Sym3& s) {
    const double top = eigen_decompose(s).values[2];
    if (!(top > 0)) return SggxParams::from_matrix(Sym3{});
    SggxParams p = SggxParams::from_matrix(s * (1.0 / top));
    // A diagonal entry equal to the top eigenvalue can round to 1 + ulp.
    p.sigma_x = std::min(p.sigma_x, 1.0);
    p.sigma_y = std::min(p.sigma_y, 1.0);
    p.sigma_z = std::min(p.sigma_z, 1.0);
    return p;
}

namespace {

const double* as_doubles(std::span<const Direction> v) {
    static_assert(sizeof(Direction) == 3 * sizeof(double));
    return reinterpret_cast<const double*>(v.data());
}

void validate_directions(std::span<const Direction> samples) {
    for (const auto& d : samples) {
        if (!(std::fabs(length(d) - 1.0) <= 1e-4))
            throw Error(ErrorCode::NonUnitDirection, "direction norm deviates from 1");
    }
}

// Octant tensor Gauss-Legendre rule in (cos theta, phi); the NDF moment
// integrand is even in every coordinate so one octant suffices, and kinks of
// |M p| for rank-deficient S fall on the octant boundary.
struct OctantRule {
    std::vector<double> qx, qy, qz, w;

    OctantRule() {
        using Rule = boost::math::quadrature::gauss<double, 30>;
        std::vector<double> x, wx;
        for (size_t i = 0; i < Rule::abscissa().size(); ++i) {
            const double a = Rule::abscissa()[i], b = Rule::weights()[i];
            x.push_back(a);
            wx.push_back(b);
            if (a != 0) {
                x.push_back(-a);
                wx.push_back(b);
            }
        }
        for (size_t i = 0; i < x.size(); ++i) {
            const double mu = 0.5 * (x[i] + 1.0);
            const double sin_t2 = 1.0 - mu * mu;
            for (size_t j = 0; j < x.size(); ++j) {
                const double phi = 0.25 * std::numbers::pi * (x[j] + 1.0);
                const double c = std::cos(phi), s = std::sin(phi);
                qx.push_back(sin_t2 * c * c);
                qy.push_back(sin_t2 * s * s);
                qz.push_back(mu * mu);
                w.push_back(wx[i] * wx[j]);
            }
        }
    }
};

const OctantRule& octant_rule() {
    static const OctantRule rule;
    return rule;
}

// Candidate stream for rejection sampling of the NDF: candidates are uniform
// sphere points pushed through M = S^(1/2), accepted with probability
// |M p| / sqrt(lambda_max) (the ellipsoid area element).
struct NdfSampler {
    double m[9] = {};
    double inv_sqrt_max = 0;

    explicit NdfSampler(const SggxParams& params) {
        const Eigen3 e = eigen_decompose(params.matrix());
        const double top = e.values[2];
        if (!(top > 0)) return;
        Eigen3 root = e;
        for (int i = 0; i < 3; ++i) root.values[i] = std::sqrt(std::max(e.values[i], 0.0));
        const Sym3 r = assemble(root);
        const double mm[9] = {r.xx, r.xy, r.xz, r.xy, r.yy, r.yz, r.xz, r.yz, r.zz};
        std::copy(mm, mm + 9, m);
        inv_sqrt_max = 1.0 / std::sqrt(top);
    }

    bool degenerate() const { return inv_sqrt_max == 0; }

    static uint64_t key(double u1, double u2) {
        return splitmix64(std::bit_cast<uint64_t>(u1) ^ splitmix64(std::bit_cast<uint64_t>(u2)));
    }
    static double first_xi(uint64_t k) { return double(k >> 11) * 0x1p-53; }

    bool accept(double len, double xi) const { return xi < len * inv_sqrt_max; }

    Direction transform(const Vec3& p, double& len) const {
        double ox, oy, oz;
        simd::kernels().transform_normalize(m, &p.x, &p.y, &p.z, 1, &ox, &oy, &oz, &len);
        return {ox, oy, oz};
    }

    // Candidates after the first, from a stream keyed by the input pair.
    Direction tail(uint64_t k) const {
        Pcg32 rng(k, 0x5851f42d4c957f2dull);
        Direction last{0, 0, 1};
        for (int attempt = 0; attempt < 64; ++attempt) {
            const double a = rng.next(), b = rng.next(), xi = rng.next();
            double len;
            last = transform(uniform_sphere(a, b), len);
            if (accept(len, xi)) return last;
        }
        return last;
    }

    Direction sample(double u1, double u2) const {
        const Vec3 p = uniform_sphere(u1, u2);
        if (degenerate()) return p;
        const uint64_t k = key(u1, u2);
        double len;
        const Direction d = transform(p, len);
        return accept(len, first_xi(k)) ? d : tail(k);
    }
};

// Hammersley sphere points and first acceptance variates for a given count.
struct HammersleyTable {
    std::vector<double> u1, u2, px, py, pz, xi;
    std::vector<uint64_t> keys;

    explicit HammersleyTable(uint32_t n) {
        for (uint32_t k = 0; k < n; ++k) {
            const auto [a, b] = hammersley(k, n);
            const Vec3 p = uniform_sphere(a, b);
            u1.push_back(a);
            u2.push_back(b);
            px.push_back(p.x);
            py.push_back(p.y);
            pz.push_back(p.z);
            keys.push_back(NdfSampler::key(a, b));
            xi.push_back(NdfSampler::first_xi(keys.back()));
        }
    }
};

std::shared_ptr<const HammersleyTable> hammersley_table(uint32_t n) {
    static std::mutex mutex;
    static std::map<uint32_t, std::shared_ptr<const HammersleyTable>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[n];
    if (!slot) slot = std::make_shared<const HammersleyTable>(n);
    return slot;
}

}  // namespace

Sym3 second_moment(std::span<const Direction> samples) {
    if (samples.empty()) return {};
    double sums[6];
    simd::kernels().second_moment(as_doubles(samples), samples.size(), sums);
    // Each sample contributes d and -d; both add d d^T and the mean is zero.
    const double inv = 1.0 / double(samples.size());
    return {sums[0] * inv, sums[1] * inv, sums[2] * inv, sums[3] * inv, sums[4] * inv, sums[5] * inv};
}

Vec3 ndf_moment_eigenvalues(const Vec3& s) {
    const OctantRule& rule = octant_rule();
    const double sv[3] = {s.x, s.y, s.z};
    double out[4];
    simd::kernels().ndf_moment(sv, rule.qx.data(), rule.qy.data(), rule.qz.data(), rule.w.data(),
                               rule.w.size(), out);
    if (!(out[3] > 0)) return {1.0 / 3, 1.0 / 3, 1.0 / 3};
    return {out[0] / out[3], out[1] / out[3], out[2] / out[3]};
}

namespace {

Vec3 invert_moment(const Vec3& m) {
    const double top = max_component(m);
    Vec3 s = m / top;
    for (int it = 0; it < 200; ++it) {
        const Vec3 f = ndf_moment_eigenvalues(s);
        Vec3 next;
        for (int k = 0; k < 3; ++k)
            next[k] = (m[k] > 0 && f[k] > 0) ? s[k] * std::pow(m[k] / f[k], 1.5) : 0.0;
        next = next / max_component(next);
        double change = 0;
        for (int k = 0; k < 3; ++k) change = std::max(change, std::fabs(next[k] - s[k]));
        s = next;
        if (change < 1e-12) break;
    }
    return s;
}

}  // namespace

SggxParams fit_moment(const Sym3& moment) {
    Eigen3 e = eigen_decompose(moment);
    for (int i = 0; i < 3; ++i) e.values[i] = std::max(e.values[i], 0.0);
    const double total = e.values.x + e.values.y + e.values.z;
    if (!(total > 0)) throw Error(ErrorCode::EmptyInput, "zero second moment");
    e.values = invert_moment(e.values / total);
    return SggxParams::from_matrix(assemble(e));
}

Sym3 ndf_second_moment(const SggxParams& s) {
    Eigen3 e = eigen_decompose(s.matrix());
    for (int i = 0; i < 3; ++i) e.values[i] = std::max(e.values[i], 0.0);
    const double top = max_component(e.values);
    if (!(top > 0)) throw Error(ErrorCode::InvalidParams, "zero SGGX matrix has no distribution");
    e.values = ndf_moment_eigenvalues(e.values / top);
    return assemble(e);
}

std::vector<Direction> jitter_degenerate(std::span<const Direction> samples, double epsilon) {
    if (!(epsilon >= 0)) throw Error(ErrorCode::InvalidParams, "jitter epsilon must be >= 0");
    std::vector<Direction> out(samples.begin(), samples.end());
    if (epsilon == 0) return out;
    // R3 additive-recurrence offsets in the cube [-1,1]^3, scaled so
    // |offset| <= epsilon. Strided subsequences stay equidistributed, so
    // periodic inputs do not pick up a systematic bias.
    constexpr double g = 1.22074408460575947536;
    constexpr double a1 = 1.0 / g, a2 = 1.0 / (g * g), a3 = 1.0 / (g * g * g);
    const double scale = epsilon / std::sqrt(3.0);
    for (size_t i = 0; i < out.size(); ++i) {
        const double k = double(i + 1);
        auto frac = [](double v) { return v - std::floor(v); };
        const Vec3 offset{2.0 * frac(0.5 + a1 * k) - 1.0, 2.0 * frac(0.5 + a2 * k) - 1.0,
                          2.0 * frac(0.5 + a3 * k) - 1.0};
        out[i] = normalize(out[i] + offset * scale);
    }
    return out;
}

SggxParams fit_sggx(std::span<const Direction> samples) {
    if (samples.empty()) throw Error(ErrorCode::EmptyInput, "fit_sggx needs at least one direction");
    validate_directions(samples);

    auto degenerate = [](const Eigen3& e) {
        return !(e.values[0] >= kDegeneracyRatio * e.values[2]);
    };
    Sym3 moment = second_moment(samples);
    Eigen3 e = eigen_decompose(moment);
    if (degenerate(e)) {
        const auto jittered = jitter_degenerate(samples, kDefaultJitter);
        moment = second_moment(jittered);
        e = eigen_decompose(moment);
        if (degenerate(e)) {
            const double floor = kDegeneracyRatio * e.values[2];
            for (int i = 0; i < 3; ++i) e.values[i] = std::max(e.values[i], floor);
            moment = assemble(e);
        }
    }
    return fit_moment(moment);
}

double projected_area(const SggxParams& s, const Vec3& w) {
    return std::sqrt(std::max(s.matrix().quad(w), 0.0));
}

namespace {
constexpr double kRegularization = 1e-10;

Sym3 regularized(const SggxParams& p) {
    Sym3 m = p.matrix();
    m.xx += kRegularization;
    m.yy += kRegularization;
    m.zz += kRegularization;
    return m;
}
}  // namespace

double ndf_density(const SggxParams& s, const Vec3& w) {
    const Sym3 m = regularized(s);
    const double det = m.det();
    // w^T S^-1 w through the adjugate.
    const Sym3 adj{m.yy * m.zz - m.yz * m.yz, m.xx * m.zz - m.xz * m.xz, m.xx * m.yy - m.xy * m.xy,
                   m.xz * m.yz - m.xy * m.zz, m.xy * m.yz - m.xz * m.yy, m.xy * m.xz - m.xx * m.yz};
    const double q = adj.quad(w) / det;
    return 1.0 / (std::numbers::pi * std::sqrt(det) * q * q);
}

Direction sample_ndf(const SggxParams& s, double u1, double u2) {
    return NdfSampler(s).sample(u1, u2);
}

std::vector<Direction> sample_ndf_set(const SggxParams& s, uint32_t n) {
    std::vector<Direction> out(n);
    if (n == 0) return out;
    const NdfSampler sampler(s);
    const auto table = hammersley_table(n);
    if (sampler.degenerate()) {
        for (uint32_t k = 0; k < n; ++k) out[k] = {table->px[k], table->py[k], table->pz[k]};
        return out;
    }
    std::vector<double> ox(n), oy(n), oz(n), len(n);
    simd::kernels().transform_normalize(sampler.m, table->px.data(), table->py.data(),
                                        table->pz.data(), n, ox.data(), oy.data(), oz.data(),
                                        len.data());
    for (uint32_t k = 0; k < n; ++k) {
        out[k] = sampler.accept(len[k], table->xi[k]) ? Direction{ox[k], oy[k], oz[k]}
                                                      : sampler.tail(table->keys[k]);
    }
    return out;
}

Direction sample_vndf(const SggxParams& s, const Vec3& view, double u1, double u2) {
    const Sym3 m = regularized(s);
    const double r = std::sqrt(u1), phi = 2.0 * std::numbers::pi * u2;
    const double u = r * std::cos(phi), v = r * std::sin(phi);
    const double w = std::sqrt(std::max(0.0, 1.0 - u * u - v * v));

    const Vec3& wi = view;
    Vec3 wk, wj;
    orthonormal_basis(wi, wk, wj);
    const Vec3 swj = m.apply(wj), swi = m.apply(wi);
    const double s_jj = dot(wj, swj), s_ii = dot(wi, swi);
    const double s_kj = dot(wk, swj), s_ki = dot(wk, swi), s_ji = dot(wj, swi);

    const double sqrt_det = std::sqrt(std::fabs(m.det()));
    const double inv_sqrt_ii = 1.0 / std::sqrt(s_ii);
    const double tmp = std::sqrt(std::max(s_jj * s_ii - s_ji * s_ji, 1e-300));
    const Vec3 mk{sqrt_det / tmp, 0, 0};
    const Vec3 mj{-inv_sqrt_ii * (s_ki * s_ji - s_kj * s_ii) / tmp, inv_sqrt_ii * tmp, 0};
    const Vec3 mi{inv_sqrt_ii * s_ki, inv_sqrt_ii * s_ji, inv_sqrt_ii * s_ii};
    const Vec3 local = normalize(mk * u + mj * v + mi * w);
    return normalize(wk * local.x + wj * local.y + wi * local.z);
}

namespace {

void validate_params(const SggxParams& s) {
    auto in = [](double v, double lo, double hi) { return v >= lo && v <= hi; };
    if (!in(s.sigma_x, 0, 1) || !in(s.sigma_y, 0, 1) || !in(s.sigma_z, 0, 1) || !in(s.r_xy, -1, 1) ||
        !in(s.r_xz, -1, 1) || !in(s.r_yz, -1, 1))
        throw Error(ErrorCode::InvalidParams, "SGGX parameter out of range: sigma (" + std::to_string(s.sigma_x) + ", " +
                                                  std::to_string(s.sigma_y) + ", " + std::to_string(s.sigma_z) +
                                                  ") r (" + std::to_string(s.r_xy) + ", " + std::to_string(s.r_xz) +
                                                  ", " + std::to_string(s.r_yz) + ")");
}

uint8_t quantize(double v) { return uint8_t(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

CompactSggx encode_compact(const SggxParams& s) {
    validate_params(s);
    return {quantize(s.sigma_x),
            quantize(s.sigma_y),
            quantize(s.sigma_z),
            quantize((s.r_xy + 1.0) * 0.5),
            quantize((s.r_xz + 1.0) * 0.5),
            quantize((s.r_yz + 1.0) * 0.5)};
}

SggxParams decode_compact(const CompactSggx& b) {
    SggxParams p;
    p.sigma_x = b[0] / 255.0;
    p.sigma_y = b[1] / 255.0;
    p.sigma_z = b[2] / 255.0;
    p.r_xy = b[3] / 255.0 * 2.0 - 1.0;
    p.r_xz = b[4] / 255.0 * 2.0 - 1.0;
    p.r_yz = b[5] / 255.0 * 2.0 - 1.0;
    const Sym3 m = p.matrix();
    Eigen3 e = eigen_decompose(m);
    if (e.values[0] >= 0) return p;
    for (int i = 0; i < 3; ++i) e.values[i] = std::max(e.values[i], 0.0);
    // Lifting negative eigenvalues can raise a diagonal entry above 1; a
    // uniform rescale keeps the repaired matrix PSD and encodable.
    Sym3 r = assemble(e);
    const double top = std::max({r.xx, r.yy, r.zz});
    if (top > 1) r = r * (1.0 / top);
    SggxParams q = SggxParams::from_matrix(r);
    q.sigma_x = std::min(q.sigma_x, 1.0);
    q.sigma_y = std::min(q.sigma_y, 1.0);
    q.sigma_z = std::min(q.sigma_z, 1.0);
    return q;
}

SggxParams interpolate_sggx(std::span<const std::pair<SggxParams, double>> entries) {
    double total = 0;
    const SggxParams* single = nullptr;
    int live = 0;
    for (const auto& [s, w] : entries) {
        if (!(w >= 0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidParams, "negative weight");
        if (w > 0) {
            total += w;
            single = &s;
            ++live;
        }
    }
    if (!(total > 0)) throw Error(ErrorCode::AllZeroWeights, "interpolate_sggx weights sum to zero");
    if (live == 1) return *single;
    Sym3 acc;
    for (const auto& [s, w] : entries) {
        if (w > 0) acc = acc + s.matrix() * (w / total);
    }
    return normalized(acc);
}

DirectionHistogram histogram_of_samples(std::span<const Direction> samples) {
    DirectionHistogram h;
    simd::kernels().bin_directions(as_doubles(samples), samples.size(), h.counts.data());
    h.total = samples.size();
    return h;
}

DirectionHistogram histogram_of_sggx(const SggxParams& s, uint32_t n) {
    if (n == 0) throw Error(ErrorCode::InvalidParams, "histogram_of_sggx needs n > 0");
    const auto samples = sample_ndf_set(s, n);
    return histogram_of_samples(samples);
}

}  // namespace mvx
