// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mvx/model_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "mvx/error.hpp"

namespace mvx {
namespace {

[[noreturn]] void fail(size_t line, const std::string& what) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

double to_double(const std::string& tok, size_t line) {
    double v = 0;
    const auto* end = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc() || p != end || !std::isfinite(v)) fail(line, "bad number '" + tok + "'");
    return v;
}

long to_long(const std::string& tok, size_t line) {
    long v = 0;
    const auto* end = tok.data() + tok.size();
    auto [p, ec] = std::from_chars(tok.data(), end, v);
    if (ec != std::errc() || p != end) fail(line, "bad integer '" + tok + "'");
    return v;
}

Vec3 unit(const Vec3& v, size_t line, const char* what) {
    const double l = length(v);
    if (!(l > 0)) fail(line, std::string("zero-length ") + what);
    return v / l;
}

Vec3 perpendicular(const Vec3& t, const Vec3& n) {
    const Vec3 r = t - dot(t, n) * n;
    if (length(r) > 1e-9) return normalize(r);
    Vec3 a, b;
    orthonormal_basis(n, a, b);
    return a;
}

// 1-based or negative OBJ index into a list of `size` entries.
uint32_t resolve(long i, size_t size, size_t line) {
    const long r = i > 0 ? i - 1 : long(size) + i;
    if (i == 0 || r < 0 || size_t(r) >= size) fail(line, "index " + std::to_string(i) + " out of range");
    return uint32_t(r);
}

}  // namespace

InputModel parse_obj(std::istream& in) {
    InputModel m;
    m.kind = InputModel::Kind::Triangles;
    std::vector<Vec3> pos, nrm;
    std::vector<std::array<double, 2>> uv;
    std::map<std::string, uint32_t> mat_ids;
    uint32_t material = 0;
    std::string raw;
    size_t line = 0;
    struct Corner {
        uint32_t v;
        long vt = -1, vn = -1;
    };
    while (std::getline(in, raw)) {
        ++line;
        if (const auto h = raw.find('#'); h != std::string::npos) raw.resize(h);
        std::istringstream ls(raw);
        std::string tag;
        if (!(ls >> tag)) continue;
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tag == "v" || tag == "vn") {
            if (tok.size() < 3) fail(line, tag + " needs three components");
            const Vec3 p{to_double(tok[0], line), to_double(tok[1], line), to_double(tok[2], line)};
            (tag == "v" ? pos : nrm).push_back(p);
        } else if (tag == "vt") {
            if (tok.size() < 2) fail(line, "vt needs two components");
            uv.push_back({to_double(tok[0], line), to_double(tok[1], line)});
        } else if (tag == "usemtl") {
            if (tok.empty()) fail(line, "usemtl needs a name");
            auto [it, fresh] = mat_ids.emplace(tok[0], uint32_t(m.materials.size()));
            if (fresh) m.materials.push_back(tok[0]);
            material = it->second;
        } else if (tag == "f") {
            if (tok.size() < 3) fail(line, "face needs at least three corners");
            std::vector<Corner> corners;
            for (const auto& t : tok) {
                Corner c;
                const auto s1 = t.find('/');
                c.v = resolve(to_long(t.substr(0, s1), line), pos.size(), line);
                if (s1 != std::string::npos) {
                    const auto s2 = t.find('/', s1 + 1);
                    const std::string a = t.substr(s1 + 1, s2 == std::string::npos ? std::string::npos : s2 - s1 - 1);
                    if (!a.empty()) c.vt = resolve(to_long(a, line), uv.size(), line);
                    if (s2 != std::string::npos) c.vn = resolve(to_long(t.substr(s2 + 1), line), nrm.size(), line);
                }
                corners.push_back(c);
            }
            for (size_t k = 1; k + 1 < corners.size(); ++k) {
                const Corner tri[3] = {corners[0], corners[k], corners[k + 1]};
                const Vec3 &a = pos[tri[0].v], &b = pos[tri[1].v], &c = pos[tri[2].v];
                const Vec3 e1 = b - a, e2 = c - a;
                const Vec3 fn = cross(e1, e2);
                const Vec3 face_n = length(fn) > 0 ? normalize(fn) : Vec3{0, 0, 1};
                Vec3 face_t = length(e1) > 0 ? normalize(e1) : Vec3{1, 0, 0};
                if (tri[0].vt >= 0 && tri[1].vt >= 0 && tri[2].vt >= 0) {
                    const auto &t0 = uv[size_t(tri[0].vt)], &t1 = uv[size_t(tri[1].vt)], &t2 = uv[size_t(tri[2].vt)];
                    const double du1 = t1[0] - t0[0], dv1 = t1[1] - t0[1], du2 = t2[0] - t0[0], dv2 = t2[1] - t0[1];
                    const double det = du1 * dv2 - du2 * dv1;
                    if (std::abs(det) > 1e-14) {
                        const Vec3 dpdu = (dv2 * e1 - dv1 * e2) / det;
                        if (length(dpdu) > 0) face_t = normalize(dpdu);
                    }
                }
                std::array<uint32_t, 3> idx;
                for (int j = 0; j < 3; ++j) {
                    ModelVertex v;
                    v.position = pos[tri[j].v];
                    v.normal = tri[j].vn >= 0 ? unit(nrm[size_t(tri[j].vn)], line, "normal") : face_n;
                    v.tangent = perpendicular(face_t, v.normal);
                    v.material = material;
                    idx[j] = uint32_t(m.vertices.size());
                    m.vertices.push_back(v);
                }
                m.triangles.push_back(idx);
            }
        }
        // Other statements (o, g, s, mtllib, l, ...) carry nothing we use.
    }
    if (in.bad()) throw Error(ErrorCode::IoError, "read failure");
    return m;
}

InputModel parse_splines(std::istream& in) {
    InputModel m;
    m.kind = InputModel::Kind::Splines;
    std::vector<std::pair<std::string, size_t>> toks;
    std::string raw;
    size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (const auto h = raw.find('#'); h != std::string::npos) raw.resize(h);
        std::istringstream ls(raw);
        for (std::string t; ls >> t;) toks.emplace_back(t, line);
    }
    if (in.bad()) throw Error(ErrorCode::IoError, "read failure");
    size_t i = 0;
    auto next = [&](const char* what) -> const std::pair<std::string, size_t>& {
        if (i >= toks.size()) fail(toks.empty() ? line : toks.back().second, std::string("missing ") + what);
        return toks[i++];
    };
    while (i < toks.size()) {
        const auto& [tag, ln] = toks[i++];
        if (tag == "radius") {
            const auto& t = next("radius value");
            m.radius = to_double(t.first, t.second);
            if (m.radius < 0) fail(t.second, "radius must be >= 0");
        } else if (tag == "m") {
            m.materials.push_back(next("material name").first);
        } else if (tag == "s") {
            const auto& t = next("node count");
            const long n = to_long(t.first, t.second);
            if (n < 2) fail(t.second, "a spline needs at least two nodes");
            const uint32_t off = uint32_t(m.vertices.size());
            for (long k = 0; k < n; ++k) {
                double f[9];
                size_t l = 0;
                for (double& x : f) {
                    const auto& tk = next("node field");
                    x = to_double(tk.first, tk.second);
                    l = tk.second;
                }
                const auto& mt = next("material id");
                const long mat = to_long(mt.first, mt.second);
                if (mat < 0 || mat > long(UINT32_MAX)) fail(mt.second, "material id out of range");
                ModelVertex v;
                v.position = {f[0], f[1], f[2]};
                v.normal = unit({f[3], f[4], f[5]}, l, "normal");
                v.tangent = unit({f[6], f[7], f[8]}, l, "tangent");
                v.material = uint32_t(mat);
                m.vertices.push_back(v);
            }
            m.splines.emplace_back(off, uint32_t(n));
        } else {
            fail(ln, "unknown statement '" + tag + "'");
        }
    }
    if (!m.materials.empty())
        for (const auto& v : m.vertices)
            if (v.material >= m.materials.size())
                throw Error(ErrorCode::ParseError, "material id " + std::to_string(v.material) + " is not declared");
    return m;
}

InputModel load_model(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error(ErrorCode::IoError, "cannot open " + path);
    const bool obj = path.size() >= 4 && (path.compare(path.size() - 4, 4, ".obj") == 0 ||
                                          path.compare(path.size() - 4, 4, ".OBJ") == 0);
    try {
        return obj ? parse_obj(f) : parse_splines(f);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.message());
    }
}

void write_splines(std::ostream& out, const InputModel& m) {
    const auto prec = out.precision(17);
    if (m.radius > 0) out << "radius " << m.radius << "\n";
    for (const auto& name : m.materials) out << "m " << name << "\n";
    for (const auto& [off, n] : m.splines) {
        out << "s " << n << "\n";
        for (uint32_t k = 0; k < n; ++k) {
            const ModelVertex& v = m.vertices[off + k];
            out << v.position.x << " " << v.position.y << " " << v.position.z << " " << v.normal.x << " "
                << v.normal.y << " " << v.normal.z << " " << v.tangent.x << " " << v.tangent.y << " "
                << v.tangent.z << " " << v.material << "\n";
        }
    }
    out.precision(prec);
}

}  // namespace mvx
