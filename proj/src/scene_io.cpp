// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mvx/scene_io.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mvx/error.hpp"

namespace mvx {

namespace {

[[noreturn]] void fail(size_t line, const std::string& what) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

struct LineReader {
    std::istringstream in;
    size_t line;

    double number(const char* what) {
        double v;
        if (!(in >> v)) fail(line, std::string("expected ") + what);
        return v;
    }
    uint32_t count(const char* what) {
        long long v;
        if (!(in >> v) || v < 0 || v > 0xffffffffll) fail(line, std::string("expected non-negative ") + what);
        return uint32_t(v);
    }
    Vec3 vec(const char* what) {
        const double x = number(what), y = number(what), z = number(what);
        return {x, y, z};
    }
    FlakeMode mode() {
        std::string m;
        in >> m;
        if (m == "specular") return FlakeMode::Specular;
        if (m == "diffuse") return FlakeMode::Diffuse;
        fail(line, "flake mode must be specular or diffuse, got '" + m + "'");
    }
    void end() {
        std::string extra;
        if (in >> extra) fail(line, "unexpected trailing token '" + extra + "'");
    }
};

const char* mode_name(FlakeMode m) { return m == FlakeMode::Specular ? "specular" : "diffuse"; }

}  // namespace

SceneDescription parse_scene(std::istream& in) {
    SceneDescription d;
    std::string text;
    for (size_t line = 1; std::getline(in, text); ++line) {
        if (auto hash = text.find('#'); hash != std::string::npos) text.resize(hash);
        LineReader r{std::istringstream(text), line};
        std::string key;
        if (!(r.in >> key)) continue;
        Scene& s = d.scene;
        if (key == "volume") {
            std::string path;
            if (!(r.in >> std::quoted(path))) fail(line, "expected a volume path");
            d.volumes.push_back(path);
        } else if (key == "sigma") {
            s.sigma_max = r.number("sigma_max");
        } else if (key == "camera") {
            s.camera.position = r.vec("camera position");
            s.camera.target = r.vec("camera target");
            s.camera.up = r.vec("camera up");
            s.camera.fov_degrees = r.number("fov");
            s.camera.width = r.count("width");
            s.camera.height = r.count("height");
        } else if (key == "light") {
            DirectionalLight l;
            l.direction = r.vec("light direction");
            l.radiance = r.vec("light radiance");
            s.lights.push_back(l);
        } else if (key == "environment") {
            s.environment = r.vec("environment radiance");
        } else if (key == "material") {
            const uint32_t id = r.count("material id");
            Material m;
            m.mode = r.mode();
            m.albedo = r.vec("albedo");
            s.materials[id] = m;
        } else if (key == "default_material") {
            s.default_material.mode = r.mode();
            s.default_material.albedo = r.vec("albedo");
        } else {
            fail(line, "unknown directive '" + key + "'");
        }
        r.end();
    }
    return d;
}

void write_scene(std::ostream& out, const SceneDescription& d) {
    const Scene& s = d.scene;
    auto v3 = [&](const Vec3& v) { out << " " << v.x << " " << v.y << " " << v.z; };
    out << std::setprecision(17);
    for (const auto& p : d.volumes) out << "volume " << std::quoted(p) << "\n";
    out << "sigma " << s.sigma_max << "\n";
    out << "camera";
    v3(s.camera.position);
    v3(s.camera.target);
    v3(s.camera.up);
    out << " " << s.camera.fov_degrees << " " << s.camera.width << " " << s.camera.height << "\n";
    for (const auto& l : s.lights) {
        out << "light";
        v3(l.direction);
        v3(l.radiance);
        out << "\n";
    }
    out << "environment";
    v3(s.environment);
    out << "\ndefault_material " << mode_name(s.default_material.mode);
    v3(s.default_material.albedo);
    out << "\n";
    for (const auto& [id, m] : s.materials) {
        out << "material " << id << " " << mode_name(m.mode);
        v3(m.albedo);
        out << "\n";
    }
}

Scene load_scene(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    SceneDescription d;
    try {
        d = parse_scene(in);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.message());
    }
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    for (const auto& v : d.volumes) {
        const std::filesystem::path p(v);
        d.scene.lods.push_back(SparseVolume::read_file((p.is_absolute() ? p : base / p).string()));
    }
    d.scene.validate();
    return std::move(d.scene);
}

}  // namespace mvx
