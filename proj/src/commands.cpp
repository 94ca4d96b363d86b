// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mvx/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "mvx/error.hpp"
#include "mvx/image.hpp"
#include "mvx/model_io.hpp"
#include "mvx/scene_io.hpp"
#include "mvx/voxelizer.hpp"

namespace mvx {

namespace fs = std::filesystem;

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::IoError:
            return kExitIo;
        case ErrorCode::ParseError:
        case ErrorCode::BadMagic:
        case ErrorCode::VersionMismatch:
        case ErrorCode::TruncatedStream:
        case ErrorCode::ChecksumMismatch:
        case ErrorCode::CorruptStream:
            return kExitMalformed;
        case ErrorCode::InvalidConfig:
        case ErrorCode::InvalidParams:
            return kExitInvalid;
        case ErrorCode::EmptyInput:
        case ErrorCode::NonUnitDirection:
        case ErrorCode::AllZeroWeights:
        case ErrorCode::EmptyModel:
        case ErrorCode::DegenerateBounds:
        case ErrorCode::DegenerateSegment:
        case ErrorCode::EmptyHistogram:
        case ErrorCode::OutOfBounds:
            return kExitGeometry;
        case ErrorCode::DimensionMismatch:
            return kExitDimension;
        case ErrorCode::CapacityExceeded:
            return kExitCapacity;
    }
    return kExitFailure;
}

namespace {

using Clock = std::chrono::steady_clock;

template <class F>
double timed(F&& f) {
    const auto t0 = Clock::now();
    f();
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    const size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Collects per-stage times of the timed repetitions.
class StageTimes {
public:
    void add(const std::string& stage, double seconds) {
        auto it = std::find_if(stages_.begin(), stages_.end(), [&](const auto& s) { return s.first == stage; });
        if (it == stages_.end()) {
            stages_.push_back({stage, {}});
            it = std::prev(stages_.end());
        }
        it->second.push_back(seconds);
    }
    TimingReport report(const std::string& command, uint32_t reps) const {
        TimingReport r{command, {}, reps};
        for (const auto& [name, v] : stages_) r.stages.push_back({name, median(v)});
        return r;
    }

private:
    std::vector<std::pair<std::string, std::vector<double>>> stages_;
};

void require_file(const std::string& path, const char* what) {
    if (path.empty()) throw Error(ErrorCode::InvalidConfig, std::string("missing ") + what + " path");
    std::error_code ec;
    if (!fs::is_regular_file(path, ec)) throw Error(ErrorCode::IoError, std::string(what) + " not found: " + path);
}

void require_output_dir(const std::string& path) {
    if (path.empty()) throw Error(ErrorCode::InvalidConfig, "missing output path");
    const fs::path parent = fs::path(path).parent_path();
    std::error_code ec;
    if (!parent.empty() && !fs::is_directory(parent, ec))
        throw Error(ErrorCode::IoError, "output directory does not exist: " + parent.string());
}

/// Output written under a temporary name and renamed on commit, so failed
/// commands leave no partial files behind.
class PendingFile {
public:
    explicit PendingFile(std::string path) : path_(std::move(path)), tmp_(path_ + ".part") {}
    PendingFile(const PendingFile&) = delete;
    PendingFile(PendingFile&& o) noexcept : path_(std::move(o.path_)), tmp_(std::move(o.tmp_)), done_(o.done_) {
        o.done_ = true;
    }
    ~PendingFile() {
        if (!done_) {
            std::error_code ec;
            fs::remove(tmp_, ec);
        }
    }
    const std::string& tmp() const { return tmp_; }
    void write(const std::vector<uint8_t>& bytes) const {
        std::ofstream out(tmp_, std::ios::binary);
        if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp_);
        out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
        if (!out) throw Error(ErrorCode::IoError, "write failed: " + tmp_);
    }
    void commit() {
        std::error_code ec;
        fs::rename(tmp_, path_, ec);
        if (ec) throw Error(ErrorCode::IoError, "cannot rename " + tmp_ + " to " + path_ + ": " + ec.message());
        done_ = true;
    }

private:
    std::string path_, tmp_;
    bool done_ = false;
};

void commit_all(std::vector<PendingFile>& files) {
    for (auto& f : files) f.commit();
}

std::string level_path(const std::string& prefix, uint32_t level) {
    return prefix + ".L" + std::to_string(level) + ".mvox";
}

std::string format_metric(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream s;
    s << std::setprecision(9) << v;
    return s.str();
}

const char* method_name(LodConfig::Method m) { return m == LodConfig::Method::Naive ? "naive" : "hierarchical"; }

// Resolved values of the options the command reads, as key=value lines.
void print_config(const RunConfig& c, uint32_t threads, std::ostream& out) {
    const std::string& cmd = c.command;
    auto kv = [&](const char* key, const auto& value) { out << key << "=" << value << "\n"; };
    auto vec = [](const Vec3& v) {
        std::ostringstream s;
        s << v.x << " " << v.y << " " << v.z;
        return s.str();
    };
    out << "# effective configuration\n";
    kv("command", cmd);
    kv("threads", threads);
    kv("input", c.input);
    if (cmd == "dump") return;
    kv("output", c.output);
    if (cmd == "voxelize" || cmd == "pipeline") {
        kv("res1", c.grid.res1);
        kv("res2", c.grid.res2);
        kv("res3", c.grid.res3);
        kv("samples-per-element", c.grid.samples_per_element);
        kv("delta", c.grid.delta);
        kv("max-samples", c.grid.max_samples);
        kv("k", c.k);
        if (c.domain) kv("domain", vec(c.domain->min) + " " + vec(c.domain->max));
    }
    if (cmd == "build-lod" || cmd == "pipeline") {
        kv("levels", c.lod.levels);
        kv("lod-k", c.lod.k);
        kv("histogram-samples", c.lod.n);
        kv("slices", c.lod.slices);
        if (cmd == "build-lod") kv("method", method_name(c.lod.method));
    }
    if (cmd == "render" || cmd == "pipeline") {
        kv("spp", c.render.spp);
        kv("bounces", c.render.max_bounces);
        kv("seed", c.render.seed);
        if (c.width) kv("width", c.width);
        if (c.height) kv("height", c.height);
        if (cmd == "render") kv("level", c.render.fixed_level);
        for (const auto& v : c.volumes) kv("volume", v);
    }
    if (cmd == "pipeline") {
        if (!c.scene_template.empty()) kv("scene", c.scene_template);
        kv("optical-depth", c.optical_depth);
        kv("flake", c.flake == FlakeMode::Diffuse ? "diffuse" : "specular");
        kv("albedo", vec(c.albedo));
    }
    if (cmd == "compare") {
        kv("reference", c.reference);
        kv("ours", c.ours);
        if (!c.naive.empty()) kv("naive", c.naive);
        if (!c.mask.empty()) kv("mask", c.mask);
        kv("lod", c.lod_level);
        kv("append", c.append ? "true" : "false");
        return;
    }
    kv("repeat", c.repeat);
    kv("warmup", c.warmup);
    if (!c.timing_csv.empty()) kv("timing-csv", c.timing_csv);
}

uint32_t reps_of(const RunConfig& c) { return std::max(1u, c.repeat); }

}  // namespace

void TimingReport::print(std::ostream& out) const {
    out << "timing (" << command << ", median of " << repetitions << ")\n";
    for (const auto& [stage, s] : stages) out << "  " << std::left << std::setw(10) << stage << std::fixed
                                              << std::setprecision(6) << s << " s\n";
    out << std::defaultfloat;
}

void TimingReport::write_csv(const std::string& path) const {
    PendingFile f(path);
    std::ostringstream s;
    s << "command,stage,median_seconds,repetitions\n";
    for (const auto& [stage, sec] : stages) s << command << "," << stage << "," << std::setprecision(9) << sec << ","
                                              << repetitions << "\n";
    const std::string text = s.str();
    f.write(std::vector<uint8_t>(text.begin(), text.end()));
    f.commit();
}

// ---------------------------------------------------------------- voxelize

TimingReport cmd_voxelize(const RunConfig& c, std::ostream& log) {
    require_file(c.input, "model");
    require_output_dir(c.output);
    c.grid.validate();

    StageTimes times;
    PendingFile out(c.output);
    VoxelizeStats stats;
    size_t payload_bytes = 0, occupied = 0;
    const uint32_t reps = reps_of(c);
    for (uint32_t r = 0; r < c.warmup + reps; ++r) {
        InputModel model;
        const double load = timed([&] { model = load_model(c.input); });
        VoxelizeResult result;
        const double total = timed([&] { result = voxelize(model, c.grid, c.domain, c.k); });
        const double exported = timed([&] { out.write(result.volume.serialize()); });
        if (r < c.warmup) continue;
        times.add("load", load);
        times.add("sample", result.stats.sample_seconds);
        times.add("gather", result.stats.gather_seconds);
        times.add("fit", result.stats.fit_seconds);
        times.add("export", exported);
        times.add("total", load + total + exported);
        stats = result.stats;
        payload_bytes = result.volume.payload_bytes();
        occupied = result.volume.occupied_count();
    }
    out.commit();
    log << "voxelized " << c.input << " -> " << c.output << ": " << stats.nodes << " nodes, " << stats.samples
        << " samples (" << stats.dropped_samples << " dropped), " << occupied << " voxels in "
        << stats.occupied_blocks << " blocks, delta " << stats.delta_world << ", payload " << payload_bytes
        << " bytes\n";
    TimingReport report = times.report("voxelize", reps);
    if (!c.quiet) report.print(log);
    if (!c.timing_csv.empty()) report.write_csv(c.timing_csv);
    return report;
}

// ---------------------------------------------------------------- build-lod

TimingReport cmd_build_lod(const RunConfig& c, std::ostream& log) {
    require_file(c.input, "volume");
    require_output_dir(c.output);

    StageTimes times;
    std::vector<PendingFile> outs;
    for (uint32_t l = 0; l <= c.lod.levels; ++l) outs.emplace_back(level_path(c.output, l));
    std::vector<size_t> counts;
    const uint32_t reps = reps_of(c);
    for (uint32_t r = 0; r < c.warmup + reps; ++r) {
        SparseVolume leaf;
        const double load = timed([&] { leaf = SparseVolume::read_file(c.input); });
        std::vector<SparseVolume> chain;
        const double build = timed([&] { chain = build_lod_chain(leaf, c.lod); });
        const double exported = timed([&] {
            for (size_t l = 0; l < chain.size(); ++l) outs[l].write(chain[l].serialize());
        });
        if (r < c.warmup) continue;
        times.add("load", load);
        times.add("build", build);
        times.add("export", exported);
        times.add("total", load + build + exported);
        counts.clear();
        for (const auto& v : chain) counts.push_back(v.occupied_count());
    }
    commit_all(outs);
    log << "built " << c.lod.levels << " " << method_name(c.lod.method) << " levels from " << c.input
        << ", voxels per level:";
    for (size_t n : counts) log << " " << n;
    log << "\n";
    TimingReport report = times.report("build-lod", reps);
    if (!c.quiet) report.print(log);
    if (!c.timing_csv.empty()) report.write_csv(c.timing_csv);
    return report;
}

// ---------------------------------------------------------------- render

TimingReport cmd_render(const RunConfig& c, std::ostream& log) {
    require_file(c.input, "scene");
    require_output_dir(c.output);
    for (const auto& v : c.volumes) require_file(v, "volume");

    StageTimes times;
    PendingFile pfm(c.output + ".pfm"), png(c.output + ".png"), mask(c.output + ".mask.png");
    const uint32_t reps = reps_of(c);
    RenderResult result;
    for (uint32_t r = 0; r < c.warmup + reps; ++r) {
        Scene scene;
        const double load = timed([&] {
            if (c.volumes.empty()) {
                scene = load_scene(c.input);
            } else {
                std::ifstream in(c.input);
                if (!in) throw Error(ErrorCode::IoError, "cannot open " + c.input);
                try {
                    scene = parse_scene(in).scene;
                } catch (const Error& e) {
                    throw Error(e.code(), c.input + ": " + e.message());
                }
                for (const auto& v : c.volumes) scene.lods.push_back(SparseVolume::read_file(v));
            }
            if (c.width > 0) scene.camera.width = c.width;
            if (c.height > 0) scene.camera.height = c.height;
            scene.validate();
        });
        const double rendering = timed([&] { result = render(scene, c.render); });
        const double exported = timed([&] {
            write_pfm(pfm.tmp(), result.image);
            write_png(png.tmp(), result.image);
            write_mask_png(mask.tmp(), result.mask);
        });
        if (r < c.warmup) continue;
        times.add("load", load);
        times.add("render", rendering);
        times.add("export", exported);
        times.add("total", load + rendering + exported);
    }
    pfm.commit();
    png.commit();
    mask.commit();
    log << "rendered " << c.input << " -> " << c.output << ".pfm (" << result.image.width << "x"
        << result.image.height << ", " << c.render.spp << " spp, " << result.mask.count() << " masked pixels)\n";
    TimingReport report = times.report("render", reps);
    if (!c.quiet) report.print(log);
    if (!c.timing_csv.empty()) report.write_csv(c.timing_csv);
    return report;
}

// ---------------------------------------------------------------- compare

void cmd_compare(const RunConfig& c, std::ostream& log) {
    require_file(c.reference, "reference image");
    require_file(c.ours, "image");
    if (!c.naive.empty()) require_file(c.naive, "naive image");
    if (!c.mask.empty()) require_file(c.mask, "mask");
    require_output_dir(c.output);

    const RadianceImage ref = read_pfm(c.reference), ours = read_pfm(c.ours);
    const ImageMask mask = c.mask.empty() ? ImageMask(ref.width, ref.height, 1) : read_mask_png(c.mask);

    struct Row {
        std::string method;
        ImageMetrics m;
        double improvement;
    };
    std::vector<Row> rows;
    const ImageMetrics om = compare_images(ours, ref, mask);
    if (c.naive.empty()) {
        // A lone candidate is its own baseline.
        rows.push_back({"ours", om, relative_improvement(om.l1, om.l1)});
    } else {
        const ImageMetrics nm = compare_images(read_pfm(c.naive), ref, mask);
        rows.push_back({"naive", nm, relative_improvement(nm.l1, nm.l1)});
        rows.push_back({"hierarchical", om, relative_improvement(nm.l1, om.l1)});
    }

    std::error_code ec;
    const bool header = !c.append || !fs::exists(c.output, ec) || fs::file_size(c.output, ec) == 0;
    std::ostringstream s;
    if (header) s << "lod,method,l1,rmse,pixels,improvement_pct\n";
    for (const auto& r : rows)
        s << c.lod_level << "," << r.method << "," << format_metric(r.m.l1) << "," << format_metric(r.m.rmse) << ","
          << r.m.pixels << "," << format_metric(r.improvement) << "\n";
    const std::string text = s.str();
    if (c.append && !header) {
        std::ofstream out(c.output, std::ios::app | std::ios::binary);
        if (!out || !(out << text)) throw Error(ErrorCode::IoError, "cannot append to " + c.output);
    } else {
        PendingFile f(c.output);
        f.write(std::vector<uint8_t>(text.begin(), text.end()));
        f.commit();
    }
    for (const auto& r : rows)
        log << "lod " << c.lod_level << " " << std::left << std::setw(13) << r.method << " L1 " << format_metric(r.m.l1)
            << "  RMSE " << format_metric(r.m.rmse) << "  improvement " << format_metric(r.improvement) << " %\n";
}

// ---------------------------------------------------------------- pipeline

Scene default_scene(const VolumeHeader& leaf, const RunConfig& c) {
    Scene s;
    const Vec3 centre = (leaf.domain.min + leaf.domain.max) * 0.5;
    const double radius = 0.5 * length(leaf.domain.extent());
    s.camera.fov_degrees = 40;
    const double distance = 1.05 * radius / std::sin(s.camera.fov_degrees * std::numbers::pi / 360.0);
    s.camera.position = centre + normalize(Vec3{0.45, 0.55, -1.0}) * distance;
    s.camera.target = centre;
    s.camera.up = {0, 1, 0};
    s.camera.width = c.width > 0 ? c.width : 256;
    s.camera.height = c.height > 0 ? c.height : 256;
    s.lights.push_back({normalize(Vec3{-0.4, 0.8, -0.45}), {2.5, 2.5, 2.5}});
    s.environment = {0.3, 0.3, 0.3};
    s.default_material = {c.flake, c.albedo};
    s.sigma_max = c.optical_depth / leaf.voxel_size();
    return s;
}

void cmd_pipeline(const RunConfig& c, std::ostream& log) {
    require_file(c.input, "model");
    if (!c.scene_template.empty()) require_file(c.scene_template, "scene template");
    if (c.output.empty()) throw Error(ErrorCode::InvalidConfig, "missing output directory");
    std::error_code ec;
    fs::create_directories(c.output, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + c.output + ": " + ec.message());
    const fs::path dir(c.output);
    auto at = [&](const std::string& name) { return (dir / name).string(); };

    RunConfig v = c;
    v.output = at("leaf.mvox");
    v.timing_csv = at("voxelize_timing.csv");
    cmd_voxelize(v, log);

    const LodConfig::Method methods[2] = {LodConfig::Method::Naive, LodConfig::Method::Hierarchical};
    for (auto m : methods) {
        RunConfig b = c;
        b.input = at("leaf.mvox");
        b.output = at(method_name(m));
        b.lod.method = m;
        b.timing_csv = at(std::string("build_lod_") + method_name(m) + "_timing.csv");
        cmd_build_lod(b, log);
    }

    SceneDescription desc;
    if (!c.scene_template.empty()) {
        std::ifstream in(c.scene_template);
        desc = parse_scene(in);
    } else {
        desc.scene = default_scene(SparseVolume::read_file(at("leaf.mvox")).header(), c);
    }
    desc.volumes = {"leaf.mvox"};
    {
        PendingFile f(at("scene.txt"));
        std::ostringstream s;
        write_scene(s, desc);
        const std::string text = s.str();
        f.write(std::vector<uint8_t>(text.begin(), text.end()));
        f.commit();
    }

    RunConfig r = c;
    r.input = at("scene.txt");
    r.repeat = 1;
    r.warmup = 0;
    r.render.fixed_level = -1;
    r.output = at("reference");
    r.timing_csv = at("render_reference_timing.csv");
    cmd_render(r, log);
    for (uint32_t l = 1; l <= c.lod.levels; ++l)
        for (auto m : methods) {
            const std::string name = std::string(method_name(m)) + "_L" + std::to_string(l);
            r.volumes = {level_path(at(method_name(m)), l)};
            r.output = at(name);
            r.timing_csv = at("render_" + name + "_timing.csv");
            cmd_render(r, log);
        }

    RunConfig k = c;
    k.output = at("metrics.csv");
    k.reference = at("reference.pfm");
    k.mask = at("reference.mask.png");
    for (uint32_t l = 1; l <= c.lod.levels; ++l) {
        k.lod_level = int(l);
        k.naive = at("naive_L" + std::to_string(l) + ".pfm");
        k.ours = at("hierarchical_L" + std::to_string(l) + ".pfm");
        k.append = l > 1;
        cmd_compare(k, log);
    }
    log << "metrics written to " << k.output << "\n";
}

void cmd_dump(const RunConfig& c, std::ostream& out) {
    require_file(c.input, "volume");
    SparseVolume::read_file(c.input).dump(out);
}

// ---------------------------------------------------------------- argument parsing

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig c;
    CLI::App app{"microvox: sparse microgeometry voxelization, SGGX level of detail and volume rendering"};
    app.set_config("--config", "", "INI file with option defaults; command-line flags take precedence");
    app.require_subcommand(1);
    app.fallthrough();
    app.add_flag("-q,--quiet", c.quiet, "Suppress the configuration echo and timing tables");
    unsigned threads = 1;
    app.add_option("-j,--threads", threads, "Worker threads; outputs do not depend on it")
        ->check(CLI::Range(1u, 1024u))
        ->capture_default_str();

    std::vector<double> domain;
    auto grid_options = [&](CLI::App* s) {
        s->add_option("--res1", c.grid.res1, "Level-1 blocks per axis")->capture_default_str();
        s->add_option("--res2", c.grid.res2, "Leaf voxels per block axis")->capture_default_str();
        s->add_option("--res3", c.grid.res3, "Sub-voxels per leaf axis")->capture_default_str();
        s->add_option("--samples-per-element", c.grid.samples_per_element,
                      "Samples per segment or triangle budget; 0 derives it from the grid")
            ->capture_default_str();
        s->add_option("--delta", c.grid.delta, "Block-distance threshold in world units; 0 derives it")
            ->capture_default_str();
        s->add_option("--max-samples", c.grid.max_samples, "Sample budget")->capture_default_str();
        s->add_option("--k", c.k, "Lobe slots per channel in the volume records")->capture_default_str();
        s->add_option("--domain", domain, "Explicit domain: minx miny minz maxx maxy maxz")->expected(6);
    };
    const std::map<std::string, LodConfig::Method> method_map{{"hierarchical", LodConfig::Method::Hierarchical},
                                                              {"naive", LodConfig::Method::Naive}};
    auto lod_options = [&](CLI::App* s, bool with_method) {
        s->add_option("--levels", c.lod.levels, "Coarse levels to build")->capture_default_str();
        s->add_option("--lod-k", c.lod.k, "Representatives per coarse voxel")->capture_default_str();
        s->add_option("--histogram-samples", c.lod.n, "NDF samples per lobe histogram")->capture_default_str();
        s->add_option("--slices", c.lod.slices, "Sliced Wasserstein directions")->capture_default_str();
        if (with_method)
            s->add_option("--method", c.lod.method, "hierarchical or naive")
                ->transform(CLI::CheckedTransformer(method_map, CLI::ignore_case))
                ->capture_default_str();
    };
    auto render_options = [&](CLI::App* s) {
        s->add_option("--spp", c.render.spp, "Paths per pixel")->check(CLI::PositiveNumber)->capture_default_str();
        s->add_option("--bounces", c.render.max_bounces, "Maximum scattering events per path")
            ->capture_default_str();
        s->add_option("--seed", c.render.seed, "Random seed")->capture_default_str();
        s->add_option("--width", c.width, "Image width override");
        s->add_option("--height", c.height, "Image height override");
    };
    auto timing_options = [&](CLI::App* s, uint32_t& repeat, uint32_t& warmup) {
        s->add_option("--repeat", repeat, "Timed repetitions (median reported)")->capture_default_str();
        s->add_option("--warmup", warmup, "Untimed repetitions before timing")->capture_default_str();
        s->add_option("--timing-csv", c.timing_csv, "Write the timing table as CSV");
    };

    auto* vox = app.add_subcommand("voxelize", "Voxelize an OBJ mesh or spline file into a leaf .mvox volume");
    vox->add_option("input", c.input, "Model file (.obj mesh, otherwise spline text)")->required();
    vox->add_option("-o,--output", c.output, "Output .mvox path")->required();
    grid_options(vox);
    timing_options(vox, c.repeat, c.warmup);

    auto* lod = app.add_subcommand("build-lod", "Build coarse levels <output>.L<l>.mvox from a leaf volume");
    lod->add_option("input", c.input, "Leaf .mvox volume")->required();
    lod->add_option("-o,--output", c.output, "Output prefix")->required();
    lod_options(lod, true);
    timing_options(lod, c.repeat, c.warmup);

    uint32_t render_repeat = 1, render_warmup = 0;
    int level = -1;
    auto* ren = app.add_subcommand("render", "Path trace a scene to <output>.pfm, .png and .mask.png");
    ren->add_option("input", c.input, "Scene description file")->required();
    ren->add_option("-o,--output", c.output, "Output prefix")->required();
    ren->add_option("--volume", c.volumes, "Volume per LoD, fine to coarse; replaces the scene's list");
    ren->add_option("--level", level, "Render only this LoD; -1 selects by footprint")->capture_default_str();
    render_options(ren);
    timing_options(ren, render_repeat, render_warmup);

    auto* cmp = app.add_subcommand("compare", "Masked L1 and RMSE of renderings against a reference");
    cmp->add_option("--reference", c.reference, "Reference PFM")->required();
    cmp->add_option("--ours", c.ours, "Candidate PFM (hierarchical method when --naive is given)")->required();
    cmp->add_option("--naive", c.naive, "Naive-method PFM");
    cmp->add_option("--mask", c.mask, "Mask PNG; all pixels when omitted");
    cmp->add_option("--lod", c.lod_level, "Level written in the lod column")->capture_default_str();
    cmp->add_option("-o,--output", c.output, "Metrics CSV")->required();
    cmp->add_flag("--append", c.append, "Append rows instead of rewriting the file");

    const std::map<std::string, FlakeMode> flake_map{{"diffuse", FlakeMode::Diffuse},
                                                     {"specular", FlakeMode::Specular}};
    std::vector<double> albedo;
    auto* pipe = app.add_subcommand("pipeline", "voxelize, build-lod (both methods), render and compare");
    pipe->add_option("input", c.input, "Model file")->required();
    pipe->add_option("-o,--output", c.output, "Output directory")->required();
    grid_options(pipe);
    lod_options(pipe, false);
    render_options(pipe);
    timing_options(pipe, c.repeat, c.warmup);
    pipe->add_option("--scene", c.scene_template, "Scene file supplying camera, lights and materials");
    pipe->add_option("--optical-depth", c.optical_depth, "Optical depth of a fully covered leaf voxel")
        ->capture_default_str();
    pipe->add_option("--flake", c.flake, "Default material: diffuse or specular")
        ->transform(CLI::CheckedTransformer(flake_map, CLI::ignore_case))
        ->capture_default_str();
    pipe->add_option("--albedo", albedo, "Default material albedo r g b")->expected(3);

    auto* dump = app.add_subcommand("dump", "Print a volume's header and voxels");
    dump->add_option("input", c.input, ".mvox volume")->required();

    std::vector<const char*> argv{"microvox"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(int(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (domain.size() == 6) c.domain = Aabb{{domain[0], domain[1], domain[2]}, {domain[3], domain[4], domain[5]}};
        if (albedo.size() == 3) c.albedo = {albedo[0], albedo[1], albedo[2]};
        c.grid.threads = threads;
        c.lod.threads = threads;
        c.render.threads = threads;
        c.render.fixed_level = level;
        CLI::App* used = app.get_subcommands().front();
        c.command = used->get_name();
        if (c.command == "render") {
            c.repeat = render_repeat;
            c.warmup = render_warmup;
        }
        if (!c.quiet) print_config(c, threads, out);
        if (c.command == "voxelize") {
            cmd_voxelize(c, out);
        } else if (c.command == "build-lod") {
            cmd_build_lod(c, out);
        } else if (c.command == "render") {
            cmd_render(c, out);
        } else if (c.command == "compare") {
            cmd_compare(c, out);
        } else if (c.command == "pipeline") {
            cmd_pipeline(c, out);
        } else {
            cmd_dump(c, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitOk;
}

}  // namespace mvx
