// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Command implementations behind the microvox executable. Each command
// throws mvx::Error on failure; run_cli maps error classes to exit codes.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mvx/error.hpp"
#include "mvx/grid.hpp"
#include "mvx/lod.hpp"
#include "mvx/render.hpp"

namespace mvx {

enum ExitCode : int {
    kExitOk = 0,
    kExitFailure = 1,      // unexpected internal error
    kExitUsage = 2,        // bad command line or config file
    kExitIo = 3,           // missing or unwritable file
    kExitMalformed = 4,    // unparsable model, scene, image or volume
    kExitInvalid = 5,      // invalid parameters or configuration
    kExitGeometry = 6,     // degenerate or out-of-range input geometry
    kExitDimension = 7,    // image sizes differ
    kExitCapacity = 8,     // sample or lobe budget exceeded
};

int exit_code_for(ErrorCode code);

struct RunConfig {
    std::string command;
    std::string input;
    std::string output;
    bool quiet = false;

    // voxelize
    GridConfig grid;
    uint32_t k = 3;
    std::optional<Aabb> domain;

    // build-lod
    LodConfig lod;

    // render
    RenderOptions render;
    std::vector<std::string> volumes;  // replaces the scene's list when set
    uint32_t width = 0, height = 0;    // replaces the camera size when set

    // compare
    std::string reference, ours, naive, mask;
    int lod_level = 0;
    bool append = false;

    // pipeline scene (used without a scene template)
    std::string scene_template;
    double optical_depth = 4;  // of a fully covered leaf voxel
    FlakeMode flake = FlakeMode::Diffuse;
    Vec3 albedo{0.8, 0.8, 0.8};

    // timing
    uint32_t repeat = 3;
    uint32_t warmup = 1;
    std::string timing_csv;
};

/// Median wall-clock seconds per stage over the timed repetitions.
struct TimingReport {
    std::string command;
    std::vector<std::pair<std::string, double>> stages;
    uint32_t repetitions = 0;

    void print(std::ostream& out) const;
    /// Columns: command,stage,median_seconds,repetitions
    void write_csv(const std::string& path) const;
};

TimingReport cmd_voxelize(const RunConfig& config, std::ostream& log);
/// Writes <output>.L<l>.mvox for l = 0 (the leaf) .. levels.
TimingReport cmd_build_lod(const RunConfig& config, std::ostream& log);
/// Writes <output>.pfm, <output>.png and <output>.mask.png.
TimingReport cmd_render(const RunConfig& config, std::ostream& log);
/// Writes or appends metric rows to `output`.
/// Columns: lod,method,l1,rmse,pixels,improvement_pct
void cmd_compare(const RunConfig& config, std::ostream& log);
/// voxelize, build-lod with both methods, render every level and compare
/// against the leaf rendering, all inside directory `output`.
void cmd_pipeline(const RunConfig& config, std::ostream& log);
void cmd_dump(const RunConfig& config, std::ostream& out);

/// Scene framing a volume domain: camera on a fixed diagonal, a sun and a
/// dim environment, sigma_max from the optical depth of one leaf voxel.
Scene default_scene(const VolumeHeader& leaf, const RunConfig& config);

/// Parses arguments (without the program name) and runs the command.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mvx
