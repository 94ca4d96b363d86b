// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Scene description text. One directive per line, '#' starts a comment:
//   volume <path>                       one per LoD, fine to coarse
//   sigma <sigma_max>
//   camera <pos xyz> <target xyz> <up xyz> <fov_degrees> <width> <height>
//   light <direction xyz> <radiance rgb>  direction points towards the light
//   environment <radiance rgb>
//   material <id> specular|diffuse <albedo rgb>
//   default_material specular|diffuse <albedo rgb>
// Relative volume paths resolve against the scene file's directory.

#include <iosfwd>
#include <string>
#include <vector>

#include "mvx/render.hpp"

namespace mvx {

struct SceneDescription {
    std::vector<std::string> volumes;
    Scene scene;  // everything but the volumes
};

/// Throws ParseError with the offending line number.
SceneDescription parse_scene(std::istream& in);
void write_scene(std::ostream& out, const SceneDescription& description);

/// Parses the file, loads its volumes and validates the result. Throws
/// IoError, ParseError, InvalidConfig or any volume read error.
Scene load_scene(const std::string& path);

}  // namespace mvx
