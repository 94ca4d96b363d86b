// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Model readers.
//
// OBJ: v, vn, vt, f (v, v/vt, v//vn, v/vt/vn, negative indices; polygons are
// fan-triangulated) and usemtl, which assigns material ids in order of first
// use. Normals come from vn or the face; tangents from the UV gradient when
// vt is present, else from the first face edge.
//
// Spline text, whitespace separated, '#' starts a comment:
//   radius <r>               cross-section radius (optional)
//   m <name>                 declares the next material id (optional)
//   s <n> then n records of  x y z nx ny nz tx ty tz mat
// Records may span lines; each spline needs n >= 2.

#include <iosfwd>
#include <string>

#include "mvx/model.hpp"

namespace mvx {

InputModel parse_obj(std::istream& in);
InputModel parse_splines(std::istream& in);

/// Dispatches on extension: .obj is a mesh, anything else a spline file.
/// Throws IoError or ParseError.
InputModel load_model(const std::string& path);

void write_splines(std::ostream& out, const InputModel& model);

}  // namespace mvx
