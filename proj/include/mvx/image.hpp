// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Linear RGB images, background masks and their file formats.
//
// Rows are stored top to bottom. PFM files are written little-endian
// (negative scale) and bottom to top as the format requires.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "mvx/vec.hpp"

namespace mvx {

struct RadianceImage {
    uint32_t width = 0, height = 0;
    std::vector<float> rgb;          // 3 floats per pixel
    std::vector<uint32_t> samples;   // paths accumulated per pixel

    RadianceImage() = default;
    RadianceImage(uint32_t w, uint32_t h) : width(w), height(h), rgb(size_t(w) * h * 3, 0.f), samples(size_t(w) * h, 0) {}

    size_t pixel_count() const { return size_t(width) * height; }
    Vec3 pixel(uint32_t x, uint32_t y) const {
        const size_t i = (size_t(y) * width + x) * 3;
        return {rgb[i], rgb[i + 1], rgb[i + 2]};
    }
    void set_pixel(uint32_t x, uint32_t y, const Vec3& c) {
        const size_t i = (size_t(y) * width + x) * 3;
        rgb[i] = float(c.x);
        rgb[i + 1] = float(c.y);
        rgb[i + 2] = float(c.z);
    }
    bool operator==(const RadianceImage&) const = default;
};

/// Per-pixel foreground flags (0 or 1).
struct ImageMask {
    uint32_t width = 0, height = 0;
    std::vector<uint8_t> values;

    ImageMask() = default;
    ImageMask(uint32_t w, uint32_t h, uint8_t fill = 1) : width(w), height(h), values(size_t(w) * h, fill) {}
    size_t count() const;
    bool operator==(const ImageMask&) const = default;
};

/// Masked errors. Both are NaN when the mask selects no pixel.
struct ImageMetrics {
    double l1 = std::numeric_limits<double>::quiet_NaN();
    double rmse = std::numeric_limits<double>::quiet_NaN();
    uint64_t pixels = 0;

    bool defined() const { return pixels > 0; }
};

/// Mean absolute and root mean squared difference over masked pixels and
/// channels. Throws DimensionMismatch when sizes differ.
ImageMetrics compare_images(const RadianceImage& a, const RadianceImage& b, const ImageMask& mask);

/// Relative improvement of `ours` over `baseline` in percent; 0 when both are zero.
double relative_improvement(double baseline, double ours);

void write_pfm(const std::string& path, const RadianceImage& image);
/// Sample counts are not stored in PFM and read back as zero.
RadianceImage read_pfm(const std::string& path);

/// Clamped, sRGB-encoded 8-bit PNG.
void write_png(const std::string& path, const RadianceImage& image);
void write_mask_png(const std::string& path, const ImageMask& mask);
/// Any non-zero gray value reads as foreground.
ImageMask read_mask_png(const std::string& path);

uint8_t srgb_encode(double linear);

}  // namespace mvx
