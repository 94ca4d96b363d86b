// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mvx/image.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "mvx/error.hpp"

namespace mvx {

size_t ImageMask::count() const {
    size_t n = 0;
    for (uint8_t v : values) n += v != 0;
    return n;
}

ImageMetrics compare_images(const RadianceImage& a, const RadianceImage& b, const ImageMask& mask) {
    if (a.width != b.width || a.height != b.height || mask.width != a.width || mask.height != a.height)
        throw Error(ErrorCode::DimensionMismatch, "image sizes differ: " + std::to_string(a.width) + "x" +
                                                      std::to_string(a.height) + " vs " + std::to_string(b.width) +
                                                      "x" + std::to_string(b.height) + " (mask " +
                                                      std::to_string(mask.width) + "x" + std::to_string(mask.height) +
                                                      ")");
    ImageMetrics m;
    double sum_abs = 0, sum_sq = 0;
    for (size_t p = 0; p < a.pixel_count(); ++p) {
        if (!mask.values[p]) continue;
        ++m.pixels;
        for (int c = 0; c < 3; ++c) {
            const double d = double(a.rgb[p * 3 + c]) - double(b.rgb[p * 3 + c]);
            sum_abs += std::fabs(d);
            sum_sq += d * d;
        }
    }
    if (m.pixels == 0) return m;
    const double n = 3.0 * double(m.pixels);
    m.l1 = sum_abs / n;
    m.rmse = std::sqrt(sum_sq / n);
    return m;
}

double relative_improvement(double baseline, double ours) {
    if (baseline == 0 && ours == 0) return 0;
    return 100.0 * (baseline - ours) / baseline;
}

void write_pfm(const std::string& path, const RadianceImage& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
    out << "PF\n" << image.width << " " << image.height << "\n-1.0\n";
    static_assert(std::endian::native == std::endian::little);
    for (uint32_t row = image.height; row-- > 0;)
        out.write(reinterpret_cast<const char*>(image.rgb.data() + size_t(row) * image.width * 3),
                  std::streamsize(size_t(image.width) * 3 * sizeof(float)));
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

RadianceImage read_pfm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    auto fail = [&](const std::string& why) { return Error(ErrorCode::ParseError, path + ": " + why); };

    std::string magic;
    long long w = 0, h = 0;
    double scale = 0;
    if (!(in >> magic) || magic != "PF") throw fail("not a color PFM file");
    if (!(in >> w >> h >> scale) || w <= 0 || h <= 0 || w > (1 << 16) || h > (1 << 16) || scale == 0 ||
        !std::isfinite(scale))
        throw fail("bad PFM header");
    if (!std::isspace(in.get())) throw fail("bad PFM header");

    RadianceImage img{uint32_t(w), uint32_t(h)};
    const size_t row_floats = size_t(w) * 3;
    for (uint32_t row = img.height; row-- > 0;) {
        float* dst = img.rgb.data() + row * row_floats;
        in.read(reinterpret_cast<char*>(dst), std::streamsize(row_floats * sizeof(float)));
        if (in.gcount() != std::streamsize(row_floats * sizeof(float))) throw fail("truncated pixel data");
        if (scale > 0)
            for (size_t i = 0; i < row_floats; ++i) {
                uint32_t bits;
                std::memcpy(&bits, dst + i, 4);
                bits = (bits >> 24) | ((bits >> 8) & 0xff00u) | ((bits << 8) & 0xff0000u) | (bits << 24);
                std::memcpy(dst + i, &bits, 4);
            }
    }
    for (float v : img.rgb)
        if (!std::isfinite(v)) throw fail("non-finite pixel value");
    return img;
}

uint8_t srgb_encode(double v) {
    v = std::clamp(v, 0.0, 1.0);
    const double s = v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
    return uint8_t(std::lround(s * 255.0));
}

namespace {

void write_png_buffer(const std::string& path, uint32_t w, uint32_t h, uint32_t format, const void* data) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    img.width = w;
    img.height = h;
    img.format = format;
    if (!png_image_write_to_file(&img, path.c_str(), 0, data, 0, nullptr))
        throw Error(ErrorCode::IoError, "cannot write " + path + ": " + img.message);
}

}  // namespace

void write_png(const std::string& path, const RadianceImage& image) {
    std::vector<uint8_t> px(image.rgb.size());
    for (size_t i = 0; i < px.size(); ++i) px[i] = srgb_encode(image.rgb[i]);
    write_png_buffer(path, image.width, image.height, PNG_FORMAT_RGB, px.data());
}

void write_mask_png(const std::string& path, const ImageMask& mask) {
    std::vector<uint8_t> px(mask.values.size());
    for (size_t i = 0; i < px.size(); ++i) px[i] = mask.values[i] ? 255 : 0;
    write_png_buffer(path, mask.width, mask.height, PNG_FORMAT_GRAY, px.data());
}

ImageMask read_mask_png(const std::string& path) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str())) {
        std::ifstream probe(path);
        throw Error(probe ? ErrorCode::ParseError : ErrorCode::IoError, path + ": " + img.message);
    }
    img.format = PNG_FORMAT_GRAY;
    std::vector<uint8_t> px(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, px.data(), 0, nullptr)) {
        png_image_free(&img);
        throw Error(ErrorCode::ParseError, path + ": " + img.message);
    }
    ImageMask mask(img.width, img.height, 0);
    for (size_t i = 0; i < mask.values.size(); ++i) mask.values[i] = px[i] != 0;
    return mask;
}

}  // namespace mvx
