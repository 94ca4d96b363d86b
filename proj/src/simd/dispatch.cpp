// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <mutex>

#include "mvx/error.hpp"
#include "mvx/simd.hpp"

namespace mvx::simd {

#if !defined(MVX_HAVE_AVX2)
const Kernels* detail::avx2_kernels() { return nullptr; }
#endif

namespace {

std::atomic<int> g_level{-1};
std::once_flag g_init;

void init_level() {
    Level level = detected_level();
    if (const char* env = std::getenv("MVX_SIMD")) {
        if (auto parsed = parse_level(env); parsed && supported(*parsed)) level = *parsed;
    }
    int expected = -1;
    g_level.compare_exchange_strong(expected, int(level));
}

}  // namespace

bool supported(Level level) {
    switch (level) {
        case Level::Scalar:
            return true;
        case Level::Avx2:
#if defined(MVX_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
            return detail::avx2_kernels() != nullptr && __builtin_cpu_supports("avx2");
#else
            return false;
#endif
    }
    return false;
}

Level detected_level() { return supported(Level::Avx2) ? Level::Avx2 : Level::Scalar; }

Level active_level() {
    std::call_once(g_init, init_level);
    return Level(g_level.load(std::memory_order_relaxed));
}

void set_level(Level level) {
    if (!supported(level)) throw Error(ErrorCode::InvalidConfig, std::string("SIMD level unsupported: ") + to_string(level));
    std::call_once(g_init, init_level);
    g_level.store(int(level), std::memory_order_relaxed);
}

std::optional<Level> parse_level(std::string_view name) {
    if (name == "scalar") return Level::Scalar;
    if (name == "avx2") return Level::Avx2;
    return std::nullopt;
}

const char* to_string(Level level) { return level == Level::Avx2 ? "avx2" : "scalar"; }

const Kernels& kernels(Level level) {
    if (level == Level::Avx2 && supported(Level::Avx2)) return *detail::avx2_kernels();
    return detail::scalar_kernels();
}

const Kernels& kernels() { return kernels(active_level()); }

}  // namespace mvx::simd
