// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mvx/grid.hpp"

#include <cmath>
#include <string>

#include "mvx/error.hpp"

namespace mvx {

void GridConfig::validate() const {
    if (res1 < 1 || res2 < 1 || res3 < 1) throw Error(ErrorCode::InvalidConfig, "resolutions must be >= 1");
    if (uint64_t(res1) * res2 > kMaxLeafResolution)
        throw Error(ErrorCode::InvalidConfig,
                    "leaf resolution " + std::to_string(uint64_t(res1) * res2) + " exceeds " +
                        std::to_string(kMaxLeafResolution));
    if (res3 > 255) throw Error(ErrorCode::InvalidConfig, "res3 must be <= 255");
    if (!(delta >= 0) || !std::isfinite(delta)) throw Error(ErrorCode::InvalidConfig, "delta must be finite and >= 0");
    if (threads < 1) throw Error(ErrorCode::InvalidConfig, "threads must be >= 1");
}

}  // namespace mvx
