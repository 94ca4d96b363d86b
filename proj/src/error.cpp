// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#include "mvx/error.hpp"

namespace mvx {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::NonUnitDirection: return "NonUnitDirection";
        case ErrorCode::InvalidParams: return "InvalidParams";
        case ErrorCode::AllZeroWeights: return "AllZeroWeights";
        case ErrorCode::EmptyModel: return "EmptyModel";
        case ErrorCode::DegenerateBounds: return "DegenerateBounds";
        case ErrorCode::DegenerateSegment: return "DegenerateSegment";
        case ErrorCode::CapacityExceeded: return "CapacityExceeded";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::EmptyHistogram: return "EmptyHistogram";
        case ErrorCode::OutOfBounds: return "OutOfBounds";
        case ErrorCode::BadMagic: return "BadMagic";
        case ErrorCode::VersionMismatch: return "VersionMismatch";
        case ErrorCode::TruncatedStream: return "TruncatedStream";
        case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
        case ErrorCode::CorruptStream: return "CorruptStream";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace mvx
