// Copyright 2026 The microvox Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mvx {

enum class ErrorCode {
    EmptyInput,
    NonUnitDirection,
    InvalidParams,
    AllZeroWeights,
    EmptyModel,
    DegenerateBounds,
    DegenerateSegment,
    CapacityExceeded,
    InvalidConfig,
    EmptyHistogram,
    OutOfBounds,
    BadMagic,
    VersionMismatch,
    TruncatedStream,
    ChecksumMismatch,
    CorruptStream,
    DimensionMismatch,
    ParseError,
    IoError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), message_(what) {}

    ErrorCode code() const noexcept { return code_; }
    /// Message without the code prefix.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

}  // namespace mvx
