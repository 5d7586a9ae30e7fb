#pragma once

#include <stdexcept>
#include <string>

namespace ctq {

/// All samples identical after clamping; no distribution can be fitted.
struct DegenerateSampleError : std::runtime_error {
    explicit DegenerateSampleError(const std::string& what) : std::runtime_error(what) {}
};

/// Iteration budget exhausted before reaching the requested tolerance.
struct NonConvergenceError : std::runtime_error {
    explicit NonConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Frame of all-zero entries cannot be normalized.
struct ZeroVectorError : std::runtime_error {
    explicit ZeroVectorError(const std::string& what) : std::runtime_error(what) {}
};

/// Symbol frame whose special markers are inconsistent.
struct MalformedFrameError : std::runtime_error {
    explicit MalformedFrameError(const std::string& what) : std::runtime_error(what) {}
};

/// Bit source ran out mid-codeword.
struct TruncatedStreamError : std::runtime_error {
    explicit TruncatedStreamError(const std::string& what) : std::runtime_error(what) {}
};

/// Encoder hit the fallback branch with no fallback symbol available.
struct MissingFallbackError : std::runtime_error {
    explicit MissingFallbackError(const std::string& what) : std::runtime_error(what) {}
};

/// Decoder state no longer consistent with the incoming stream.
struct DesyncError : std::runtime_error {
    explicit DesyncError(const std::string& what) : std::runtime_error(what) {}
};

/// File magic/version mismatch or structurally invalid container.
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem-level failure (missing file, unreadable, write error).
struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace ctq
