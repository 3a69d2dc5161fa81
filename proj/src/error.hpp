#pragma once

#include <stdexcept>
#include <string>

namespace fseg {

/// Error categories carried by every exception thrown from the core.
/// They map 1:1 onto the fs_status codes of the public C API.
enum class ErrCode {
    invalid_argument,
    dimension,        // tensor / layer shape mismatch
    format,           // malformed container file
    io,               // unreadable / unwritable path
    divergence,       // non-finite loss or gradient during training
    degenerate,       // confusion-table marginal is zero
    undefined_metric, // metric has no defined value for these counts
    calibration,      // every threshold pair was degenerate
};

struct Error : std::runtime_error {
    ErrCode code;
    Error(ErrCode c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

} // namespace fseg
