// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tempad {

/// Coarse failure classes. The CLI prints these verbatim as the first token of
/// its one-line error report, so the names are part of the external surface.
enum class ErrorCategory {
    invalid_argument,
    io,
    parse,
    schema,
    corrupt_file,
    version_mismatch,
    empty_input,
    insufficient_data,
    degenerate,
    numeric,
};

std::string_view category_name(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& message)
        : std::runtime_error(message), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory category, const std::string& message) {
    throw Error(category, message);
}

inline void require(bool condition, ErrorCategory category, const std::string& message) {
    if (!condition) {
        fail(category, message);
    }
}

}  // namespace tempad
