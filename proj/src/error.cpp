// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include "tempad/error.hpp"

namespace tempad {

std::string_view category_name(ErrorCategory category) noexcept {
    switch (category) {
        case ErrorCategory::invalid_argument: return "invalid_argument";
        case ErrorCategory::io: return "io";
        case ErrorCategory::parse: return "parse";
        case ErrorCategory::schema: return "schema";
        case ErrorCategory::corrupt_file: return "corrupt_file";
        case ErrorCategory::version_mismatch: return "version_mismatch";
        case ErrorCategory::empty_input: return "empty_input";
        case ErrorCategory::insufficient_data: return "insufficient_data";
        case ErrorCategory::degenerate: return "degenerate";
        case ErrorCategory::numeric: return "numeric";
    }
    return "unknown";
}

}  // namespace tempad
