// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace tempad {

using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::sys_days;

/// ISO-8601 subset: `YYYY-MM-DD`, optionally followed by `T` or a space and
/// `HH:MM[:SS[.fff]]` and a zone designator (`Z`, `+HH:MM`, `+HHMM`). Offsets
/// are folded into UTC; fractional seconds are truncated.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// Strict calendar date `YYYY-MM-DD`; throws `Error{parse}` otherwise.
Date parse_date(std::string_view text);

std::string format_date(Date date);
std::string format_timestamp(Timestamp ts);

}  // namespace tempad
