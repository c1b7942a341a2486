// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace tempad {

/// "tempad <version> (<git rev>)", fixed at configure time.
std::string build_id();

/// Shortest decimal form that round-trips. Byte-stable across runs.
std::string format_number(double value);
std::string format_number(long double value);

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_field(std::string_view text);

/// Writes the `# <build id>` comment line every CSV output starts with.
void write_csv_preamble(std::ostream& out);

using CsvRow = std::vector<std::string>;

/// RFC 4180 style reader. Lines starting with '#' and blank lines are
/// skipped. The first remaining row is returned as the header.
struct CsvTable {
    CsvRow header;
    std::vector<CsvRow> rows;

    /// Column index by name; throws `Error{schema}` when absent.
    std::size_t column(std::string_view name) const;
};
CsvTable read_csv(std::istream& in, const std::string& source);
CsvTable read_csv(const std::filesystem::path& path);

/// Writes to `<path>.tmp` then renames, so readers never see partial files.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

double parse_double(std::string_view text, const std::string& what);
long long parse_int(std::string_view text, const std::string& what);
std::uint64_t parse_uint(std::string_view text, const std::string& what);
/// Keeps values below the double range (tiny probabilities).
long double parse_long_double(std::string_view text, const std::string& what);

}  // namespace tempad
