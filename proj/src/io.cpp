// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include "tempad/io.hpp"

#include <array>
#include <charconv>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <fstream>
#include <istream>
#include <ostream>

#include "tempad/error.hpp"

#ifndef TEMPAD_VERSION
#define TEMPAD_VERSION "0.0.0"
#endif
#ifndef TEMPAD_GIT_REV
#define TEMPAD_GIT_REV "unknown"
#endif

namespace tempad {

std::string build_id() {
    return std::string("tempad ") + TEMPAD_VERSION + " (" + TEMPAD_GIT_REV + ")";
}

namespace {

template <typename T>
std::string shortest(T value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    std::array<char, 64> buf{};
    const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    require(ec == std::errc{}, ErrorCategory::numeric, "number formatting failed");
    return {buf.data(), end};
}

}  // namespace

std::string format_number(double value) { return shortest(value); }
std::string format_number(long double value) { return shortest(value); }

std::string csv_field(std::string_view text) {
    if (text.find_first_of(",\"\n\r") == std::string_view::npos) {
        return std::string(text);
    }
    std::string out = "\"";
    for (const char c : text) {
        if (c == '"') {
            out += '"';
        }
        out += c;
    }
    out += '"';
    return out;
}

void write_csv_preamble(std::ostream& out) { out << "# " << build_id() << '\n'; }

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    fail(ErrorCategory::schema, "missing CSV column '" + std::string(name) + "'");
}

CsvTable read_csv(std::istream& in, const std::string& source) {
    CsvTable table;
    std::string line;
    bool have_header = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        CsvRow row;
        std::string field;
        bool quoted = false;
        for (std::size_t i = 0;; ++i) {
            if (i == line.size()) {
                if (!quoted) {
                    break;
                }
                // Quoted field spanning lines.
                std::string next;
                require(static_cast<bool>(std::getline(in, next)), ErrorCategory::parse,
                        source + ":" + std::to_string(line_no) + ": unterminated quoted field");
                ++line_no;
                field += '\n';
                line += '\n' + next;
                continue;
            }
            const char c = line[i];
            if (quoted) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else if (c == '"') {
                    quoted = false;
                } else {
                    field += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                row.push_back(std::move(field));
                field.clear();
            } else {
                field += c;
            }
        }
        row.push_back(std::move(field));
        if (!have_header) {
            table.header = std::move(row);
            have_header = true;
            continue;
        }
        require(row.size() == table.header.size(), ErrorCategory::parse,
                source + ":" + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                    " fields, got " + std::to_string(row.size()));
        table.rows.push_back(std::move(row));
    }
    require(have_header, ErrorCategory::empty_input, source + ": no CSV header");
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.is_open(), ErrorCategory::io, "cannot open " + path.string());
    return read_csv(in, path.string());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.is_open(), ErrorCategory::io, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        require(out.good(), ErrorCategory::io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    require(!ec, ErrorCategory::io, "cannot rename " + tmp.string() + ": " + ec.message());
}

double parse_double(std::string_view text, const std::string& what) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    require(ec == std::errc{} && ptr == text.data() + text.size(), ErrorCategory::parse,
            what + ": not a number: '" + std::string(text) + "'");
    return v;
}

long long parse_int(std::string_view text, const std::string& what) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    require(ec == std::errc{} && ptr == text.data() + text.size(), ErrorCategory::parse,
            what + ": not an integer: '" + std::string(text) + "'");
    return v;
}

std::uint64_t parse_uint(std::string_view text, const std::string& what) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    require(ec == std::errc{} && ptr == text.data() + text.size(), ErrorCategory::parse,
            what + ": not an unsigned integer: '" + std::string(text) + "'");
    return v;
}

long double parse_long_double(std::string_view text, const std::string& what) {
    const std::string s(text);
    if (s == "nan") {
        return std::numeric_limits<long double>::quiet_NaN();
    }
    char* end = nullptr;
    errno = 0;
    const long double v = std::strtold(s.c_str(), &end);
    require(!s.empty() && end == s.c_str() + s.size() && errno != ERANGE, ErrorCategory::parse,
            what + ": not a number: '" + s + "'");
    return v;
}

}  // namespace tempad
