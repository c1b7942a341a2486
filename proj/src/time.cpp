// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include "tempad/time.hpp"

#include <cstdio>

#include "tempad/error.hpp"

namespace tempad {

namespace {

class Cursor {
public:
    explicit Cursor(std::string_view s) : s_(s) {}

    bool done() const { return pos_ >= s_.size(); }
    char peek() const { return done() ? '\0' : s_[pos_]; }
    void advance() { ++pos_; }

    bool digits(int count, int& out) {
        int v = 0;
        for (int i = 0; i < count; ++i) {
            if (done() || peek() < '0' || peek() > '9') {
                return false;
            }
            v = v * 10 + (peek() - '0');
            advance();
        }
        out = v;
        return true;
    }

    bool literal(char c) {
        if (peek() != c) {
            return false;
        }
        advance();
        return true;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
};

std::optional<Date> read_date(Cursor& cur) {
    int y = 0;
    int m = 0;
    int d = 0;
    if (!cur.digits(4, y) || !cur.literal('-') || !cur.digits(2, m) || !cur.literal('-') ||
        !cur.digits(2, d)) {
        return std::nullopt;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return Date{ymd};
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '\n')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n')) {
        s.remove_suffix(1);
    }
    return s;
}

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    Cursor cur(trim(text));
    const auto date = read_date(cur);
    if (!date) {
        return std::nullopt;
    }
    Timestamp ts{std::chrono::duration_cast<std::chrono::seconds>(date->time_since_epoch())};
    if (cur.done()) {
        return ts;
    }
    if (!cur.literal('T') && !cur.literal(' ')) {
        return std::nullopt;
    }
    int hh = 0;
    int mm = 0;
    int ss = 0;
    if (!cur.digits(2, hh) || !cur.literal(':') || !cur.digits(2, mm)) {
        return std::nullopt;
    }
    if (cur.literal(':')) {
        if (!cur.digits(2, ss)) {
            return std::nullopt;
        }
        if (cur.literal('.')) {
            int digit = 0;
            if (!cur.digits(1, digit)) {
                return std::nullopt;
            }
            while (!cur.done() && cur.peek() >= '0' && cur.peek() <= '9') {
                cur.advance();
            }
        }
    }
    if (hh > 23 || mm > 59 || ss > 60) {
        return std::nullopt;
    }
    ts += std::chrono::hours{hh} + std::chrono::minutes{mm} + std::chrono::seconds{ss};
    if (cur.done() || cur.literal('Z')) {
        return cur.done() ? std::optional<Timestamp>{ts} : std::nullopt;
    }
    const char sign = cur.peek();
    if (sign != '+' && sign != '-') {
        return std::nullopt;
    }
    cur.advance();
    int oh = 0;
    int om = 0;
    if (!cur.digits(2, oh)) {
        return std::nullopt;
    }
    cur.literal(':');
    if (!cur.digits(2, om) || !cur.done() || oh > 23 || om > 59) {
        return std::nullopt;
    }
    const auto offset = std::chrono::hours{oh} + std::chrono::minutes{om};
    // local = utc + offset
    ts = sign == '+' ? ts - offset : ts + offset;
    return ts;
}

Date parse_date(std::string_view text) {
    Cursor cur(trim(text));
    const auto date = read_date(cur);
    if (!date || !cur.done()) {
        fail(ErrorCategory::parse, "invalid calendar date '" + std::string(text) + "' (expected YYYY-MM-DD)");
    }
    return *date;
}

std::string format_date(Date date) {
    const std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string format_timestamp(Timestamp ts) {
    const auto day = std::chrono::floor<std::chrono::days>(ts);
    const std::chrono::hh_mm_ss hms{ts - day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "T%02d:%02d:%02dZ", static_cast<int>(hms.hours().count()),
                  static_cast<int>(hms.minutes().count()), static_cast<int>(hms.seconds().count()));
    return format_date(Date{day}) + buf;
}

}  // namespace tempad
