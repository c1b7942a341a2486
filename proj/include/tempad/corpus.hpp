// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tempad/time.hpp"

namespace tempad {

struct Document {
    std::string text;
    Timestamp timestamp{};
    std::optional<std::string> label;

    bool operator==(const Document&) const = default;
};

struct Corpus {
    std::vector<Document> documents;  // sorted by timestamp after load
    std::size_t skipped = 0;          // malformed records dropped during load
};

/// Field mapping for newline-delimited JSON records, plus optional bounds a
/// timestamp must fall in for the record to be accepted.
struct CorpusSchema {
    std::string text_field = "text";
    std::string timestamp_field = "timestamp";
    std::string label_field = "label";
    std::optional<Timestamp> not_before;
    std::optional<Timestamp> not_after;
};

/// Reads JSON lines. Malformed records are skipped and counted; more than half
/// of the records being malformed is treated as a schema error.
Corpus load_corpus(const std::filesystem::path& path, const CorpusSchema& schema = {});
Corpus read_corpus(std::istream& in, const CorpusSchema& schema = {});

void write_corpus(const std::filesystem::path& path, std::span<const Document> docs);
void write_corpus(std::ostream& out, std::span<const Document> docs);

struct TimeSlice {
    int id = 0;
    Date end_date{};
    int window_days = 7;
    std::vector<Document> documents;

    Date start_date() const { return end_date - std::chrono::days{window_days}; }
    /// Empty slices are kept so wave indices stay aligned; training refuses them.
    bool flagged_empty() const { return documents.empty(); }
};

/// One manifest row of a slice directory.
struct SliceInfo {
    int id = 0;
    Date end_date{};
    int window_days = 7;
    std::size_t n_docs = 0;
};

/// Writes `slice_<id>.jsonl` per slice plus `manifest.csv`
/// (slice_id,end_date,window_days,n_docs).
void write_slices(const std::filesystem::path& dir, std::span<const TimeSlice> slices);
std::vector<SliceInfo> read_slice_manifest(const std::filesystem::path& dir);
std::vector<Document> load_slice_documents(const std::filesystem::path& dir, int slice_id);

std::vector<Date> read_wave_dates(const std::filesystem::path& path);
std::vector<Date> read_wave_dates(std::istream& in);

/// One slice per wave date over the half-open window [end - window_days, end).
std::vector<TimeSlice> slice_weekly(const Corpus& corpus, std::span<const Date> wave_dates,
                                    int window_days = 7);

/// Truncates every non-empty slice to the smallest non-empty slice size by
/// seeded subsampling, so each wave trains on the same amount of text.
void cap_to_smallest_slice(std::vector<TimeSlice>& slices, std::uint64_t seed);

struct MixSpec {
    double happy_fraction = 0.5;
    std::size_t total_count = 0;
    std::uint64_t seed = 0;
};

struct MixCounts {
    std::size_t first = 0;   // drawn from the first (happy) pool
    std::size_t second = 0;  // remainder, from the second pool
};

/// Nearest-integer rounding of fraction * total for the first pool.
MixCounts mix_counts(double fraction, std::size_t total);

/// The fractions 0.0, 0.1, ..., 1.0.
std::vector<double> preset_mix_fractions();

/// Draws a shuffled, seeded mix of two disjointly labeled pools.
std::vector<Document> synth_mix(std::span<const Document> first_pool, std::span<const Document> second_pool,
                                const MixSpec& spec);

/// Per-label sentence templates with `{slot}` markers filled from word lists.
struct EmotionTemplates {
    std::map<std::string, std::vector<std::string>> templates;  // label -> templates
    std::map<std::string, std::vector<std::string>> slots;      // slot -> fill words
};

EmotionTemplates default_emotion_templates();
EmotionTemplates load_emotion_templates(const std::filesystem::path& path);

/// Number of distinct (template, fill) combinations available for a label.
std::size_t template_capacity(const EmotionTemplates& templates, const std::string& label);

/// n_per_label documents per label, no repeated (template, fill) pair until a
/// label's combinations are exhausted. Output order is shuffled by seed.
std::vector<Document> generate_synthetic_emotion_corpus(const EmotionTemplates& templates,
                                                        std::size_t n_per_label, std::uint64_t seed,
                                                        Timestamp stamp = Timestamp{});

std::vector<Document> filter_label(std::span<const Document> docs, const std::string& label);

/// Share of each label among labeled documents; unlabeled ones are ignored.
std::map<std::string, double> label_shares(std::span<const Document> docs);

}  // namespace tempad
