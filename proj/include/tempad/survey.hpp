// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tempad/adapters.hpp"
#include "tempad/tokenizer.hpp"

namespace tempad::inline TEMPAD_PRECISION_NS {

enum class Scoring { direct, likert_scale };

/// One emotion of a Likert instrument and the adjectives that measure it.
struct LikertScale {
    std::string emotion;
    std::vector<std::string> adjectives;

    bool operator==(const LikertScale&) const = default;
};

/// A survey question with its answer options. For Likert instruments the
/// question holds an `[adjective]` placeholder filled per adjective.
struct Instrument {
    std::string id;
    std::string question;
    std::optional<std::string> prefix;
    std::vector<std::string> options;
    Scoring scoring = Scoring::direct;
    std::vector<LikertScale> scales;
    std::vector<int> option_values;  // likert only, one per option

    /// Throws `Error{schema}` on fewer than two options, empty or duplicate
    /// options, or inconsistent Likert fields.
    void validate() const;

    bool operator==(const Instrument&) const = default;
};

inline constexpr std::string_view adjective_placeholder = "[adjective]";

/// Built-ins: mood_weekly, panasx_week, nhs_expectation.
std::vector<std::string> builtin_instrument_ids();
Instrument builtin_instrument(std::string_view id);

/// JSON instrument file:
///   {"id", "question", "prefix"?, "options": [...],
///    "scoring": {"type": "direct"} |
///               {"type": "likert_scale", "option_values": [...],
///                "scales": [{"emotion", "adjectives": [...]}]}}
Instrument parse_instrument(std::string_view json, const std::string& source);
Instrument load_instrument(const std::filesystem::path& path);
/// A built-in id, or otherwise a path to an instrument file.
Instrument resolve_instrument(std::string_view id_or_path);
std::string instrument_to_json(const Instrument& instrument);

enum class OptionCasing { as_is, lower, capitalized };
OptionCasing parse_casing(std::string_view name);
std::string_view casing_name(OptionCasing casing) noexcept;

/// Copy with options recased (ASCII only).
Instrument with_casing(Instrument instrument, OptionCasing casing);
/// Copy with the answer prefix dropped.
Instrument without_prefix(Instrument instrument);

struct Prompt {
    std::string item;    // adjective for Likert prompts, empty otherwise
    std::string option;
    std::vector<TokenId> tokens;
    std::size_t span_begin = 0;  // option tokens are [span_begin, span_end)
    std::size_t span_end = 0;
};

/// BOS, question, newline, optional "prefix ", then the option bytes. Direct
/// instruments yield one prompt per option; Likert ones one per
/// (emotion, adjective, option) in declaration order.
std::vector<Prompt> build_prompts(const Instrument& instrument);

struct OptionScore {
    std::string item;
    std::string option;
    double log_probability = 0.0;
    long double probability = 0.0L;  // exp(log_probability), extended range
    double temperature = 1.0;
    int slice_id = -1;
    std::uint64_t seed = 0;
};

/// Sum of log p(token | prefix) over the option span from one forward pass.
OptionScore score_option(const ModelSession& session, const Prompt& prompt, double temperature);

/// Per adjective: normalise the option probabilities, take the expected option
/// value. The emotion score is the mean over adjectives.
double panasx_combine(std::span<const std::vector<double>> probabilities, std::span<const int> option_values);
/// Same from log probabilities, which avoids underflow before normalising.
double panasx_combine_log(std::span<const std::vector<double>> log_probabilities,
                          std::span<const int> option_values);

/// One output row: an option probability (direct) or an emotion score
/// (Likert, log_probability unset).
struct ScoreRow {
    std::string instrument;
    int slice_id = -1;
    std::uint64_t seed = 0;
    std::string label;
    double temperature = 1.0;
    long double value = 0.0L;
    std::optional<double> log_probability;
};

/// Direct: raw option probabilities, not renormalised. Likert: one row per
/// emotion via panasx_combine_log.
std::vector<ScoreRow> score_instrument(const ModelSession& session, const Instrument& instrument,
                                       double temperature);

/// Header: instrument,slice_id,seed,option_or_emotion,temperature,
/// probability_or_score,log_probability.
void write_scores(std::ostream& out, std::span<const ScoreRow> rows);
std::vector<ScoreRow> read_scores(const std::filesystem::path& path);

}  // namespace tempad
