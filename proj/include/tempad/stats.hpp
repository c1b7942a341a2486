// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tempad/series.hpp"
#include "tempad/time.hpp"

namespace tempad {

using DatedValue = std::pair<Date, double>;

/// An external survey track for one answer option.
struct ReferenceSeries {
    std::string source;
    std::string option;
    std::vector<DatedValue> points;

    /// Throws unless dates strictly increase and values are finite.
    void validate() const;
};

/// CSV with columns wave_date, option, value. One series per option, in
/// order of first appearance.
std::vector<ReferenceSeries> load_reference(const std::filesystem::path& path);
std::vector<ReferenceSeries> read_reference(std::istream& in, const std::string& source);

struct Alignment {
    std::vector<Date> dates;
    std::vector<double> series;
    std::vector<double> reference;
    std::size_t dropped_series = 0;
    std::size_t dropped_reference = 0;
};

/// Exact-date matching. Throws `Error{insufficient_data}` below two pairs.
Alignment align(std::span<const DatedValue> series, std::span<const DatedValue> reference);

/// Product-moment correlation. Throws on length mismatch, fewer than two
/// points or zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// Two-sided Monte Carlo test permuting x with y fixed:
/// p = (1 + #{|r_perm| >= |r_obs|}) / (1 + n_perm). Permutation i draws from
/// derive_seed(seed, i), so the result does not depend on `jobs`.
double permutation_test(std::span<const double> x, std::span<const double> y, int n_perm, std::uint64_t seed,
                        int jobs = 1);

/// Exhaustive version over all n! orderings of x (identity included):
/// p = #{|r_perm| >= |r_obs|} / n!. Limited to n <= 10.
double exact_permutation_test(std::span<const double> x, std::span<const double> y);

/// "***" below 0.001, "**" below 0.01, "*" below 0.05, else "".
std::string significance_stars(double p);

struct CorrelationResult {
    std::string option;
    std::uint64_t seed = 0;
    double r = 0.0;
    double p = 1.0;
    std::size_t n = 0;
    int permutations = 0;
    std::uint64_t permutation_seed = 0;
};

struct CorrelationSummary {
    std::string option;
    double r_min = 0.0;
    double r_max = 0.0;
    double worst_p = 1.0;
    int n_seeds = 0;
    std::string stars;
};

struct ValidationConfig {
    int permutations = 10000;
    std::uint64_t seed = 0;
    int jobs = 1;
    SeriesOptions pipeline;
    /// Series label to reference option; unmapped labels match by name.
    std::map<std::string, std::string> option_map;
};

struct ValidationTable {
    std::vector<CorrelationResult> results;
    std::vector<CorrelationSummary> summaries;
};

/// Summary over per-seed results of one option: min/max r and the worst p.
CorrelationSummary summarize(std::span<const CorrelationResult> results);

/// Per (option, seed): run the per-seed pipeline, align with the reference,
/// correlate and test. Series without a reference are skipped.
ValidationTable validate(std::span<const AffectSeries> series, std::span<const ReferenceSeries> references,
                         const ValidationConfig& config);

/// Header: option,seed,r,p,n,r_min,r_max,stars. Summary rows carry
/// seed=summary, an empty r and the worst p.
void write_validation(std::ostream& out, const ValidationTable& table);

}  // namespace tempad
