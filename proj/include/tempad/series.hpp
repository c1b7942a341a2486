// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tempad/survey.hpp"
#include "tempad/time.hpp"

namespace tempad {

struct SeriesPoint {
    int slice_id = 0;
    Date end_date{};
    std::uint64_t seed = 0;
    double value = 0.0;
};

/// Values for one instrument option (or emotion) over time, all seeds mixed.
struct AffectSeries {
    std::string instrument;
    std::string label;
    std::vector<SeriesPoint> points;  // sorted by (end_date, seed)

    /// Throws on unsorted points or a repeated (slice, seed).
    void validate() const;
};

/// Trailing mean over the last `window` values; the head uses what exists.
std::vector<double> rolling_mean(std::span<const double> values, int window = 3);

/// (v - min) / (max - min). Throws `Error{degenerate}` on a constant series.
std::vector<double> min_max_normalize(std::span<const double> values);

enum class PipelineOrder { smooth_then_normalize, normalize_then_smooth };
PipelineOrder parse_pipeline_order(std::string_view name);
std::string_view pipeline_order_name(PipelineOrder order) noexcept;

struct SeriesOptions {
    int window = 3;
    bool smooth = true;
    bool normalize = true;
    PipelineOrder order = PipelineOrder::smooth_then_normalize;
};

/// Applies the per-seed pipeline to one track.
std::vector<double> transform_track(std::span<const double> values, const SeriesOptions& options);

struct BandStats {
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

/// Per-position mean/min/max across equally long tracks.
std::vector<BandStats> seed_aggregate(std::span<const std::vector<double>> tracks);

struct BandPoint {
    int slice_id = 0;
    Date end_date{};
    BandStats stats;
    int n_seeds = 0;
};

struct SeedBand {
    std::string instrument;
    std::string label;
    std::vector<BandPoint> points;
};

/// Splits by seed, rejects ragged slice coverage, runs the pipeline per seed
/// and aggregates.
SeedBand build_band(const AffectSeries& series, const SeriesOptions& options);

/// Groups score rows by (instrument, label); `end_dates` maps slice ids to
/// the slice end date.
std::vector<AffectSeries> assemble_series(std::span<const ScoreRow> rows, const std::map<int, Date>& end_dates);

/// Header: instrument,option,slice_id,end_date,mean,min,max,n_seeds.
void write_series(std::ostream& out, std::span<const SeedBand> bands);
std::vector<SeedBand> read_series(const std::filesystem::path& path);

struct PlotOverlay {
    std::string name;
    std::vector<std::pair<Date, double>> points;
};

struct PlotOptions {
    std::string title;
    int width = 720;
    int height = 360;
    std::optional<PlotOverlay> overlay;  // e.g. a reference survey track
};

/// Static SVG line chart of the band mean with a shaded min-max band.
std::string render_svg(const SeedBand& band, const PlotOptions& options);

}  // namespace tempad
