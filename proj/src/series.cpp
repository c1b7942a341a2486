// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include "tempad/series.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "tempad/error.hpp"
#include "tempad/io.hpp"

namespace tempad {

namespace {

std::string xml_escape(std::string_view s) {
    std::string out;
    for (const char c : s) {
        switch (c) {
        case '&':
            out += "&amp;";
            break;
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

std::string fixed2(double v) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(2);
    ss << v;
    return ss.str();
}

}  // namespace

void AffectSeries::validate() const {
    std::set<std::pair<int, std::uint64_t>> seen;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        require(seen.emplace(p.slice_id, p.seed).second, ErrorCategory::schema,
                label + ": repeated point for slice " + std::to_string(p.slice_id) + ", seed " + std::to_string(p.seed));
        if (i > 0) {
            const auto& q = points[i - 1];
            require(std::tie(q.end_date, q.seed) < std::tie(p.end_date, p.seed), ErrorCategory::schema,
                    label + ": points are not sorted by end date");
        }
    }
}

std::vector<double> rolling_mean(std::span<const double> values, int window) {
    require(window >= 1, ErrorCategory::invalid_argument, "rolling window must be >= 1");
    require(!values.empty(), ErrorCategory::empty_input, "rolling mean of an empty series");
    std::vector<double> out(values.size());
    const auto w = static_cast<std::size_t>(window);
    for (std::size_t t = 0; t < values.size(); ++t) {
        const std::size_t lo = t + 1 >= w ? t + 1 - w : 0;
        // Offsets from the first value keep a flat window exactly flat.
        double sum = 0.0;
        for (std::size_t i = lo + 1; i <= t; ++i) {
            sum += values[i] - values[lo];
        }
        out[t] = values[lo] + sum / static_cast<double>(t - lo + 1);
    }
    return out;
}

std::vector<double> min_max_normalize(std::span<const double> values) {
    require(values.size() >= 2, ErrorCategory::insufficient_data, "min-max normalisation needs at least two points");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    require(std::isfinite(lo) && std::isfinite(hi), ErrorCategory::numeric, "non-finite value in series");
    require(hi > lo, ErrorCategory::degenerate, "constant series cannot be min-max normalised");
    std::vector<double> out(values.size());
    const double range = hi - lo;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out[i] = (values[i] - lo) / range;
    }
    return out;
}

PipelineOrder parse_pipeline_order(std::string_view name) {
    if (name == "smooth_then_normalize") {
        return PipelineOrder::smooth_then_normalize;
    }
    if (name == "normalize_then_smooth") {
        return PipelineOrder::normalize_then_smooth;
    }
    fail(ErrorCategory::invalid_argument,
         "unknown pipeline order '" + std::string(name) + "' (smooth_then_normalize, normalize_then_smooth)");
}

std::string_view pipeline_order_name(PipelineOrder order) noexcept {
    return order == PipelineOrder::smooth_then_normalize ? "smooth_then_normalize" : "normalize_then_smooth";
}

std::vector<double> transform_track(std::span<const double> values, const SeriesOptions& options) {
    std::vector<double> v(values.begin(), values.end());
    auto smooth = [&] {
        if (options.smooth) {
            v = rolling_mean(v, options.window);
        }
    };
    auto normalize = [&] {
        if (options.normalize) {
            v = min_max_normalize(v);
        }
    };
    if (options.order == PipelineOrder::smooth_then_normalize) {
        smooth();
        normalize();
    } else {
        normalize();
        smooth();
    }
    return v;
}

std::vector<BandStats> seed_aggregate(std::span<const std::vector<double>> tracks) {
    require(!tracks.empty(), ErrorCategory::empty_input, "no seed tracks to aggregate");
    const std::size_t n = tracks.front().size();
    for (const auto& t : tracks) {
        require(t.size() == n, ErrorCategory::schema, "ragged seed coverage");
    }
    std::vector<BandStats> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        double lo = tracks.front()[i];
        double hi = lo;
        for (const auto& t : tracks) {
            sum += t[i];
            lo = std::min(lo, t[i]);
            hi = std::max(hi, t[i]);
        }
        // Clamp so rounding in the mean never leaves [min, max].
        out[i] = {std::clamp(sum / static_cast<double>(tracks.size()), lo, hi), lo, hi};
    }
    return out;
}

SeedBand build_band(const AffectSeries& series, const SeriesOptions& options) {
    series.validate();
    require(!series.points.empty(), ErrorCategory::empty_input, series.label + ": empty series");
    std::map<std::uint64_t, std::vector<const SeriesPoint*>> by_seed;
    for (const auto& p : series.points) {
        by_seed[p.seed].push_back(&p);
    }
    const auto& first = by_seed.begin()->second;
    std::vector<std::vector<double>> tracks;
    for (const auto& [seed, pts] : by_seed) {
        require(pts.size() == first.size(), ErrorCategory::schema,
                series.label + ": seed " + std::to_string(seed) + " covers a different set of slices");
        std::vector<double> v;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            require(pts[i]->slice_id == first[i]->slice_id, ErrorCategory::schema,
                    series.label + ": seed " + std::to_string(seed) + " covers a different set of slices");
            v.push_back(pts[i]->value);
        }
        tracks.push_back(transform_track(v, options));
    }
    const auto stats = seed_aggregate(tracks);
    SeedBand band{series.instrument, series.label, {}};
    for (std::size_t i = 0; i < stats.size(); ++i) {
        band.points.push_back({first[i]->slice_id, first[i]->end_date, stats[i], static_cast<int>(tracks.size())});
    }
    return band;
}

std::vector<AffectSeries> assemble_series(std::span<const ScoreRow> rows, const std::map<int, Date>& end_dates) {
    std::map<std::pair<std::string, std::string>, AffectSeries> groups;
    std::vector<std::pair<std::string, std::string>> order;
    for (const auto& r : rows) {
        const auto key = std::make_pair(r.instrument, r.label);
        auto it = groups.find(key);
        if (it == groups.end()) {
            it = groups.emplace(key, AffectSeries{r.instrument, r.label, {}}).first;
            order.push_back(key);
        }
        const auto d = end_dates.find(r.slice_id);
        require(d != end_dates.end(), ErrorCategory::schema,
                "no end date known for slice " + std::to_string(r.slice_id));
        it->second.points.push_back({r.slice_id, d->second, r.seed, static_cast<double>(r.value)});
    }
    std::vector<AffectSeries> out;
    for (const auto& key : order) {
        auto s = std::move(groups[key]);
        std::stable_sort(s.points.begin(), s.points.end(), [](const SeriesPoint& a, const SeriesPoint& b) {
            return std::tie(a.end_date, a.seed) < std::tie(b.end_date, b.seed);
        });
        s.validate();
        out.push_back(std::move(s));
    }
    return out;
}

void write_series(std::ostream& out, std::span<const SeedBand> bands) {
    write_csv_preamble(out);
    out << "instrument,option,slice_id,end_date,mean,min,max,n_seeds\n";
    for (const auto& b : bands) {
        for (const auto& p : b.points) {
            out << csv_field(b.instrument) << ',' << csv_field(b.label) << ',' << p.slice_id << ','
                << format_date(p.end_date) << ',' << format_number(p.stats.mean) << ',' << format_number(p.stats.min)
                << ',' << format_number(p.stats.max) << ',' << p.n_seeds << '\n';
        }
    }
}

std::vector<SeedBand> read_series(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    const auto ci = t.column("instrument"), co = t.column("option"), cs = t.column("slice_id"),
               cd = t.column("end_date"), cm = t.column("mean"), cl = t.column("min"), ch = t.column("max"),
               cn = t.column("n_seeds");
    std::vector<SeedBand> out;
    for (const auto& r : t.rows) {
        if (out.empty() || out.back().instrument != r[ci] || out.back().label != r[co]) {
            out.push_back({r[ci], r[co], {}});
        }
        BandPoint p;
        p.slice_id = static_cast<int>(parse_int(r[cs], "slice_id"));
        p.end_date = parse_date(r[cd]);
        p.stats = {parse_double(r[cm], "mean"), parse_double(r[cl], "min"), parse_double(r[ch], "max")};
        p.n_seeds = static_cast<int>(parse_int(r[cn], "n_seeds"));
        out.back().points.push_back(p);
    }
    return out;
}

std::string render_svg(const SeedBand& band, const PlotOptions& options) {
    require(!band.points.empty(), ErrorCategory::empty_input, "nothing to plot");
    const double left = 56, right = 16, top = 32, bottom = 40;
    const double w = options.width - left - right;
    const double h = options.height - top - bottom;

    Date d0 = band.points.front().end_date;
    Date d1 = band.points.back().end_date;
    double lo = band.points.front().stats.min;
    double hi = band.points.front().stats.max;
    for (const auto& p : band.points) {
        lo = std::min(lo, p.stats.min);
        hi = std::max(hi, p.stats.max);
    }
    if (options.overlay) {
        for (const auto& [d, v] : options.overlay->points) {
            d0 = std::min(d0, d);
            d1 = std::max(d1, d);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (hi <= lo) {
        hi = lo + 1.0;
    }
    const double span_days = std::max(1.0, static_cast<double>((d1 - d0).count()));
    auto x = [&](Date d) { return left + w * static_cast<double>((d - d0).count()) / span_days; };
    auto y = [&](double v) { return top + h * (1.0 - (v - lo) / (hi - lo)); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\"" << options.height
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    const std::string title = options.title.empty() ? band.instrument + ": " + band.label : options.title;
    svg << "<text x=\"" << left << "\" y=\"20\" font-size=\"13\">" << xml_escape(title) << "</text>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top + h << "\" x2=\"" << left + w << "\" y2=\"" << top + h
        << "\" stroke=\"#444\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + h
        << "\" stroke=\"#444\"/>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">" << fixed2(hi) << "</text>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << top + h << "\" text-anchor=\"end\">" << fixed2(lo)
        << "</text>\n";
    svg << "<text x=\"" << left << "\" y=\"" << top + h + 16 << "\">" << format_date(d0) << "</text>\n";
    svg << "<text x=\"" << left + w << "\" y=\"" << top + h + 16 << "\" text-anchor=\"end\">" << format_date(d1)
        << "</text>\n";

    svg << "<polygon fill=\"#f4a261\" fill-opacity=\"0.35\" stroke=\"none\" points=\"";
    for (const auto& p : band.points) {
        svg << fixed2(x(p.end_date)) << ',' << fixed2(y(p.stats.max)) << ' ';
    }
    for (auto it = band.points.rbegin(); it != band.points.rend(); ++it) {
        svg << fixed2(x(it->end_date)) << ',' << fixed2(y(it->stats.min)) << ' ';
    }
    svg << "\"/>\n";
    svg << "<polyline fill=\"none\" stroke=\"#e76f51\" stroke-width=\"2\" points=\"";
    for (const auto& p : band.points) {
        svg << fixed2(x(p.end_date)) << ',' << fixed2(y(p.stats.mean)) << ' ';
    }
    svg << "\"/>\n";
    if (options.overlay) {
        svg << "<polyline fill=\"none\" stroke=\"#264653\" stroke-width=\"1.5\" stroke-dasharray=\"4 3\" points=\"";
        for (const auto& [d, v] : options.overlay->points) {
            svg << fixed2(x(d)) << ',' << fixed2(y(v)) << ' ';
        }
        svg << "\"/>\n";
        svg << "<text x=\"" << left + w << "\" y=\"20\" text-anchor=\"end\" fill=\"#264653\">"
            << xml_escape(options.overlay->name) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace tempad
