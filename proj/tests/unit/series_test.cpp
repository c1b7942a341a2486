// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include <sstream>

#include "doctest.h"
#include "support/test_util.hpp"
#include "tempad/io.hpp"
#include "tempad/rng.hpp"
#include "tempad/series.hpp"

using namespace tempad;

namespace {

AffectSeries three_seed_series(std::size_t n_slices) {
    AffectSeries s{"mood_weekly", "happy", {}};
    Rng rng(1);
    const Date start = parse_date("2020-01-06");
    for (std::size_t i = 0; i < n_slices; ++i) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            s.points.push_back({static_cast<int>(i), start + std::chrono::days(7 * i), seed, rng.uniform01()});
        }
    }
    return s;
}

}  // namespace

TEST_SUITE("series") {

TEST_CASE("rolling mean") {
    const std::vector<double> v{0, 3, 6, 9};
    CHECK(rolling_mean(v, 3) == std::vector<double>{0, 1.5, 3, 6});
    CHECK(rolling_mean(v, 1) == v);
    const std::vector<double> flat(6, 0.7);
    CHECK(rolling_mean(flat, 3) == flat);
    CHECK(testing::error_category([] { rolling_mean(std::vector<double>{}, 3); }) == ErrorCategory::empty_input);
    CHECK(testing::error_category([&] { rolling_mean(v, 0); }) == ErrorCategory::invalid_argument);
}

TEST_CASE("min-max normalisation") {
    CHECK(min_max_normalize(std::vector<double>{2, 4, 6}) == std::vector<double>{0, 0.5, 1});
    const std::vector<double> unit{0, 0.25, 1, 0.5};
    CHECK(min_max_normalize(unit) == unit);
    CHECK(testing::error_category([] { min_max_normalize(std::vector<double>{3, 3, 3}); }) ==
          ErrorCategory::degenerate);
}

TEST_CASE("pipeline order") {
    const std::vector<double> v{1, 5, 2, 8, 3};
    SeriesOptions o;
    const auto a = transform_track(v, o);
    CHECK(a == min_max_normalize(rolling_mean(v, 3)));
    o.order = PipelineOrder::normalize_then_smooth;
    CHECK(transform_track(v, o) == rolling_mean(min_max_normalize(v), 3));
    o.smooth = false;
    o.normalize = false;
    CHECK(transform_track(v, o) == v);
    CHECK(parse_pipeline_order(pipeline_order_name(PipelineOrder::normalize_then_smooth)) ==
          PipelineOrder::normalize_then_smooth);
}

TEST_CASE("idempotence and affine invariance over random series") {
    Rng rng(17);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> v(2 + rng.uniform_index(40));
        for (auto& x : v) {
            x = rng.normal();
        }
        const auto n = min_max_normalize(v);
        const auto nn = min_max_normalize(n);
        const double a = 0.1 + 10.0 * rng.uniform01();
        const double b = rng.normal() * 5.0;
        std::vector<double> t(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            t[i] = a * v[i] + b;
        }
        const auto nt = min_max_normalize(t);
        double idem = 0.0;
        double affine = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            idem = std::max(idem, std::abs(nn[i] - n[i]));
            affine = std::max(affine, std::abs(nt[i] - n[i]));
        }
        CHECK(idem < 1e-12);
        CHECK(affine < 1e-9);
    }
}

TEST_CASE("seed aggregation") {
    const std::vector<std::vector<double>> one{{0.3, 0.5}};
    const auto s1 = seed_aggregate(one);
    CHECK(s1[0].mean == 0.3);
    CHECK(s1[0].min == 0.3);
    CHECK(s1[0].max == 0.3);
    const std::vector<std::vector<double>> three{{0.2}, {0.4}, {0.6}};
    const auto s3 = seed_aggregate(three);
    CHECK(s3[0].mean == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(s3[0].min == 0.2);
    CHECK(s3[0].max == 0.6);
    const std::vector<std::vector<double>> ragged{{0.2}, {0.4, 0.1}};
    CHECK(testing::error_category([&] { seed_aggregate(ragged); }).has_value());
}

TEST_CASE("bands are ordered and deterministic") {
    const auto s = three_seed_series(10);
    const auto a = build_band(s, SeriesOptions{});
    const auto b = build_band(s, SeriesOptions{});
    REQUIRE(a.points.size() == 10);
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        const auto& p = a.points[i];
        CHECK(p.stats.min <= p.stats.mean);
        CHECK(p.stats.mean <= p.stats.max);
        CHECK(p.n_seeds == 3);
        CHECK(p.stats.mean == b.points[i].stats.mean);
    }
    auto ragged = s;
    ragged.points.pop_back();
    CHECK(testing::error_category([&] { build_band(ragged, SeriesOptions{}); }).has_value());
}

TEST_CASE("score rows assemble into dated series") {
    std::vector<ScoreRow> rows;
    for (int slice = 0; slice < 3; ++slice) {
        for (std::uint64_t seed = 0; seed < 2; ++seed) {
            rows.push_back({"mood_weekly", slice, seed, "happy", 1.0, 0.1L * (slice + 1), -1.0});
            rows.push_back({"mood_weekly", slice, seed, "sad", 1.0, 0.2L, -1.0});
        }
    }
    const std::map<int, Date> dates{{0, parse_date("2020-01-07")}, {1, parse_date("2020-01-14")},
                                    {2, parse_date("2020-01-21")}};
    const auto series = assemble_series(rows, dates);
    REQUIRE(series.size() == 2);
    CHECK(series[0].label == "happy");
    CHECK(series[0].points.size() == 6);
    CHECK(series[0].points[2].end_date == dates.at(1));
    const std::map<int, Date> missing{{0, parse_date("2020-01-07")}};
    CHECK(testing::error_category([&] { assemble_series(rows, missing); }).has_value());
}

TEST_CASE("series CSV and SVG") {
    testing::TempDir dir("series");
    const auto band = build_band(three_seed_series(5), SeriesOptions{});
    std::ostringstream out;
    write_series(out, std::vector<SeedBand>{band});
    write_file_atomic(dir / "series.csv", out.str());
    const auto back = read_series(dir / "series.csv");
    REQUIRE(back.size() == 1);
    REQUIRE(back[0].points.size() == 5);
    CHECK(back[0].points[3].stats.mean == band.points[3].stats.mean);
    CHECK(back[0].points[3].end_date == band.points[3].end_date);

    PlotOptions po;
    po.title = "happy <weekly>";
    po.overlay = PlotOverlay{"reference", {{band.points[0].end_date, 0.5}, {band.points[4].end_date, 0.7}}};
    const std::string svg = render_svg(band, po);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("<polygon") != std::string::npos);
    CHECK(svg.find("happy &lt;weekly&gt;") != std::string::npos);
    CHECK(svg.find("stroke-dasharray") != std::string::npos);
}

}  // TEST_SUITE
