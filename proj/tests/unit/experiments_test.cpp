// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "support/test_util.hpp"
#include "tempad/experiments.hpp"
#include "tempad/io.hpp"

using namespace tempad;

namespace {

MixExperimentConfig quick() {
    MixExperimentConfig c = MixExperimentConfig::ci();
    c.train.max_steps = 6;
    c.train.checkpoint_every = 3;
    c.permutations = 99;
    return c;
}

std::size_t rows_for(const CellResult& cell, const std::string& option) {
    std::size_t n = 0;
    for (const auto& r : cell.rows) {
        n += r.label == option ? 1 : 0;
    }
    return n;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("preset sizes") {
    const auto paper = MixExperimentConfig::paper();
    CHECK(paper.fractions.size() * static_cast<std::size_t>(paper.seeds) == 110);
    CHECK(paper.docs_per_split == 1163);
    CHECK(paper.lora.rank == 128);
    CHECK(paper.train.learning_rate == 5e-6);
    CHECK(paper.chunk_len == 512);
    const auto desk = MixExperimentConfig::desk();
    CHECK(desk.fractions.size() == 11);
    CHECK(desk.seeds >= 5);
    CHECK(desk.train.max_steps >= 200);
    CHECK(desk.permutations == 10000);
    CHECK_NOTHROW(desk.validate());
    CHECK_NOTHROW(MixExperimentConfig::ci().validate());
    CHECK(testing::error_category([] { MixExperimentConfig::preset("huge"); }) == ErrorCategory::invalid_argument);
}

TEST_CASE("config validation") {
    auto c = quick();
    c.fractions = {0.5, 0.2};
    CHECK(testing::error_category([&] { c.validate(); }) == ErrorCategory::invalid_argument);
    c = quick();
    c.model.max_seq_len = 64;
    c.chunk_len = 64;
    // The mood prompt does not fit in 64 positions.
    CHECK(testing::error_category([&] { c.validate(); }) == ErrorCategory::invalid_argument);
    c = quick();
    c.instrument = "panasx_week";
    CHECK(testing::error_category([&] { c.validate(); }) == ErrorCategory::invalid_argument);
}

TEST_CASE("two fractions and two seeds make four runs") {
    auto c = quick();
    c.fractions = {0.0, 1.0};
    const auto r = run_mix_experiment(c, RunOptions{});
    CHECK(r.adapters_trained == 4);
    CHECK(r.runs_scored == 4);
    REQUIRE(r.cells.size() == 1);
    CHECK(rows_for(r.cells[0], "happy") == 4);
    CHECK(rows_for(r.cells[0], "sad") == 4);
    CHECK(r.cells[0].summary.size() == 2);
    CHECK(r.cells[0].splits.size() == 2 * 2);
}

TEST_CASE("a one-cell sweep equals the plain experiment") {
    const auto c = quick();
    const auto plain = run_mix_experiment(c, RunOptions{});
    const auto swept = run_sweep(SweepConfig::single(c), c, RunOptions{});
    REQUIRE(swept.cells.size() == 1);
    REQUIRE(plain.cells[0].summary.size() == swept.cells[0].summary.size());
    for (std::size_t i = 0; i < plain.cells[0].summary.size(); ++i) {
        CHECK(plain.cells[0].summary[i].r == swept.cells[0].summary[i].r);
        CHECK(plain.cells[0].summary[i].p == swept.cells[0].summary[i].p);
    }
    std::ostringstream a;
    std::ostringstream b;
    write_summary(a, plain);
    write_summary(b, swept);
    CHECK(a.str() == b.str());
}

TEST_CASE("sweep trains once per learning rate and resumes from disk") {
    testing::TempDir dir("sweep");
    const auto c = quick();
    SweepConfig s;
    s.checkpoints = {3, 6};
    s.temperatures = {0.5, 2.0};
    CHECK(s.cell_count() == 4);
    RunOptions o;
    o.out_dir = dir.path();
    o.jobs = 2;
    const auto first = run_sweep(s, c, o);
    const int runs = static_cast<int>(c.fractions.size()) * c.seeds;
    CHECK(first.adapters_trained == runs);
    CHECK(first.adapters_reused == 0);
    CHECK(first.runs_scored == 4 * runs);
    CHECK(first.cells.size() == 4);
    CHECK(std::filesystem::exists(dir / "mix_ci" / "summary.csv"));

    const auto second = run_sweep(s, c, o);
    CHECK(second.adapters_trained == 0);
    CHECK(second.adapters_reused == runs);
    std::ostringstream a;
    std::ostringstream b;
    write_summary(a, first);
    write_summary(b, second);
    CHECK(a.str() == b.str());

    o.jobs = 1;
    o.force = true;
    const auto third = run_sweep(s, c, o);
    CHECK(third.adapters_trained == runs);
    std::ostringstream d;
    write_summary(d, third);
    CHECK(d.str() == a.str());
}

TEST_CASE("split statistics") {
    auto c = quick();
    c.fractions = {0.0, 0.5, 1.0};
    std::vector<ScoreRow> rows;
    // seed 0: happy 0.1, 0.2, 0.3; seed 1: 0.2, 0.4, 0.6.
    for (int split = 0; split < 3; ++split) {
        for (std::uint64_t seed = 0; seed < 2; ++seed) {
            const long double v = 0.1L * (split + 1) * (seed + 1);
            rows.push_back({"mood_weekly", split, c.base_seed + seed, "happy", 1.0, v, std::log(static_cast<double>(v))});
            rows.push_back(
                {"mood_weekly", split, c.base_seed + seed, "sad", 1.0, 0.9L - v, std::log(static_cast<double>(0.9L - v))});
        }
    }
    const auto stats = split_stats(c, rows);
    const SplitStats* mid = nullptr;
    for (const auto& s : stats) {
        if (s.option == "happy" && s.split == 1) {
            mid = &s;
        }
    }
    REQUIRE(mid != nullptr);
    CHECK(mid->mean == doctest::Approx(0.3));
    CHECK(mid->norm_mean == doctest::Approx(0.5));
    CHECK(mid->norm_stddev == doctest::Approx(0.0).epsilon(1e-12));
    // Sample standard deviation of {0.2, 0.4}.
    CHECK(mid->stddev == doctest::Approx(std::sqrt(0.02)));
    const auto summary = summarize_mix(c, stats, 1);
    REQUIRE(summary.size() == 2);
    CHECK(summary[0].option == "happy");
    CHECK(summary[0].r == doctest::Approx(1.0));
    CHECK(summary[1].r == doctest::Approx(-1.0));
}

TEST_CASE("a flat score track reports no correlation") {
    auto c = quick();
    c.fractions = {0.0, 1.0};
    std::vector<SplitStats> stats;
    for (int split = 0; split < 2; ++split) {
        for (const auto& option : c.options) {
            SplitStats st;
            st.split = split;
            st.fraction = c.fractions[static_cast<std::size_t>(split)];
            st.option = option;
            st.norm_mean = 0.5;
            stats.push_back(st);
        }
    }
    const auto summary = summarize_mix(c, stats, 1);
    REQUIRE(summary.size() == 2);
    CHECK(std::isnan(summary[0].r));
    CHECK(summary[0].p == 1.0);
}

TEST_CASE("json overrides") {
    auto c = MixExperimentConfig::ci();
    apply_mix_overrides(c, R"({"seeds": 4, "train": {"learning_rate": 0.01}, "lora": {"rank": 2}})", "mem");
    CHECK(c.seeds == 4);
    CHECK(c.train.learning_rate == 0.01);
    CHECK(c.lora.rank == 2);
    CHECK(testing::error_category([&] { apply_mix_overrides(c, R"({"sedes": 4})", "mem"); }) ==
          ErrorCategory::schema);
    CHECK(testing::error_category([&] { apply_mix_overrides(c, R"({"train": {"lr": 1}})", "mem"); }) ==
          ErrorCategory::schema);
    CHECK(testing::error_category([&] { apply_mix_overrides(c, "{", "mem"); }) == ErrorCategory::parse);

    // Printing and re-reading a config reproduces it.
    auto d = MixExperimentConfig::ci();
    apply_mix_overrides(d, mix_config_to_json(c), "roundtrip");
    CHECK(mix_config_to_json(d) == mix_config_to_json(c));

    SweepConfig s;
    apply_sweep_overrides(s, R"({"sweep": {"checkpoints": [10, 20], "casings": ["lower"]}})", "mem");
    CHECK(s.checkpoints == std::vector<std::int64_t>{10, 20});
    CHECK(s.casings == std::vector<OptionCasing>{OptionCasing::lower});

    SeriesOptions o;
    apply_series_overrides(o, R"({"series": {"window": 5, "pipeline_order": "normalize_then_smooth"}})", "mem");
    CHECK(o.window == 5);
    CHECK(o.order == PipelineOrder::normalize_then_smooth);
    CHECK(testing::error_category([&] { apply_series_overrides(o, R"({"series": {"win": 5}})", "mem"); }) ==
          ErrorCategory::schema);
}

TEST_CASE("cell names are stable") {
    ScoringCell cell;
    cell.checkpoint = 50;
    cell.temperature = 0.25;
    cell.prefix = false;
    cell.casing = OptionCasing::capitalized;
    CHECK(cell_name(5e-6, cell) == "lr5e-06_step50_t0.25_noprefix_capitalized");
    CHECK(SweepConfig::desk().cell_count() == 3 * 3 * 2 * 2);
}

}  // TEST_SUITE
