// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tempad/adapters.hpp"
#include "tempad/model.hpp"
#include "tempad/series.hpp"
#include "tempad/survey.hpp"
#include "tempad/trainer.hpp"

namespace tempad::inline TEMPAD_PRECISION_NS {

/// The synthetic-mix study: adapters trained on corpora whose share of
/// first-label (happy) documents sweeps a grid of fractions.
struct MixExperimentConfig {
    std::string name = "mix";
    std::vector<double> fractions;
    std::size_t docs_per_split = 400;
    int seeds = 5;
    std::uint64_t base_seed = 0;  // seeds used are base_seed, base_seed+1, ...

    // Synthetic pools.
    std::string first_label = "happy";
    std::string second_label = "sad";
    std::size_t pool_per_label = 1200;
    std::uint64_t corpus_seed = 11;
    std::optional<std::filesystem::path> templates;  // default templates when unset

    ModelConfig model;
    std::optional<std::filesystem::path> base_model;  // init_model(model) when unset
    LoraConfig lora;
    TrainConfig train;
    std::size_t chunk_len = 128;

    std::string instrument = "mood_weekly";
    std::vector<std::string> options{"happy", "sad"};
    double temperature = 1.0;
    bool use_prefix = true;
    OptionCasing casing = OptionCasing::as_is;
    int permutations = 10000;

    void validate() const;

    /// 3 splits x 2 seeds on a one-layer model; seconds, for tests.
    static MixExperimentConfig ci();
    /// 11 splits x 5 seeds, 2 layers, d_model 64, 200 steps.
    static MixExperimentConfig desk();
    /// 11 splits x 10 seeds, 1163 documents, rank 128, lr 5e-6, batch 6,
    /// 4 accumulation steps, 512-token chunks, 50 steps, desk model.
    static MixExperimentConfig paper();
    static MixExperimentConfig preset(std::string_view name);
};

/// Scoring settings applied to already trained adapters.
struct ScoringCell {
    std::int64_t checkpoint = 0;  // optimizer step of the snapshot scored
    double temperature = 1.0;
    bool prefix = true;
    OptionCasing casing = OptionCasing::as_is;
};

/// Cartesian grid. Empty `checkpoints` means the final step only; empty
/// `learning_rates` means the mix config's rate.
struct SweepConfig {
    std::vector<std::int64_t> checkpoints;
    std::vector<double> learning_rates;
    std::vector<double> temperatures{1.0};
    std::vector<bool> prefixes{true};
    std::vector<OptionCasing> casings{OptionCasing::as_is};

    void validate() const;
    std::size_t cell_count() const;

    /// Checkpoints 50/100/150, temperatures 0.25/1/4, prefix on/off,
    /// lowercase and capitalised options.
    static SweepConfig desk();
    /// The single cell run_mix_experiment uses for `config`.
    static SweepConfig single(const MixExperimentConfig& config);
};

struct SplitStats {
    int split = 0;
    double fraction = 0.0;
    std::string option;
    double mean = 0.0;  // raw probability across seeds
    double stddev = 0.0;
    double norm_mean = 0.0;  // after per-seed min-max over splits
    double norm_stddev = 0.0;
};

struct MixSummary {
    std::string option;
    double r = 0.0;  // Pearson(fraction, norm_mean)
    double p = 1.0;
    int n_splits = 0;
    int n_seeds = 0;
};

struct CellResult {
    std::string name;
    double learning_rate = 0.0;
    ScoringCell scoring;
    std::vector<ScoreRow> rows;  // slice_id holds the split index
    std::vector<SplitStats> splits;
    std::vector<MixSummary> summary;
};

struct ExperimentResult {
    std::vector<CellResult> cells;
    int adapters_trained = 0;
    int adapters_reused = 0;  // loaded from a previous run's checkpoints
    int runs_scored = 0;      // (cell, split, seed) scorings
};

struct RunOptions {
    std::filesystem::path out_dir;  // empty: keep everything in memory
    int jobs = 1;
    bool force = false;
    std::function<void(const std::string&)> progress;
};

std::string cell_name(double learning_rate, const ScoringCell& cell);

/// Splits, seeds, options and scoring are reduced into per-split stats and a
/// fraction-vs-score correlation per option of interest.
std::vector<SplitStats> split_stats(const MixExperimentConfig& config, const std::vector<ScoreRow>& rows);
std::vector<MixSummary> summarize_mix(const MixExperimentConfig& config, const std::vector<SplitStats>& splits,
                                      std::uint64_t seed);

/// Trains splits x seeds adapters per learning rate once, then scores every
/// cell from saved snapshots.
ExperimentResult run_sweep(const SweepConfig& sweep, const MixExperimentConfig& config, const RunOptions& options);
ExperimentResult run_mix_experiment(const MixExperimentConfig& config, const RunOptions& options);

/// Header: cell,learning_rate,checkpoint,temperature,prefix,casing,option,r,p,
/// n_splits,n_seeds.
void write_summary(std::ostream& out, const ExperimentResult& result);
/// Header: split,fraction,option,mean,stddev,norm_mean,norm_stddev.
void write_split_stats(std::ostream& out, const CellResult& cell);

/// JSON overrides on top of a preset. Unknown keys are schema errors.
void apply_mix_overrides(MixExperimentConfig& config, std::string_view json, const std::string& source);
void apply_sweep_overrides(SweepConfig& sweep, std::string_view json, const std::string& source);
/// Reads the optional "series" block (window, pipeline_order, smooth,
/// normalize) shared by the series and validate commands.
void apply_series_overrides(SeriesOptions& options, std::string_view json, const std::string& source);
std::string mix_config_to_json(const MixExperimentConfig& config);
std::string sweep_config_to_json(const SweepConfig& sweep);

}  // namespace tempad
