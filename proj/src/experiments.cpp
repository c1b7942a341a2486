// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include "tempad/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "tempad/corpus.hpp"
#include "tempad/error.hpp"
#include "tempad/io.hpp"
#include "tempad/rng.hpp"
#include "tempad/series.hpp"
#include "tempad/stats.hpp"
#include "tempad/tokenizer.hpp"

namespace tempad::inline TEMPAD_PRECISION_NS {

namespace {

using nlohmann::json;

// Stream tags keep the seeds of different draws apart.
constexpr std::uint64_t tag_mix = 0x6d6978;
constexpr std::uint64_t tag_pack = 0x7061636b;
constexpr std::uint64_t tag_adapter = 0x6c6f7261;
constexpr std::uint64_t tag_train = 0x747261696e;
constexpr std::uint64_t tag_summary = 0x73756d;

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results must go into
// pre-sized slots so the outcome does not depend on scheduling; the first
// failure by index is rethrown.
template <typename F>
void parallel_for(std::size_t n, int jobs, F&& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const auto workers = static_cast<std::size_t>(std::clamp<long>(jobs, 1, static_cast<long>(std::max<std::size_t>(n, 1))));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::string run_dir_name(int split, std::uint64_t seed) { return std::to_string(split) + "_" + std::to_string(seed); }

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, std::int64_t step) {
    return dir / ("step_" + std::to_string(step) + ".tada");
}

std::string train_dir_name(double lr) { return "train_lr" + format_number(lr); }

double sample_stddev(std::span<const double> v, double mean) {
    if (v.size() < 2) {
        return 0.0;
    }
    double ss = 0.0;
    for (const double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// --- JSON helpers -----------------------------------------------------------

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    require(obj.is_object(), ErrorCategory::schema, where + ": expected an object");
    for (const auto& [key, value] : obj.items()) {
        require(allowed.count(key) > 0, ErrorCategory::schema, where + ": unknown key '" + key + "'");
    }
}

template <typename T>
void take(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) {
        out = obj.at(key).get<T>();
    }
}

void apply_model(const json& j, ModelConfig& m, const std::string& src) {
    check_keys(j, {"n_layers", "n_heads", "d_model", "d_ff", "vocab_size", "max_seq_len", "init_seed"}, src + ".model");
    take(j, "n_layers", m.n_layers);
    take(j, "n_heads", m.n_heads);
    take(j, "d_model", m.d_model);
    take(j, "d_ff", m.d_ff);
    take(j, "vocab_size", m.vocab_size);
    take(j, "max_seq_len", m.max_seq_len);
    take(j, "init_seed", m.init_seed);
}

void apply_lora(const json& j, LoraConfig& l, const std::string& src) {
    check_keys(j, {"rank", "alpha", "targets"}, src + ".lora");
    take(j, "rank", l.rank);
    take(j, "alpha", l.alpha);
    if (j.contains("targets")) {
        l.targets.clear();
        for (const auto& t : j.at("targets")) {
            l.targets.push_back(parse_projection(t.get<std::string>()));
        }
    }
}

void apply_train(const json& j, TrainConfig& t, const std::string& src) {
    check_keys(j,
               {"learning_rate", "batch_size", "grad_accum_steps", "max_steps", "checkpoint_every", "max_epochs",
                "stop_mode", "seed", "adamw"},
               src + ".train");
    take(j, "learning_rate", t.learning_rate);
    take(j, "batch_size", t.batch_size);
    take(j, "grad_accum_steps", t.grad_accum_steps);
    take(j, "max_steps", t.max_steps);
    take(j, "checkpoint_every", t.checkpoint_every);
    take(j, "max_epochs", t.max_epochs);
    take(j, "seed", t.seed);
    if (j.contains("stop_mode")) {
        const auto m = j.at("stop_mode").get<std::string>();
        require(m == "steps" || m == "epochs", ErrorCategory::schema, src + ": stop_mode must be steps or epochs");
        t.stop_mode = m == "steps" ? StopMode::steps : StopMode::epochs;
    }
    if (j.contains("adamw")) {
        const json& a = j.at("adamw");
        check_keys(a, {"beta1", "beta2", "eps", "weight_decay"}, src + ".train.adamw");
        take(a, "beta1", t.adamw.beta1);
        take(a, "beta2", t.adamw.beta2);
        take(a, "eps", t.adamw.eps);
        take(a, "weight_decay", t.adamw.weight_decay);
    }
}

json model_json(const ModelConfig& m) {
    return {{"n_layers", m.n_layers}, {"n_heads", m.n_heads},         {"d_model", m.d_model},
            {"d_ff", m.d_ff},         {"vocab_size", m.vocab_size}, {"max_seq_len", m.max_seq_len},
            {"init_seed", m.init_seed}};
}

json train_json(const TrainConfig& t) {
    return {{"learning_rate", t.learning_rate},
            {"batch_size", t.batch_size},
            {"grad_accum_steps", t.grad_accum_steps},
            {"max_steps", t.max_steps},
            {"checkpoint_every", t.checkpoint_every},
            {"max_epochs", t.max_epochs},
            {"stop_mode", t.stop_mode == StopMode::steps ? "steps" : "epochs"},
            {"seed", t.seed},
            {"adamw",
             {{"beta1", t.adamw.beta1},
              {"beta2", t.adamw.beta2},
              {"eps", t.adamw.eps},
              {"weight_decay", t.adamw.weight_decay}}}};
}

}  // namespace

// --- configs ----------------------------------------------------------------

void MixExperimentConfig::validate() const {
    require(!name.empty() && name.find('/') == std::string::npos, ErrorCategory::invalid_argument,
            "experiment name must be a plain, non-empty file name");
    require(fractions.size() >= 2, ErrorCategory::invalid_argument, "need at least two mix fractions");
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        require(fractions[i] >= 0.0 && fractions[i] <= 1.0, ErrorCategory::invalid_argument,
                "mix fractions must lie in [0, 1]");
        require(i == 0 || fractions[i] > fractions[i - 1], ErrorCategory::invalid_argument,
                "mix fractions must increase strictly");
    }
    require(seeds >= 2, ErrorCategory::invalid_argument, "need at least two training seeds");
    require(docs_per_split > 0, ErrorCategory::invalid_argument, "docs_per_split must be positive");
    require(pool_per_label >= docs_per_split, ErrorCategory::invalid_argument,
            "pool_per_label must cover docs_per_split");
    require(first_label != second_label, ErrorCategory::invalid_argument, "the two pool labels must differ");
    model.validate();
    train.validate();
    require(train.max_steps > 0, ErrorCategory::invalid_argument, "mix experiments need max_steps > 0");
    require(chunk_len >= 2 && chunk_len <= static_cast<std::size_t>(model.max_seq_len),
            ErrorCategory::invalid_argument, "chunk_len must be in [2, max_seq_len]");
    require(temperature > 0.0, ErrorCategory::invalid_argument, "temperature must be positive");
    require(permutations >= 1, ErrorCategory::invalid_argument, "permutations must be >= 1");
    require(!options.empty(), ErrorCategory::invalid_argument, "no options of interest");
    const Instrument inst = resolve_instrument(instrument);
    require(inst.scoring == Scoring::direct, ErrorCategory::invalid_argument,
            "mix experiments score a direct (multiple choice) instrument");
    for (const auto& o : options) {
        require(std::find(inst.options.begin(), inst.options.end(), o) != inst.options.end(),
                ErrorCategory::invalid_argument, "option '" + o + "' is not in instrument " + inst.id);
    }
    std::size_t longest = 0;
    for (const auto& p : build_prompts(with_casing(inst, casing))) {
        longest = std::max(longest, p.tokens.size());
    }
    require(longest <= static_cast<std::size_t>(model.max_seq_len), ErrorCategory::invalid_argument,
            "prompts of " + inst.id + " need max_seq_len >= " + std::to_string(longest));
}

MixExperimentConfig MixExperimentConfig::ci() {
    MixExperimentConfig c;
    c.name = "mix_ci";
    c.fractions = {0.0, 0.5, 1.0};
    c.seeds = 2;
    c.docs_per_split = 120;
    c.pool_per_label = 200;
    c.model.n_layers = 1;
    c.model.n_heads = 2;
    c.model.d_model = 32;
    c.model.d_ff = 64;
    c.model.max_seq_len = 128;
    c.model.init_seed = 1;
    c.chunk_len = 64;
    c.train.learning_rate = 3e-3;
    c.train.batch_size = 4;
    c.train.grad_accum_steps = 1;
    c.train.max_steps = 30;
    c.train.checkpoint_every = 10;
    c.permutations = 999;
    return c;
}

MixExperimentConfig MixExperimentConfig::desk() {
    MixExperimentConfig c;
    c.name = "mix_desk";
    c.fractions = preset_mix_fractions();
    c.seeds = 5;
    c.docs_per_split = 400;
    c.pool_per_label = 1200;
    c.model.n_layers = 2;
    c.model.n_heads = 4;
    c.model.d_model = 64;
    c.model.d_ff = 256;
    c.model.max_seq_len = 128;
    c.model.init_seed = 1;
    c.chunk_len = 128;
    c.train.learning_rate = 2e-3;
    c.train.batch_size = 4;
    c.train.grad_accum_steps = 1;
    c.train.max_steps = 200;
    c.train.checkpoint_every = 50;
    c.permutations = 10000;
    return c;
}

MixExperimentConfig MixExperimentConfig::paper() {
    MixExperimentConfig c;
    c.name = "mix_paper";
    c.fractions = preset_mix_fractions();
    c.seeds = 10;
    c.docs_per_split = 1163;
    c.pool_per_label = 1326;
    c.model = ModelConfig::desk();
    c.model.init_seed = 1;
    c.lora.rank = 128;
    c.lora.alpha = 256.0;
    c.train = TrainConfig::paper();
    c.train.max_steps = 50;
    c.train.checkpoint_every = 50;
    c.chunk_len = 512;
    c.permutations = 10000;
    return c;
}

MixExperimentConfig MixExperimentConfig::preset(std::string_view name) {
    if (name == "ci") {
        return ci();
    }
    if (name == "desk") {
        return desk();
    }
    if (name == "paper") {
        return paper();
    }
    fail(ErrorCategory::invalid_argument, "unknown preset '" + std::string(name) + "' (ci, desk, paper)");
}

void SweepConfig::validate() const {
    require(!temperatures.empty() && !prefixes.empty() && !casings.empty(), ErrorCategory::invalid_argument,
            "sweep grid has an empty axis");
    for (const auto c : checkpoints) {
        require(c > 0, ErrorCategory::invalid_argument, "checkpoints must be positive steps");
    }
    for (const auto lr : learning_rates) {
        require(lr > 0.0 && std::isfinite(lr), ErrorCategory::invalid_argument, "learning rates must be positive");
    }
    for (const auto t : temperatures) {
        require(t > 0.0 && std::isfinite(t), ErrorCategory::invalid_argument, "temperatures must be positive");
    }
}

std::size_t SweepConfig::cell_count() const {
    return std::max<std::size_t>(checkpoints.size(), 1) * std::max<std::size_t>(learning_rates.size(), 1) *
           temperatures.size() * prefixes.size() * casings.size();
}

SweepConfig SweepConfig::desk() {
    SweepConfig s;
    s.checkpoints = {50, 100, 150};
    s.temperatures = {0.25, 1.0, 4.0};
    s.prefixes = {true, false};
    s.casings = {OptionCasing::lower, OptionCasing::capitalized};
    return s;
}

SweepConfig SweepConfig::single(const MixExperimentConfig& config) {
    SweepConfig s;
    s.checkpoints = {config.train.max_steps};
    s.learning_rates = {config.train.learning_rate};
    s.temperatures = {config.temperature};
    s.prefixes = {config.use_prefix};
    s.casings = {config.casing};
    return s;
}

std::string cell_name(double learning_rate, const ScoringCell& cell) {
    return "lr" + format_number(learning_rate) + "_step" + std::to_string(cell.checkpoint) + "_t" +
           format_number(cell.temperature) + (cell.prefix ? "_prefix_" : "_noprefix_") +
           std::string(casing_name(cell.casing));
}

// --- reductions -------------------------------------------------------------

std::vector<SplitStats> split_stats(const MixExperimentConfig& config, const std::vector<ScoreRow>& rows) {
    const auto n_splits = config.fractions.size();
    std::vector<std::uint64_t> seeds;
    for (int s = 0; s < config.seeds; ++s) {
        seeds.push_back(config.base_seed + static_cast<std::uint64_t>(s));
    }
    std::vector<SplitStats> out;
    for (const auto& option : config.options) {
        // values[seed][split]
        std::vector<std::vector<double>> values(seeds.size(), std::vector<double>(n_splits, std::nan("")));
        for (const auto& r : rows) {
            if (r.label != option) {
                continue;
            }
            const auto si = std::find(seeds.begin(), seeds.end(), r.seed) - seeds.begin();
            require(si < static_cast<long>(seeds.size()) && r.slice_id >= 0 &&
                        r.slice_id < static_cast<int>(n_splits),
                    ErrorCategory::schema, "score row outside the experiment grid");
            values[static_cast<std::size_t>(si)][static_cast<std::size_t>(r.slice_id)] = static_cast<double>(r.value);
        }
        std::vector<std::vector<double>> normalized;
        for (const auto& v : values) {
            for (const double x : v) {
                require(!std::isnan(x), ErrorCategory::insufficient_data, "missing score for option " + option);
            }
            normalized.push_back(min_max_normalize(v));
        }
        for (std::size_t i = 0; i < n_splits; ++i) {
            std::vector<double> raw;
            std::vector<double> norm;
            for (std::size_t s = 0; s < seeds.size(); ++s) {
                raw.push_back(values[s][i]);
                norm.push_back(normalized[s][i]);
            }
            SplitStats st;
            st.split = static_cast<int>(i);
            st.fraction = config.fractions[i];
            st.option = option;
            st.mean = mean_of(raw);
            st.stddev = sample_stddev(raw, st.mean);
            st.norm_mean = mean_of(norm);
            st.norm_stddev = sample_stddev(norm, st.norm_mean);
            out.push_back(st);
        }
    }
    return out;
}

std::vector<MixSummary> summarize_mix(const MixExperimentConfig& config, const std::vector<SplitStats>& splits,
                                      std::uint64_t seed) {
    std::vector<MixSummary> out;
    for (const auto& option : config.options) {
        std::vector<double> fr;
        std::vector<double> score;
        for (const auto& s : splits) {
            if (s.option == option) {
                fr.push_back(s.fraction);
                score.push_back(s.norm_mean);
            }
        }
        MixSummary m;
        m.option = option;
        // A flat score track has no correlation; report it instead of failing the cell.
        if (std::adjacent_find(score.begin(), score.end(), std::not_equal_to<>()) == score.end()) {
            m.r = std::numeric_limits<double>::quiet_NaN();
            m.p = 1.0;
        } else {
            m.r = pearson(fr, score);
            m.p = permutation_test(score, fr, config.permutations, seed);
        }
        m.n_splits = static_cast<int>(fr.size());
        m.n_seeds = config.seeds;
        out.push_back(m);
    }
    return out;
}

// --- orchestration ----------------------------------------------------------

ExperimentResult run_sweep(const SweepConfig& sweep, const MixExperimentConfig& config, const RunOptions& options) {
    config.validate();
    sweep.validate();
    std::mutex log_mutex;
    auto log = [&](const std::string& msg) {
        if (options.progress) {
            std::lock_guard lock(log_mutex);
            options.progress(msg);
        }
    };
    const bool on_disk = !options.out_dir.empty();
    const std::filesystem::path root = on_disk ? options.out_dir / config.name : std::filesystem::path{};

    // Base model and pools.
    auto weights = std::make_shared<const ModelWeights>(config.base_model ? load_model(*config.base_model)
                                                                          : init_model(config.model));
    require(weights->config.max_seq_len >= static_cast<int>(config.chunk_len), ErrorCategory::invalid_argument,
            "chunk_len exceeds the base model's max_seq_len");
    if (on_disk) {
        std::filesystem::create_directories(root);
        write_file_atomic(root / "config.json", mix_config_to_json(config));
        write_file_atomic(root / "sweep.json", sweep_config_to_json(sweep));
    }
    const EmotionTemplates templates =
        config.templates ? load_emotion_templates(*config.templates) : default_emotion_templates();
    const auto pool = generate_synthetic_emotion_corpus(templates, config.pool_per_label, config.corpus_seed);
    const auto first_pool = filter_label(pool, config.first_label);
    const auto second_pool = filter_label(pool, config.second_label);

    std::vector<std::int64_t> steps = sweep.checkpoints;
    if (steps.empty()) {
        steps = {config.train.max_steps};
    }
    std::sort(steps.begin(), steps.end());
    steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
    std::int64_t every = 0;
    for (const auto s : steps) {
        every = std::gcd(every, s);
    }
    std::vector<double> rates = sweep.learning_rates;
    if (rates.empty()) {
        rates = {config.train.learning_rate};
    }

    const std::size_t n_splits = config.fractions.size();
    const auto n_seeds = static_cast<std::size_t>(config.seeds);
    const std::size_t n_runs = n_splits * n_seeds;

    ExperimentResult result;
    std::atomic<int> trained{0};
    std::atomic<int> reused{0};
    std::atomic<int> scored{0};

    for (const double lr : rates) {
        // snapshots[run][k] is the adapter after steps[k] optimizer steps.
        std::vector<std::vector<std::shared_ptr<const LoraAdapter>>> snapshots(n_runs);
        const std::filesystem::path train_root = on_disk ? root / train_dir_name(lr) : std::filesystem::path{};

        parallel_for(n_runs, options.jobs, [&](std::size_t run) {
            const int split = static_cast<int>(run / n_seeds);
            const std::uint64_t seed = config.base_seed + run % n_seeds;
            const std::filesystem::path dir = on_disk ? train_root / run_dir_name(split, seed) : std::filesystem::path{};
            auto& snaps = snapshots[run];

            if (on_disk && !options.force &&
                std::all_of(steps.begin(), steps.end(),
                            [&](std::int64_t s) { return std::filesystem::exists(checkpoint_path(dir, s)); })) {
                for (const auto s : steps) {
                    snaps.push_back(std::make_shared<const LoraAdapter>(load_adapter(checkpoint_path(dir, s))));
                }
                ++reused;
                log("reuse " + dir.string());
                return;
            }

            MixSpec spec;
            spec.happy_fraction = config.fractions[static_cast<std::size_t>(split)];
            spec.total_count = config.docs_per_split;
            spec.seed = derive_seed(derive_seed(seed, tag_mix), static_cast<std::uint64_t>(split));
            const auto docs = synth_mix(first_pool, second_pool, spec);
            const auto packed = pack_chunks(docs, config.chunk_len,
                                            derive_seed(derive_seed(seed, tag_pack), static_cast<std::uint64_t>(split)),
                                            TailPolicy::drop, split);
            LoraAdapter adapter = init_adapter(weights->config, config.lora, derive_seed(seed, tag_adapter));
            adapter.meta.slice_id = split;
            adapter.meta.seed = seed;

            TrainConfig tc = config.train;
            tc.learning_rate = lr;
            tc.max_steps = steps.back();
            tc.checkpoint_every = every;
            tc.stop_mode = StopMode::steps;
            tc.seed = derive_seed(seed, tag_train);
            if (on_disk) {
                std::filesystem::create_directories(dir);
            }
            auto sink = [&](const LoraAdapter& snap) {
                if (!std::binary_search(steps.begin(), steps.end(), snap.meta.steps)) {
                    return;
                }
                snaps.push_back(std::make_shared<const LoraAdapter>(snap));
                if (on_disk) {
                    save_adapter(snap, checkpoint_path(dir, snap.meta.steps));
                }
            };
            const TrainResult res = train_adapter(*weights, std::move(adapter), packed.chunks, tc, sink);
            require(snaps.size() == steps.size(), ErrorCategory::numeric, "training did not reach every checkpoint");
            if (on_disk) {
                write_loss_trace(dir / "loss.csv", res.report);
            }
            ++trained;
            log("trained split " + std::to_string(split) + " seed " + std::to_string(seed) + " lr " +
                format_number(lr) + " final loss " + format_number(res.report.trace.back().loss));
        });

        const Instrument base_instrument = resolve_instrument(config.instrument);
        for (std::size_t k = 0; k < steps.size(); ++k) {
            for (const double temperature : sweep.temperatures) {
                for (const bool prefix : sweep.prefixes) {
                    for (const auto casing : sweep.casings) {
                        CellResult cell;
                        cell.learning_rate = lr;
                        cell.scoring = {steps[k], temperature, prefix, casing};
                        cell.name = cell_name(lr, cell.scoring);
                        Instrument inst = with_casing(base_instrument, casing);
                        if (!prefix) {
                            inst = without_prefix(std::move(inst));
                        }
                        const std::filesystem::path cell_dir = on_disk ? root / cell.name : std::filesystem::path{};
                        std::vector<std::vector<ScoreRow>> per_run(n_runs);
                        parallel_for(n_runs, options.jobs, [&](std::size_t run) {
                            const int split = static_cast<int>(run / n_seeds);
                            const std::uint64_t seed = config.base_seed + run % n_seeds;
                            const auto out = on_disk ? cell_dir / run_dir_name(split, seed) / "scores.csv"
                                                     : std::filesystem::path{};
                            if (on_disk && !options.force && std::filesystem::exists(out)) {
                                per_run[run] = read_scores(out);
                                return;
                            }
                            ModelSession session(weights);
                            session.swap(snapshots[run][k]);
                            auto rows = score_instrument(session, inst, temperature);
                            // Report options under their canonical spelling.
                            for (std::size_t i = 0; i < rows.size(); ++i) {
                                rows[i].label = base_instrument.options[i];
                            }
                            if (on_disk) {
                                std::ostringstream csv;
                                write_scores(csv, rows);
                                write_file_atomic(out, csv.str());
                            }
                            per_run[run] = std::move(rows);
                            ++scored;
                        });
                        for (auto& rows : per_run) {
                            cell.rows.insert(cell.rows.end(), rows.begin(), rows.end());
                        }
                        cell.splits = split_stats(config, cell.rows);
                        cell.summary = summarize_mix(config, cell.splits, derive_seed(config.base_seed, tag_summary));
                        if (on_disk) {
                            std::ostringstream csv;
                            write_split_stats(csv, cell);
                            write_file_atomic(cell_dir / "splits.csv", csv.str());
                        }
                        for (const auto& s : cell.summary) {
                            log(cell.name + " " + s.option + " r=" + format_number(s.r) + " p=" + format_number(s.p));
                        }
                        result.cells.push_back(std::move(cell));
                    }
                }
            }
        }
    }
    result.adapters_trained = trained;
    result.adapters_reused = reused;
    result.runs_scored = scored;
    if (on_disk) {
        std::ostringstream csv;
        write_summary(csv, result);
        write_file_atomic(root / "summary.csv", csv.str());
    }
    return result;
}

ExperimentResult run_mix_experiment(const MixExperimentConfig& config, const RunOptions& options) {
    return run_sweep(SweepConfig::single(config), config, options);
}

void write_summary(std::ostream& out, const ExperimentResult& result) {
    write_csv_preamble(out);
    out << "cell,learning_rate,checkpoint,temperature,prefix,casing,option,r,p,n_splits,n_seeds\n";
    for (const auto& c : result.cells) {
        for (const auto& s : c.summary) {
            out << csv_field(c.name) << ',' << format_number(c.learning_rate) << ',' << c.scoring.checkpoint << ','
                << format_number(c.scoring.temperature) << ',' << (c.scoring.prefix ? "yes" : "no") << ','
                << casing_name(c.scoring.casing) << ',' << csv_field(s.option) << ',' << format_number(s.r) << ','
                << format_number(s.p) << ',' << s.n_splits << ',' << s.n_seeds << '\n';
        }
    }
}

void write_split_stats(std::ostream& out, const CellResult& cell) {
    write_csv_preamble(out);
    out << "split,fraction,option,mean,stddev,norm_mean,norm_stddev\n";
    for (const auto& s : cell.splits) {
        out << s.split << ',' << format_number(s.fraction) << ',' << csv_field(s.option) << ','
            << format_number(s.mean) << ',' << format_number(s.stddev) << ',' << format_number(s.norm_mean) << ','
            << format_number(s.norm_stddev) << '\n';
    }
}

// --- config files -----------------------------------------------------------

void apply_mix_overrides(MixExperimentConfig& c, std::string_view text, const std::string& source) {
    const json j = json::parse(text, nullptr, false);
    require(!j.is_discarded(), ErrorCategory::parse, source + ": invalid JSON");
    check_keys(j,
               {"preset", "name", "fractions", "docs_per_split", "seeds", "base_seed", "first_label", "second_label",
                "pool_per_label", "corpus_seed", "templates", "model", "base_model", "lora", "train", "chunk_len",
                "instrument", "options", "temperature", "use_prefix", "casing", "permutations", "sweep", "series"},
               source);
    if (j.contains("series")) {
        SeriesOptions unused;
        apply_series_overrides(unused, text, source);
    }
    try {
        take(j, "name", c.name);
        take(j, "fractions", c.fractions);
        take(j, "docs_per_split", c.docs_per_split);
        take(j, "seeds", c.seeds);
        take(j, "base_seed", c.base_seed);
        take(j, "first_label", c.first_label);
        take(j, "second_label", c.second_label);
        take(j, "pool_per_label", c.pool_per_label);
        take(j, "corpus_seed", c.corpus_seed);
        if (j.contains("templates")) {
            c.templates = j.at("templates").get<std::string>();
        }
        if (j.contains("model")) {
            apply_model(j.at("model"), c.model, source);
        }
        if (j.contains("base_model")) {
            c.base_model = j.at("base_model").get<std::string>();
        }
        if (j.contains("lora")) {
            apply_lora(j.at("lora"), c.lora, source);
        }
        if (j.contains("train")) {
            apply_train(j.at("train"), c.train, source);
        }
        take(j, "chunk_len", c.chunk_len);
        take(j, "instrument", c.instrument);
        take(j, "options", c.options);
        take(j, "temperature", c.temperature);
        take(j, "use_prefix", c.use_prefix);
        if (j.contains("casing")) {
            c.casing = parse_casing(j.at("casing").get<std::string>());
        }
        take(j, "permutations", c.permutations);
    } catch (const json::exception& e) {
        fail(ErrorCategory::schema, source + ": " + e.what());
    }
}

void apply_series_overrides(SeriesOptions& o, std::string_view text, const std::string& source) {
    const json root = json::parse(text, nullptr, false);
    require(!root.is_discarded(), ErrorCategory::parse, source + ": invalid JSON");
    if (!root.is_object() || !root.contains("series")) {
        return;
    }
    const json& j = root.at("series");
    check_keys(j, {"window", "pipeline_order", "smooth", "normalize"}, source + ".series");
    try {
        take(j, "window", o.window);
        take(j, "smooth", o.smooth);
        take(j, "normalize", o.normalize);
        if (j.contains("pipeline_order")) {
            o.order = parse_pipeline_order(j.at("pipeline_order").get<std::string>());
        }
    } catch (const json::exception& e) {
        fail(ErrorCategory::schema, source + ": " + e.what());
    }
    require(o.window >= 1, ErrorCategory::schema, source + ".series: window must be >= 1");
}

void apply_sweep_overrides(SweepConfig& s, std::string_view text, const std::string& source) {
    json j = json::parse(text, nullptr, false);
    require(!j.is_discarded(), ErrorCategory::parse, source + ": invalid JSON");
    if (j.contains("sweep")) {
        j = j.at("sweep");
    } else {
        // A mix config file without a sweep block leaves the grid alone.
        return;
    }
    check_keys(j, {"checkpoints", "learning_rates", "temperatures", "prefixes", "casings"}, source + ".sweep");
    try {
        take(j, "checkpoints", s.checkpoints);
        take(j, "learning_rates", s.learning_rates);
        take(j, "temperatures", s.temperatures);
        take(j, "prefixes", s.prefixes);
        if (j.contains("casings")) {
            s.casings.clear();
            for (const auto& c : j.at("casings")) {
                s.casings.push_back(parse_casing(c.get<std::string>()));
            }
        }
    } catch (const json::exception& e) {
        fail(ErrorCategory::schema, source + ": " + e.what());
    }
}

std::string mix_config_to_json(const MixExperimentConfig& c) {
    json targets = json::array();
    for (const auto t : c.lora.targets) {
        targets.push_back(std::string(projection_name(t)));
    }
    json j = {{"name", c.name},
              {"fractions", c.fractions},
              {"docs_per_split", c.docs_per_split},
              {"seeds", c.seeds},
              {"base_seed", c.base_seed},
              {"first_label", c.first_label},
              {"second_label", c.second_label},
              {"pool_per_label", c.pool_per_label},
              {"corpus_seed", c.corpus_seed},
              {"model", model_json(c.model)},
              {"lora", {{"rank", c.lora.rank}, {"alpha", c.lora.alpha}, {"targets", targets}}},
              {"train", train_json(c.train)},
              {"chunk_len", c.chunk_len},
              {"instrument", c.instrument},
              {"options", c.options},
              {"temperature", c.temperature},
              {"use_prefix", c.use_prefix},
              {"casing", std::string(casing_name(c.casing))},
              {"permutations", c.permutations}};
    if (c.templates) {
        j["templates"] = c.templates->string();
    }
    if (c.base_model) {
        j["base_model"] = c.base_model->string();
    }
    return j.dump(2) + "\n";
}

std::string sweep_config_to_json(const SweepConfig& s) {
    json casings = json::array();
    for (const auto c : s.casings) {
        casings.push_back(std::string(casing_name(c)));
    }
    json prefixes = json::array();
    for (const bool p : s.prefixes) {
        prefixes.push_back(p);
    }
    const json j = {{"checkpoints", s.checkpoints},
                    {"learning_rates", s.learning_rates},
                    {"temperatures", s.temperatures},
                    {"prefixes", prefixes},
                    {"casings", casings}};
    return j.dump(2) + "\n";
}

}  // namespace tempad
