// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors
//
// Command-line driver: corpus preparation, adapter training, survey scoring,
// series assembly, validation and the synthetic-mix experiments.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tempad/adapters.hpp"
#include "tempad/corpus.hpp"
#include "tempad/error.hpp"
#include "tempad/experiments.hpp"
#include "tempad/io.hpp"
#include "tempad/model.hpp"
#include "tempad/rng.hpp"
#include "tempad/series.hpp"
#include "tempad/stats.hpp"
#include "tempad/survey.hpp"
#include "tempad/tokenizer.hpp"
#include "tempad/trainer.hpp"

namespace fs = std::filesystem;
using namespace tempad;

namespace {

constexpr std::uint64_t tag_adapter = 0x6c6f7261;
constexpr std::uint64_t tag_train = 0x747261696e;

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.is_open(), ErrorCategory::io, "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Returns true when the command should stop because its output exists.
bool skip_existing(const fs::path& out, bool force) {
    if (!force && fs::exists(out)) {
        std::cout << "skip: " << out.string() << " exists (use --force to redo)\n";
        return true;
    }
    return false;
}

std::string now_utc() {
    return format_timestamp(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
}

std::map<int, Date> slice_dates(const fs::path& slices_dir) {
    std::map<int, Date> out;
    for (const auto& s : read_slice_manifest(slices_dir)) {
        out[s.id] = s.end_date;
    }
    return out;
}

// Model, adapter and optimizer settings shared by `train`; resolved as
// preset, then config file, then flags.
struct TrainSetup {
    ModelConfig model;
    LoraConfig lora;
    TrainConfig train;
    std::size_t chunk_len = 512;
};

TrainSetup train_preset(const std::string& name) {
    TrainSetup s;
    if (name == "desk") {
        s.model = ModelConfig::desk();
    } else if (name == "ci") {
        const auto m = MixExperimentConfig::ci();
        s.model = m.model;
        s.lora = m.lora;
        s.train = m.train;
        s.chunk_len = m.chunk_len;
    } else if (name == "paper") {
        const auto m = MixExperimentConfig::paper();
        s.model = m.model;
        s.lora = m.lora;
        s.train = TrainConfig::paper();
        s.chunk_len = m.chunk_len;
    } else {
        fail(ErrorCategory::invalid_argument, "unknown preset '" + name + "' (ci, desk, paper)");
    }
    return s;
}

// The config file schema is shared with the experiment configs; only the
// model, lora, train and chunk_len blocks matter here.
void apply_train_file(TrainSetup& s, const fs::path& path) {
    MixExperimentConfig holder;
    holder.model = s.model;
    holder.lora = s.lora;
    holder.train = s.train;
    holder.chunk_len = s.chunk_len;
    apply_mix_overrides(holder, read_text(path), path.string());
    s.model = holder.model;
    s.lora = holder.lora;
    s.train = holder.train;
    s.chunk_len = holder.chunk_len;
}

std::string preset_from_file(const std::optional<std::string>& config, const std::string& fallback) {
    if (!config) {
        return fallback;
    }
    const auto j = nlohmann::json::parse(read_text(*config), nullptr, false);
    require(!j.is_discarded(), ErrorCategory::parse, *config + ": invalid JSON");
    if (j.is_object() && j.contains("preset")) {
        return j.at("preset").get<std::string>();
    }
    return fallback;
}

std::vector<fs::path> adapter_dirs(const fs::path& root) {
    require(fs::is_directory(root), ErrorCategory::io, root.string() + " is not a directory");
    std::vector<std::pair<std::pair<long long, long long>, fs::path>> found;
    for (const auto& e : fs::directory_iterator(root)) {
        if (!e.is_directory()) {
            continue;
        }
        const std::string name = e.path().filename().string();
        const auto us = name.find('_');
        if (us == std::string::npos) {
            continue;
        }
        try {
            found.push_back({{parse_int(name.substr(0, us), "slice"), parse_int(name.substr(us + 1), "seed")}, e.path()});
        } catch (const Error&) {
            continue;
        }
    }
    std::sort(found.begin(), found.end());
    std::vector<fs::path> out;
    for (auto& f : found) {
        out.push_back(std::move(f.second));
    }
    return out;
}

template <typename F>
void run_parallel(std::size_t n, int jobs, F&& fn) {
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
    const int workers = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

std::mutex out_mutex;
void say(const std::string& msg) {
    std::lock_guard lock(out_mutex);
    std::cout << msg << '\n';
}

struct Common {
    std::uint64_t seed = 0;
    bool dry_run = false;
    bool force = false;
    int jobs = 1;
};

void add_common(CLI::App* cmd, Common& c, bool with_seed = true) {
    if (with_seed) {
        cmd->add_option("--seed", c.seed, "Base random seed");
    }
    cmd->add_flag("--dry-run", c.dry_run, "Print the resolved plan and exit");
    cmd->add_flag("--force", c.force, "Redo outputs that already exist");
    cmd->add_option("--jobs", c.jobs, "Parallel workers")->check(CLI::PositiveNumber);
}

// ---------------------------------------------------------------------------

struct IngestArgs {
    Common common;
    std::string input, out, text_field = "text", timestamp_field = "timestamp", label_field = "label";
    std::optional<std::string> not_before, not_after;
};

void run_ingest(const IngestArgs& a) {
    CorpusSchema schema;
    schema.text_field = a.text_field;
    schema.timestamp_field = a.timestamp_field;
    schema.label_field = a.label_field;
    auto bound = [](const std::optional<std::string>& s, const char* what) -> std::optional<Timestamp> {
        if (!s) {
            return std::nullopt;
        }
        const auto t = parse_timestamp(*s);
        require(t.has_value(), ErrorCategory::parse, std::string(what) + ": not a timestamp: " + *s);
        return t;
    };
    schema.not_before = bound(a.not_before, "--not-before");
    schema.not_after = bound(a.not_after, "--not-after");
    if (a.common.dry_run) {
        std::cout << "ingest " << a.input << " -> " << a.out << "\n";
        return;
    }
    if (skip_existing(a.out, a.common.force)) {
        return;
    }
    const Corpus c = load_corpus(a.input, schema);
    std::ostringstream body;
    write_corpus(body, c.documents);
    write_file_atomic(a.out, body.str());
    std::cout << "ingested " << c.documents.size() << " documents, skipped " << c.skipped << " malformed\n";
}

struct SliceArgs {
    Common common;
    std::string corpus, waves, out;
    int window = 7;
    bool cap = false;
};

void run_slice(const SliceArgs& a) {
    const auto waves = read_wave_dates(a.waves);
    if (a.common.dry_run) {
        std::cout << "slice " << a.corpus << " into " << waves.size() << " windows of " << a.window << " days -> "
                  << a.out << (a.cap ? " (capped to smallest slice)" : "") << "\n";
        return;
    }
    if (skip_existing(fs::path(a.out) / "manifest.csv", a.common.force)) {
        return;
    }
    const Corpus c = load_corpus(a.corpus);
    auto slices = slice_weekly(c, waves, a.window);
    if (a.cap) {
        cap_to_smallest_slice(slices, a.common.seed);
    }
    write_slices(a.out, slices);
    for (const auto& s : slices) {
        std::cout << "slice " << s.id << " " << format_date(s.end_date) << " " << s.documents.size() << " docs"
                  << (s.flagged_empty() ? " (empty)" : "") << "\n";
    }
}

struct SynthGenArgs {
    Common common;
    std::optional<std::string> templates;
    std::size_t per_label = 1163;
    std::string out;
};

void run_synth_gen(const SynthGenArgs& a) {
    const auto t = a.templates ? load_emotion_templates(*a.templates) : default_emotion_templates();
    if (a.common.dry_run) {
        std::cout << "synth-gen " << a.per_label << " documents per label (";
        for (const auto& [label, list] : t.templates) {
            std::cout << label << ": capacity " << template_capacity(t, label) << "; ";
        }
        std::cout << ") -> " << a.out << "\n";
        return;
    }
    if (skip_existing(a.out, a.common.force)) {
        return;
    }
    const auto docs = generate_synthetic_emotion_corpus(t, a.per_label, a.common.seed);
    std::ostringstream body;
    write_corpus(body, docs);
    write_file_atomic(a.out, body.str());
    for (const auto& [label, share] : label_shares(docs)) {
        std::cout << label << " " << format_number(share) << "\n";
    }
}

struct SynthMixArgs {
    Common common;
    std::string pool, out, first_label = "happy", second_label = "sad";
    double fraction = 0.5;
    std::size_t total = 1163;
};

void run_synth_mix(const SynthMixArgs& a) {
    const auto counts = mix_counts(a.fraction, a.total);
    if (a.common.dry_run) {
        std::cout << "synth-mix " << counts.first << " " << a.first_label << " + " << counts.second << " "
                  << a.second_label << " -> " << a.out << "\n";
        return;
    }
    if (skip_existing(a.out, a.common.force)) {
        return;
    }
    const Corpus pool = load_corpus(a.pool);
    const auto first = filter_label(pool.documents, a.first_label);
    const auto second = filter_label(pool.documents, a.second_label);
    const auto docs = synth_mix(first, second, MixSpec{a.fraction, a.total, a.common.seed});
    std::ostringstream body;
    write_corpus(body, docs);
    write_file_atomic(a.out, body.str());
    std::cout << "mixed " << counts.first << " " << a.first_label << " + " << counts.second << " " << a.second_label
              << "\n";
}

struct TrainArgs {
    Common common;
    std::optional<std::string> slices, corpus, config;
    std::string preset = "desk";
    std::string base, out;
    int seeds = 3;
    std::optional<std::int64_t> steps, checkpoint_every;
    std::optional<double> lr, epochs;
    std::optional<int> batch, accum, rank;
    std::optional<double> alpha;
    std::optional<std::size_t> chunk_len;
    std::optional<std::vector<std::string>> targets;
    std::optional<std::string> stop_mode;
};

void run_train(const TrainArgs& a) {
    require(a.slices.has_value() != a.corpus.has_value(), ErrorCategory::invalid_argument,
            "give exactly one of --slices or --corpus");
    TrainSetup s = train_preset(preset_from_file(a.config, a.preset));
    if (a.config) {
        apply_train_file(s, *a.config);
    }
    if (a.steps) {
        s.train.max_steps = *a.steps;
        if (!a.checkpoint_every && s.train.checkpoint_every > *a.steps && *a.steps > 0) {
            s.train.checkpoint_every = *a.steps;
        }
    }
    if (a.checkpoint_every) s.train.checkpoint_every = *a.checkpoint_every;
    if (a.lr) s.train.learning_rate = *a.lr;
    if (a.epochs) s.train.max_epochs = *a.epochs;
    if (a.batch) s.train.batch_size = *a.batch;
    if (a.accum) s.train.grad_accum_steps = *a.accum;
    if (a.rank) s.lora.rank = *a.rank;
    if (a.alpha) s.lora.alpha = *a.alpha;
    if (a.chunk_len) s.chunk_len = *a.chunk_len;
    if (a.stop_mode) {
        require(*a.stop_mode == "steps" || *a.stop_mode == "epochs", ErrorCategory::invalid_argument,
                "--stop-mode must be steps or epochs");
        s.train.stop_mode = *a.stop_mode == "steps" ? StopMode::steps : StopMode::epochs;
    }
    if (a.targets) {
        s.lora.targets.clear();
        for (const auto& t : *a.targets) {
            s.lora.targets.push_back(parse_projection(t));
        }
    }
    s.model.validate();
    s.train.validate();
    require(a.seeds >= 1, ErrorCategory::invalid_argument, "--seeds must be >= 1");

    struct Job {
        int slice;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    std::vector<int> slice_ids;
    if (a.slices) {
        for (const auto& info : read_slice_manifest(*a.slices)) {
            if (info.n_docs == 0) {
                std::cout << "slice " << info.id << " is empty, not trained\n";
                continue;
            }
            slice_ids.push_back(info.id);
        }
    } else {
        slice_ids.push_back(0);
    }
    for (const int id : slice_ids) {
        for (int k = 0; k < a.seeds; ++k) {
            jobs.push_back({id, a.common.seed + static_cast<std::uint64_t>(k)});
        }
    }

    if (a.common.dry_run) {
        MixExperimentConfig holder;
        holder.model = s.model;
        holder.lora = s.lora;
        holder.train = s.train;
        holder.chunk_len = s.chunk_len;
        std::cout << "train " << jobs.size() << " adapters (" << slice_ids.size() << " slices x " << a.seeds
                  << " seeds), base " << a.base << " -> " << a.out << "\n"
                  << mix_config_to_json(holder);
        return;
    }

    std::shared_ptr<const ModelWeights> weights;
    if (fs::exists(a.base)) {
        weights = std::make_shared<const ModelWeights>(load_model(a.base));
    } else {
        auto w = init_model(s.model);
        if (fs::path(a.base).has_parent_path()) {
            fs::create_directories(fs::path(a.base).parent_path());
        }
        save_model(w, a.base);
        std::cout << "initialised base model " << a.base << "\n";
        weights = std::make_shared<const ModelWeights>(std::move(w));
    }
    require(static_cast<std::size_t>(weights->config.max_seq_len) >= s.chunk_len, ErrorCategory::invalid_argument,
            "chunk_len exceeds the base model's max_seq_len");

    std::map<int, std::vector<Document>> docs;
    for (const int id : slice_ids) {
        docs[id] = a.slices ? load_slice_documents(*a.slices, id) : load_corpus(*a.corpus).documents;
    }

    const std::string created = now_utc();
    run_parallel(jobs.size(), a.common.jobs, [&](std::size_t i) {
        const Job& job = jobs[i];
        const fs::path dir = fs::path(a.out) / (std::to_string(job.slice) + "_" + std::to_string(job.seed));
        if (!a.common.force && fs::exists(dir / "adapter.tada")) {
            say("skip: " + (dir / "adapter.tada").string() + " exists");
            return;
        }
        fs::create_directories(dir);
        const auto packed = pack_chunks(docs.at(job.slice), s.chunk_len,
                                        derive_seed(job.seed, static_cast<std::uint64_t>(job.slice)),
                                        TailPolicy::drop, job.slice);
        LoraAdapter adapter = init_adapter(weights->config, s.lora, derive_seed(job.seed, tag_adapter));
        adapter.meta.slice_id = job.slice;
        adapter.meta.seed = job.seed;
        adapter.meta.created = created;
        TrainConfig tc = s.train;
        tc.seed = derive_seed(job.seed, tag_train);
        auto sink = [&](const LoraAdapter& snap) {
            save_adapter(snap, dir / ("step_" + std::to_string(snap.meta.steps) + ".tada"));
        };
        const TrainResult res = train_adapter(*weights, std::move(adapter), packed.chunks, tc, sink);
        write_loss_trace(dir / "loss.csv", res.report);
        save_adapter(res.adapter, dir / "adapter.tada");
        say("trained slice " + std::to_string(job.slice) + " seed " + std::to_string(job.seed) + ": " +
            std::to_string(res.report.steps) + " steps, " + std::to_string(packed.chunks.size()) + " chunks" +
            (res.report.trace.empty() ? std::string()
                                      : ", loss " + format_number(res.report.trace.front().loss) + " -> " +
                                            format_number(res.report.trace.back().loss)));
    });
}

struct ScoreArgs {
    Common common;
    std::string base, instrument = "mood_weekly", out, casing = "as_is";
    std::optional<std::string> adapters;
    std::optional<std::int64_t> checkpoint;
    double temperature = 1.0;
    bool no_prefix = false;
};

void run_score(const ScoreArgs& a) {
    Instrument inst = with_casing(resolve_instrument(a.instrument), parse_casing(a.casing));
    if (a.no_prefix) {
        inst = without_prefix(std::move(inst));
    }
    require(a.temperature > 0.0, ErrorCategory::invalid_argument, "--temperature must be positive");
    const std::string file =
        a.checkpoint ? "step_" + std::to_string(*a.checkpoint) + ".tada" : std::string("adapter.tada");
    std::vector<fs::path> adapters;
    if (a.adapters) {
        for (const auto& d : adapter_dirs(*a.adapters)) {
            if (fs::exists(d / file)) {
                adapters.push_back(d / file);
            }
        }
        require(!adapters.empty(), ErrorCategory::empty_input, "no " + file + " under " + *a.adapters);
    }
    if (a.common.dry_run) {
        std::cout << "score " << inst.id << " at temperature " << format_number(a.temperature) << " with "
                  << (a.adapters ? std::to_string(adapters.size()) + " adapters" : std::string("the base model"))
                  << ", " << build_prompts(inst).size() << " prompts each -> " << a.out << "\n";
        return;
    }
    if (skip_existing(a.out, a.common.force)) {
        return;
    }
    auto weights = std::make_shared<const ModelWeights>(load_model(a.base));
    std::vector<std::vector<ScoreRow>> per(std::max<std::size_t>(adapters.size(), 1));
    if (adapters.empty()) {
        ModelSession session(weights);
        per[0] = score_instrument(session, inst, a.temperature);
    } else {
        run_parallel(adapters.size(), a.common.jobs, [&](std::size_t i) {
            ModelSession session(weights);
            session.swap(std::make_shared<const LoraAdapter>(load_adapter(adapters[i])));
            per[i] = score_instrument(session, inst, a.temperature);
        });
    }
    std::vector<ScoreRow> rows;
    for (auto& p : per) {
        rows.insert(rows.end(), p.begin(), p.end());
    }
    std::ostringstream csv;
    write_scores(csv, rows);
    write_file_atomic(a.out, csv.str());
    std::cout << "wrote " << rows.size() << " rows to " << a.out << "\n";
}

struct SeriesArgs {
    Common common;
    std::string scores, slices, out;
    std::optional<std::string> config, order;
    std::optional<int> window;
    bool no_smooth = false, no_normalize = false;
};

SeriesOptions series_options(const std::optional<std::string>& config, const std::optional<int>& window,
                             const std::optional<std::string>& order, bool no_smooth, bool no_normalize) {
    SeriesOptions o;
    if (config) {
        apply_series_overrides(o, read_text(*config), *config);
    }
    if (window) o.window = *window;
    if (order) o.order = parse_pipeline_order(*order);
    if (no_smooth) o.smooth = false;
    if (no_normalize) o.normalize = false;
    require(o.window >= 1, ErrorCategory::invalid_argument, "--window must be >= 1");
    return o;
}

void run_series(const SeriesArgs& a) {
    const auto opts = series_options(a.config, a.window, a.order, a.no_smooth, a.no_normalize);
    if (a.common.dry_run) {
        std::cout << "series from " << a.scores << ": window " << opts.window << ", "
                  << pipeline_order_name(opts.order) << " -> " << a.out << "\n";
        return;
    }
    if (skip_existing(a.out, a.common.force)) {
        return;
    }
    const auto rows = read_scores(a.scores);
    const auto series = assemble_series(rows, slice_dates(a.slices));
    std::vector<SeedBand> bands;
    for (const auto& s : series) {
        bands.push_back(build_band(s, opts));
    }
    std::ostringstream csv;
    write_series(csv, bands);
    write_file_atomic(a.out, csv.str());
    std::cout << "wrote " << bands.size() << " series to " << a.out << "\n";
}

struct ValidateArgs {
    Common common;
    std::string scores, slices, reference, out;
    std::optional<std::string> config, order;
    std::optional<int> window;
    std::optional<int> permutations;
    bool no_smooth = false, no_normalize = false;
    std::vector<std::string> mappings;
};

void run_validate(const ValidateArgs& a) {
    ValidationConfig cfg;
    if (a.config) {
        MixExperimentConfig holder;
        apply_mix_overrides(holder, read_text(*a.config), *a.config);
        cfg.permutations = holder.permutations;
    }
    if (a.permutations) cfg.permutations = *a.permutations;
    cfg.seed = a.common.seed;
    cfg.jobs = a.common.jobs;
    cfg.pipeline = series_options(a.config, a.window, a.order, a.no_smooth, a.no_normalize);
    for (const auto& m : a.mappings) {
        const auto eq = m.find('=');
        require(eq != std::string::npos && eq > 0 && eq + 1 < m.size(), ErrorCategory::invalid_argument,
                "--map expects option=reference_option, got '" + m + "'");
        cfg.option_map[m.substr(0, eq)] = m.substr(eq + 1);
    }
    require(cfg.permutations >= 1, ErrorCategory::invalid_argument, "--permutations must be >= 1");
    if (a.common.dry_run) {
        std::cout << "validate " << a.scores << " against " << a.reference << " with " << cfg.permutations
                  << " permutations (seed " << cfg.seed << ") -> " << a.out << "\n";
        return;
    }
    if (skip_existing(a.out, a.common.force)) {
        return;
    }
    const auto series = assemble_series(read_scores(a.scores), slice_dates(a.slices));
    const auto refs = load_reference(a.reference);
    const auto table = validate(series, refs, cfg);
    std::ostringstream csv;
    write_validation(csv, table);
    write_file_atomic(a.out, csv.str());
    for (const auto& s : table.summaries) {
        std::cout << s.option << ": r in [" << format_number(s.r_min) << ", " << format_number(s.r_max)
                  << "], worst p " << format_number(s.worst_p) << " " << s.stars << "\n";
    }
}

struct ExperimentArgs {
    Common common;
    std::optional<std::string> config, name;
    std::string preset = "desk";
    std::string out = "runs";
    std::optional<int> seeds, permutations;
    std::optional<std::int64_t> steps;
    std::optional<double> lr, temperature;
    std::optional<std::size_t> docs;
    std::optional<std::string> casing;
    bool no_prefix = false;
    bool seed_given = false;
    // sweep only
    std::optional<std::vector<std::int64_t>> checkpoints;
    std::optional<std::vector<double>> learning_rates, temperatures;
    std::optional<std::vector<std::string>> prefixes, casings;
};

MixExperimentConfig resolve_mix(const ExperimentArgs& a) {
    MixExperimentConfig c = MixExperimentConfig::preset(preset_from_file(a.config, a.preset));
    if (a.config) {
        apply_mix_overrides(c, read_text(*a.config), *a.config);
    }
    if (a.name) c.name = *a.name;
    if (a.seeds) c.seeds = *a.seeds;
    if (a.permutations) c.permutations = *a.permutations;
    if (a.steps) {
        c.train.max_steps = *a.steps;
        c.train.checkpoint_every = std::min(c.train.checkpoint_every, *a.steps);
    }
    if (a.lr) c.train.learning_rate = *a.lr;
    if (a.temperature) c.temperature = *a.temperature;
    if (a.docs) c.docs_per_split = *a.docs;
    if (a.casing) c.casing = parse_casing(*a.casing);
    if (a.no_prefix) c.use_prefix = false;
    if (a.seed_given) c.base_seed = a.common.seed;
    c.validate();
    return c;
}

RunOptions run_options(const ExperimentArgs& a) {
    RunOptions o;
    o.out_dir = a.out;
    o.jobs = a.common.jobs;
    o.force = a.common.force;
    o.progress = say;
    return o;
}

void print_summary(const ExperimentResult& r) {
    for (const auto& c : r.cells) {
        for (const auto& s : c.summary) {
            std::cout << c.name << " " << s.option << ": r " << format_number(s.r) << ", p " << format_number(s.p)
                      << "\n";
        }
    }
    std::cout << "adapters trained " << r.adapters_trained << ", reused " << r.adapters_reused << ", scorings "
              << r.runs_scored << "\n";
}

void run_mix(const ExperimentArgs& a) {
    const auto c = resolve_mix(a);
    if (a.common.dry_run) {
        std::cout << "mix-experiment: " << c.fractions.size() << " splits x " << c.seeds << " seeds = "
                  << c.fractions.size() * static_cast<std::size_t>(c.seeds) << " adapters -> "
                  << (fs::path(a.out) / c.name).string() << "\n"
                  << mix_config_to_json(c);
        return;
    }
    print_summary(run_mix_experiment(c, run_options(a)));
}

void run_sweep_cmd(const ExperimentArgs& a) {
    const auto c = resolve_mix(a);
    SweepConfig s = SweepConfig::desk();
    if (a.config) {
        apply_sweep_overrides(s, read_text(*a.config), *a.config);
    }
    if (a.checkpoints) s.checkpoints = *a.checkpoints;
    if (a.learning_rates) s.learning_rates = *a.learning_rates;
    if (a.temperatures) s.temperatures = *a.temperatures;
    if (a.prefixes) {
        s.prefixes.clear();
        for (const auto& p : *a.prefixes) {
            require(p == "on" || p == "off", ErrorCategory::invalid_argument, "--prefixes takes on/off");
            s.prefixes.push_back(p == "on");
        }
    }
    if (a.casings) {
        s.casings.clear();
        for (const auto& k : *a.casings) {
            s.casings.push_back(parse_casing(k));
        }
    }
    s.validate();
    if (a.common.dry_run) {
        const std::size_t lrs = std::max<std::size_t>(s.learning_rates.size(), 1);
        std::cout << "sweep: " << s.cell_count() << " cells, " << lrs * c.fractions.size() * c.seeds
                  << " adapters trained -> " << (fs::path(a.out) / c.name).string() << "\n"
                  << sweep_config_to_json(s) << mix_config_to_json(c);
        return;
    }
    print_summary(run_sweep(s, c, run_options(a)));
}

struct PlotArgs {
    Common common;
    std::string series, out;
    std::optional<std::string> option, reference, title;
};

void run_plot(const PlotArgs& a) {
    const auto bands = read_series(a.series);
    std::vector<ReferenceSeries> refs;
    if (a.reference) {
        refs = load_reference(*a.reference);
    }
    std::size_t written = 0;
    for (const auto& b : bands) {
        if (a.option && b.label != *a.option) {
            continue;
        }
        const fs::path out = fs::path(a.out) / (b.instrument + "_" + b.label + ".svg");
        if (a.common.dry_run) {
            std::cout << "plot " << b.instrument << "/" << b.label << " -> " << out.string() << "\n";
            continue;
        }
        if (skip_existing(out, a.common.force)) {
            continue;
        }
        PlotOptions po;
        if (a.title) {
            po.title = *a.title;
        }
        for (const auto& r : refs) {
            if (r.option == b.label) {
                po.overlay = PlotOverlay{"reference: " + r.option, r.points};
            }
        }
        write_file_atomic(out, render_svg(b, po));
        ++written;
    }
    if (!a.common.dry_run) {
        std::cout << "wrote " << written << " plots to " << a.out << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal adapters at desk scale: train per-period LoRA adapters and read survey answers off them."};
    app.set_version_flag("--version", build_id());
    app.require_subcommand(1);

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Normalise a JSON-lines corpus (sorted, malformed lines dropped)");
    add_common(c_ingest, ingest.common, false);
    c_ingest->add_option("--input", ingest.input, "JSON-lines file")->required()->check(CLI::ExistingFile);
    c_ingest->add_option("--out", ingest.out, "Output JSON-lines file")->required();
    c_ingest->add_option("--text-field", ingest.text_field);
    c_ingest->add_option("--timestamp-field", ingest.timestamp_field);
    c_ingest->add_option("--label-field", ingest.label_field);
    c_ingest->add_option("--not-before", ingest.not_before, "Drop records before this timestamp");
    c_ingest->add_option("--not-after", ingest.not_after, "Drop records after this timestamp");

    SliceArgs slice;
    auto* c_slice = app.add_subcommand("slice", "Cut a corpus into windows ending at survey wave dates");
    add_common(c_slice, slice.common);
    c_slice->add_option("--corpus", slice.corpus)->required()->check(CLI::ExistingFile);
    c_slice->add_option("--waves", slice.waves, "One YYYY-MM-DD per line")->required()->check(CLI::ExistingFile);
    c_slice->add_option("--window", slice.window, "Window length in days");
    c_slice->add_flag("--cap", slice.cap, "Subsample every slice to the smallest one");
    c_slice->add_option("--out", slice.out, "Output directory")->required();

    SynthGenArgs gen;
    auto* c_gen = app.add_subcommand("synth-gen", "Generate a labelled happy/sad corpus from templates");
    add_common(c_gen, gen.common);
    c_gen->add_option("--templates", gen.templates, "Template JSON (default: built-in)");
    c_gen->add_option("--per-label", gen.per_label);
    c_gen->add_option("--out", gen.out)->required();

    SynthMixArgs mix;
    auto* c_mix = app.add_subcommand("synth-mix", "Draw one mixed split from a labelled pool");
    add_common(c_mix, mix.common);
    c_mix->add_option("--pool", mix.pool)->required()->check(CLI::ExistingFile);
    c_mix->add_option("--fraction", mix.fraction, "Share of first-label documents")->check(CLI::Range(0.0, 1.0));
    c_mix->add_option("--total", mix.total);
    c_mix->add_option("--first-label", mix.first_label);
    c_mix->add_option("--second-label", mix.second_label);
    c_mix->add_option("--out", mix.out)->required();

    TrainArgs train;
    auto* c_train = app.add_subcommand("train", "Train one adapter per (slice, seed)");
    add_common(c_train, train.common);
    c_train->add_option("--slices", train.slices, "Slice directory from `slice`");
    c_train->add_option("--corpus", train.corpus, "Single corpus, trained as slice 0");
    c_train->add_option("--base", train.base, "Base model file (initialised from the config if missing)")->required();
    c_train->add_option("--out", train.out, "Adapter directory")->required();
    c_train->add_option("--preset", train.preset, "ci, desk or paper");
    c_train->add_option("--config", train.config, "JSON config (overrides the preset)")->check(CLI::ExistingFile);
    c_train->add_option("--seeds", train.seeds, "Seeds per slice");
    c_train->add_option("--steps", train.steps);
    c_train->add_option("--checkpoint-every", train.checkpoint_every);
    c_train->add_option("--lr", train.lr);
    c_train->add_option("--epochs", train.epochs);
    c_train->add_option("--stop-mode", train.stop_mode, "steps or epochs");
    c_train->add_option("--batch", train.batch);
    c_train->add_option("--accum", train.accum);
    c_train->add_option("--rank", train.rank);
    c_train->add_option("--alpha", train.alpha);
    c_train->add_option("--chunk-len", train.chunk_len);
    c_train->add_option("--targets", train.targets, "query key value output ff_up ff_down");

    ScoreArgs score;
    auto* c_score = app.add_subcommand("score", "Score a survey instrument under each adapter");
    add_common(c_score, score.common, false);
    c_score->add_option("--base", score.base)->required()->check(CLI::ExistingFile);
    c_score->add_option("--adapters", score.adapters, "Adapter directory from `train` (omit for the base model)");
    c_score->add_option("--checkpoint", score.checkpoint, "Score step_N snapshots instead of final adapters");
    c_score->add_option("--instrument", score.instrument, "Built-in id or instrument JSON file");
    c_score->add_option("--temperature", score.temperature);
    c_score->add_flag("--no-prefix", score.no_prefix, "Drop the answer prefix");
    c_score->add_option("--casing", score.casing, "as_is, lower or capitalized");
    c_score->add_option("--out", score.out)->required();

    SeriesArgs series;
    auto* c_series = app.add_subcommand("series", "Smooth, normalise and aggregate scores over seeds");
    add_common(c_series, series.common, false);
    c_series->add_option("--scores", series.scores)->required()->check(CLI::ExistingFile);
    c_series->add_option("--slices", series.slices, "Slice directory (for end dates)")->required();
    c_series->add_option("--config", series.config, "JSON config; its \"series\" block is used")->check(
        CLI::ExistingFile);
    c_series->add_option("--window", series.window, "Rolling window (default 3)");
    c_series->add_option("--pipeline-order", series.order, "smooth_then_normalize or normalize_then_smooth");
    c_series->add_flag("--no-smooth", series.no_smooth);
    c_series->add_flag("--no-normalize", series.no_normalize);
    c_series->add_option("--out", series.out)->required();

    ValidateArgs val;
    auto* c_val = app.add_subcommand("validate", "Correlate series with reference survey data");
    add_common(c_val, val.common);
    c_val->add_option("--scores", val.scores)->required()->check(CLI::ExistingFile);
    c_val->add_option("--slices", val.slices)->required();
    c_val->add_option("--reference", val.reference, "CSV: wave_date,option,value")->required()->check(
        CLI::ExistingFile);
    c_val->add_option("--config", val.config, "JSON config; \"series\" and \"permutations\" are used")->check(
        CLI::ExistingFile);
    c_val->add_option("--permutations", val.permutations, "Default 10000");
    c_val->add_option("--window", val.window);
    c_val->add_option("--pipeline-order", val.order);
    c_val->add_flag("--no-smooth", val.no_smooth);
    c_val->add_flag("--no-normalize", val.no_normalize);
    c_val->add_option("--map", val.mappings, "option=reference_option");
    c_val->add_option("--out", val.out)->required();

    ExperimentArgs mexp;
    ExperimentArgs sweep;
    for (auto [cmd_name, args] : {std::pair{"mix-experiment", &mexp}, std::pair{"sweep", &sweep}}) {
        auto* c = app.add_subcommand(cmd_name, std::string(cmd_name) == "sweep"
                                                   ? "Score the mix experiment over a hyperparameter grid"
                                                   : "Synthetic happy/sad mix: fraction vs answer probability");
        add_common(c, args->common);
        c->get_option("--seed")->each([args](const std::string&) { args->seed_given = true; });
        c->add_option("--preset", args->preset, "ci, desk or paper");
        c->add_option("--config", args->config)->check(CLI::ExistingFile);
        c->add_option("--name", args->name);
        c->add_option("--out", args->out, "Runs directory");
        c->add_option("--seeds", args->seeds);
        c->add_option("--steps", args->steps);
        c->add_option("--lr", args->lr);
        c->add_option("--docs", args->docs, "Documents per split");
        c->add_option("--permutations", args->permutations);
        c->add_option("--temperature", args->temperature);
        c->add_option("--casing", args->casing);
        c->add_flag("--no-prefix", args->no_prefix);
        if (std::string(cmd_name) == "sweep") {
            c->add_option("--checkpoints", args->checkpoints);
            c->add_option("--learning-rates", args->learning_rates);
            c->add_option("--temperatures", args->temperatures);
            c->add_option("--prefixes", args->prefixes, "on off");
            c->add_option("--casings", args->casings);
        }
    }

    PlotArgs plot;
    auto* c_plot = app.add_subcommand("plot", "Render series CSV as SVG line charts with seed bands");
    add_common(c_plot, plot.common, false);
    c_plot->add_option("--series", plot.series)->required()->check(CLI::ExistingFile);
    c_plot->add_option("--option", plot.option);
    c_plot->add_option("--reference", plot.reference)->check(CLI::ExistingFile);
    c_plot->add_option("--title", plot.title);
    c_plot->add_option("--out", plot.out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);  // --help, --version
        }
        std::cerr << "error: invalid_argument: " << e.what() << "\n";
        return 2;
    }

    try {
        if (c_ingest->parsed()) run_ingest(ingest);
        else if (c_slice->parsed()) run_slice(slice);
        else if (c_gen->parsed()) run_synth_gen(gen);
        else if (c_mix->parsed()) run_synth_mix(mix);
        else if (c_train->parsed()) run_train(train);
        else if (c_score->parsed()) run_score(score);
        else if (c_series->parsed()) run_series(series);
        else if (c_val->parsed()) run_validate(val);
        else if (app.got_subcommand("mix-experiment")) run_mix(mexp);
        else if (app.got_subcommand("sweep")) run_sweep_cmd(sweep);
        else if (c_plot->parsed()) run_plot(plot);
    } catch (const Error& e) {
        std::cerr << "error: " << category_name(e.category()) << ": " << e.what() << "\n";
        return 1;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: parse: " << e.what() << "\n";
        return 1;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: io: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
