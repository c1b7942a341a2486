// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors
//
// Acceptance gate. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "support/reference_gradient.hpp"
#include "support/stats_oracles.hpp"
#include "support/test_util.hpp"
#include "tempad/corpus.hpp"
#include "tempad/experiments.hpp"
#include "tempad/io.hpp"
#include "tempad/rng.hpp"
#include "tempad/series.hpp"
#include "tempad/stats.hpp"
#include "tempad/survey.hpp"
#include "tempad/trainer.hpp"

using namespace tempad;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

int hardware_jobs() { return static_cast<int>(std::max(1u, std::thread::hardware_concurrency())); }

void randomize_b(LoraAdapter& a, std::uint64_t seed, double scale) {
    Rng rng(seed);
    LoraAdapter::for_each_pair(a, [&](int, Projection, LoraPair& p) {
        for (real& v : p.b.values()) {
            v = static_cast<real>(rng.normal() * scale);
        }
    });
}

std::vector<TokenId> random_tokens(Rng& rng, std::size_t n) {
    std::vector<TokenId> t(n);
    for (auto& id : t) {
        id = static_cast<TokenId>(rng.uniform_index(vocab::size));
    }
    return t;
}

// 1. A fresh adapter scores exactly like the base model.
Outcome zero_init_identity() {
    const auto t0 = Clock::now();
    ModelConfig mc = ModelConfig::desk();
    mc.max_seq_len = 128;
    mc.init_seed = 11;
    auto weights = std::make_shared<const ModelWeights>(init_model(mc));
    ModelSession base(weights);
    ModelSession adapted(weights);
    LoraConfig lc;
    lc.targets = {all_projections.begin(), all_projections.end()};
    adapted.swap(std::make_shared<const LoraAdapter>(init_adapter(mc, lc, 5)));
    Rng rng(1);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        Prompt p;
        p.tokens = random_tokens(rng, 8 + rng.uniform_index(57));
        p.tokens[0] = vocab::bos;
        p.span_end = p.tokens.size();
        p.span_begin = p.span_end - 1 - rng.uniform_index(4);
        const auto a = score_option(base, p, 1.0);
        const auto b = score_option(adapted, p, 1.0);
        worst = std::max(worst, std::abs(a.log_probability - b.log_probability));
        worst = std::max(worst, static_cast<double>(std::abs(a.probability - b.probability)));
    }
    const double secs = seconds_since(t0);
    return {worst == 0.0 && secs < 1.0, "max |diff| = " + fmt(worst) + " over 100 prompts, " + fmt(secs) + " s"};
}

// 2. Training never writes to the base weights.
Outcome frozen_base() {
    ModelConfig mc = ModelConfig::desk();
    mc.init_seed = 3;
    const ModelWeights w = init_model(mc);
    const auto before = w.checksum();
    const auto docs = generate_synthetic_emotion_corpus(default_emotion_templates(), 300, 2);
    const auto chunks = pack_chunks(docs, 128, 1).chunks;
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.batch_size = 4;
    tc.grad_accum_steps = 1;
    tc.max_steps = 350;
    tc.checkpoint_every = 50;
    tc.seed = 9;
    const auto t0 = Clock::now();
    const auto r = train_adapter(w, init_adapter(mc, LoraConfig{}, 4), chunks, tc);
    const double secs = seconds_since(t0);
    const auto after = w.checksum();
    const bool ok = before == after && r.report.steps == 350 && r.adapter.meta.steps == 350 && secs < 300.0;
    return {ok, "checksum " + std::string(before == after ? "unchanged" : "CHANGED") + " after " +
                    std::to_string(r.report.steps) + " steps (4x128 tokens/step, desk model), " + fmt(secs) +
                    " s, loss " + fmt(r.report.trace.front().loss) + " -> " + fmt(r.report.trace.back().loss)};
}

// 3. Two scoring runs over the same adapter files give identical bytes.
Outcome determinism() {
    testing::TempDir dir("acc_det");
    ModelConfig mc = ModelConfig::desk();
    mc.n_layers = 2;
    mc.max_seq_len = 128;
    const ModelWeights w = init_model(mc);
    save_model(w, dir / "base.tmod");
    for (int k = 0; k < 3; ++k) {
        auto a = init_adapter(mc, LoraConfig{}, static_cast<std::uint64_t>(k));
        randomize_b(a, 100 + static_cast<std::uint64_t>(k), 0.05);
        a.meta.slice_id = k;
        a.meta.seed = 7;
        save_adapter(a, dir / ("a" + std::to_string(k) + ".tada"));
    }
    auto run = [&](int jobs) {
        auto weights = std::make_shared<const ModelWeights>(load_model(dir / "base.tmod"));
        std::vector<std::vector<ScoreRow>> per(3);
        std::vector<std::jthread> pool;
        for (int k = 0; k < 3; ++k) {
            auto body = [&, k] {
                ModelSession s(weights);
                s.swap(std::make_shared<const LoraAdapter>(load_adapter(dir / ("a" + std::to_string(k) + ".tada"))));
                for (const char* id : {"mood_weekly", "panasx_week", "nhs_expectation"}) {
                    const auto rows = score_instrument(s, builtin_instrument(id), 1.0);
                    per[static_cast<std::size_t>(k)].insert(per[static_cast<std::size_t>(k)].end(), rows.begin(),
                                                            rows.end());
                }
            };
            if (jobs > 1) {
                pool.emplace_back(body);
            } else {
                body();
            }
        }
        pool.clear();
        std::vector<ScoreRow> all;
        for (auto& p : per) {
            all.insert(all.end(), p.begin(), p.end());
        }
        std::ostringstream out;
        write_scores(out, all);
        return out.str();
    };
    const std::string a = run(1);
    const std::string b = run(3);
    const auto lines = std::count(a.begin(), a.end(), '\n');
    return {a == b, std::string(a == b ? "byte-identical" : "DIFFERENT") + " score CSVs (" + std::to_string(lines) +
                        " lines, sequential vs 3 threads)"};
}

// 4. Position t's logits never depend on tokens after t.
Outcome causality() {
    ModelConfig mc;
    mc.n_layers = 2;
    mc.d_model = 64;
    mc.n_heads = 4;
    mc.d_ff = 128;
    mc.max_seq_len = 48;
    mc.init_seed = 8;
    const ModelWeights w = init_model(mc);
    auto adapter = init_adapter(mc, LoraConfig{}, 2);
    randomize_b(adapter, 3, 0.1);
    Rng rng(4);
    int violations = 0;
    for (int i = 0; i < 1000; ++i) {
        auto tokens = random_tokens(rng, 2 + rng.uniform_index(47));
        const auto t = static_cast<std::size_t>(rng.uniform_index(tokens.size()));
        const LoraAdapter* a = i % 2 == 0 ? nullptr : &adapter;
        const Matrix before = forward(w, a, tokens);
        tokens[t] = static_cast<TokenId>((tokens[t] + 1 + rng.uniform_index(vocab::size - 1)) % vocab::size);
        const Matrix after = forward(w, a, tokens);
        for (std::size_t r = 0; r < t; ++r) {
            if (!std::equal(before.row(static_cast<int>(r)), before.row(static_cast<int>(r)) + before.cols(),
                            after.row(static_cast<int>(r)))) {
                ++violations;
                break;
            }
        }
    }
    return {violations == 0, std::to_string(violations) + " of 1000 perturbations changed an earlier position"};
}

// 5. Analytic adapter gradient vs double-precision finite differences.
Outcome gradient_check() {
    const auto t0 = Clock::now();
    testing::TempDir dir("acc_grad");
    double worst = 0.0;
    double worst_f64 = 0.0;
    int checked = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        ModelConfig mc = ModelConfig::tiny();
        mc.init_seed = seed;
        const ModelWeights w = init_model(mc);
        LoraConfig lc;
        lc.targets = {all_projections.begin(), all_projections.end()};
        auto a = init_adapter(mc, lc, 7 + seed);
        randomize_b(a, 5 + seed, 0.02);
        Rng rng(50 + seed);
        Chunk chunk;
        chunk.tokens = random_tokens(rng, 64);
        save_model(w, dir / "m.tmod");
        save_adapter(a, dir / "a.tada");
        const auto entries = sample_entries(a, 64, seed);
        auto g = adapter_gradient(w, a, chunk);
        const auto flat = flat_parameters(g);
        std::vector<double> analytic;
        for (const auto e : entries) {
            analytic.push_back(*flat[e]);
        }
        const auto numeric = testing::reference_gradient(dir / "m.tmod", dir / "a.tada", chunk.tokens, entries, 1e-3);
        worst = std::max(worst, max_relative_error(numeric, analytic));
        const auto analytic_f64 = testing::reference_analytic_gradient(dir / "m.tmod", dir / "a.tada", chunk.tokens, entries);
        worst_f64 = std::max(worst_f64, max_relative_error(numeric, analytic_f64));
        checked += static_cast<int>(entries.size());
    }
    const double secs = seconds_since(t0);
    // The float gradient is the one gated; the double one isolates float roundoff.
    return {worst < 1e-3 && secs < 60.0, "max relative error " + fmt(worst) + " (double build " + fmt(worst_f64) +
                                             ") over " + std::to_string(checked) + " entries (tiny model, 3 seeds), " +
                                             fmt(secs) + " s"};
}

// 6. Correlation and permutation-test oracles.
Outcome stats_oracles() {
    Rng rng(6);
    double worst_r = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto [x, y] = testing::random_pair(rng, 3 + rng.uniform_index(60));
        worst_r = std::max(worst_r, std::abs(pearson(x, y) - testing::pearson_raw_sums(x, y)));
    }
    int mismatches = 0;
    int cases = 0;
    for (std::size_t n = 3; n <= 8; ++n) {
        for (int trial = 0; trial < 5; ++trial) {
            auto [x, y] = testing::random_pair(rng, n);
            if (trial == 0) {
                x[1] = x[0];
            }
            mismatches += exact_permutation_test(x, y) == testing::heap_enumeration_p(x, y) ? 0 : 1;
            ++cases;
        }
    }
    std::vector<double> ps;
    for (int trial = 0; trial < 200; ++trial) {
        const auto [x, y] = testing::random_pair(rng, 20);
        // Independent noise: discard the built-in correlation.
        std::vector<double> noise(y.size());
        for (auto& v : noise) {
            v = rng.normal();
        }
        ps.push_back(permutation_test(x, noise, 999, static_cast<std::uint64_t>(trial)));
    }
    const double ks = testing::ks_uniform(ps);
    const bool ok = worst_r < 1e-12 && mismatches == 0 && ks < 0.1;
    return {ok, "pearson max |diff| " + fmt(worst_r) + "; exhaustive p mismatches " + std::to_string(mismatches) +
                    "/" + std::to_string(cases) + " (n=3..8); null KS " + fmt(ks)};
}

// 7. Multi-token option scores obey the chain rule; PANAS-X midpoint.
Outcome scoring_arithmetic() {
    ModelConfig mc;
    mc.n_layers = 1;
    mc.d_model = 32;
    mc.n_heads = 2;
    mc.d_ff = 64;
    mc.max_seq_len = 160;
    mc.init_seed = 12;
    auto weights = std::make_shared<const ModelWeights>(init_model(mc));
    ModelSession s(weights);
    double worst = 0.0;
    int options = 0;
    for (const char* id : {"nhs_expectation", "mood_weekly"}) {
        for (const auto& p : build_prompts(builtin_instrument(id))) {
            for (const double t : {0.25, 1.0, 4.0}) {
                // Brute force: one forward per conditional, multiply.
                long double product = 1.0L;
                for (std::size_t i = p.span_begin; i < p.span_end; ++i) {
                    const auto dist = next_token_distribution(*weights, nullptr,
                                                              std::span<const TokenId>(p.tokens.data(), i), t);
                    product *= static_cast<long double>(dist[static_cast<std::size_t>(p.tokens[i])]);
                }
                const auto score = score_option(s, p, t);
                worst = std::max(worst, std::abs(score.log_probability - static_cast<double>(std::log(product))));
                ++options;
            }
        }
    }
    const std::vector<int> values{1, 2, 3, 4, 5};
    const std::vector<std::vector<double>> uniform(6, std::vector<double>(5, 0.2));
    const double mid = panasx_combine(uniform, values);
    const std::vector<std::vector<double>> log_uniform(6, std::vector<double>(5, -1234.5));
    const double mid_log = panasx_combine_log(log_uniform, values);
    const bool ok = worst < 1e-9 && mid == 3.0 && mid_log == 3.0;
    return {ok, "chain-rule max |log diff| " + fmt(worst) + " over " + std::to_string(options) +
                    " option scorings; PANAS-X uniform = " + fmt(mid) + " / " + fmt(mid_log)};
}

// 8. Series transform examples and properties.
Outcome series_transforms() {
    bool examples = rolling_mean(std::vector<double>{0, 3, 6, 9}, 3) == std::vector<double>{0, 1.5, 3, 6} &&
                    min_max_normalize(std::vector<double>{2, 4, 6}) == std::vector<double>{0, 0.5, 1};
    examples = examples && rolling_mean(std::vector<double>{5, 1, 4}, 1) == std::vector<double>{5, 1, 4};
    const auto band = seed_aggregate(std::vector<std::vector<double>>{{0.2}, {0.4}, {0.6}});
    examples = examples && std::abs(band[0].mean - 0.4) < 1e-15 && band[0].min == 0.2 && band[0].max == 0.6;
    Rng rng(8);
    int failures = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> v(2 + rng.uniform_index(50));
        for (auto& x : v) {
            x = rng.normal() * 3.0;
        }
        const auto n = min_max_normalize(v);
        const auto nn = min_max_normalize(n);
        const double a = 0.01 + 100.0 * rng.uniform01();
        const double b = rng.normal() * 10.0;
        std::vector<double> t(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            t[i] = a * v[i] + b;
        }
        const auto nt = min_max_normalize(t);
        const auto r1 = rolling_mean(v, 1);
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (std::abs(nn[i] - n[i]) > 1e-12 || std::abs(nt[i] - n[i]) > 1e-9 || r1[i] != v[i]) {
                ++failures;
                break;
            }
        }
    }
    return {examples && failures == 0, std::string("examples ") + (examples ? "exact" : "WRONG") +
                                           "; idempotence/affine/identity failures " + std::to_string(failures) +
                                           " of 1000 random series"};
}

// 9. Synthetic happy/sad mix at desk scale.
Outcome mix_experiment() {
    const auto cfg = MixExperimentConfig::desk();
    RunOptions o;
    o.jobs = hardware_jobs();
    const auto t0 = Clock::now();
    const auto r = run_mix_experiment(cfg, o);
    const double secs = seconds_since(t0);
    double r_h = 0.0, p_h = 1.0, r_s = 0.0, p_s = 1.0;
    for (const auto& s : r.cells.front().summary) {
        if (s.option == "happy") {
            r_h = s.r;
            p_h = s.p;
        } else if (s.option == "sad") {
            r_s = s.r;
            p_s = s.p;
        }
    }
    const bool ok = r_h > 0.8 && r_s < -0.8 && p_h < 0.05 && p_s < 0.05 && secs < 45 * 60;
    return {ok, "r(happy) " + fmt(r_h) + " p " + fmt(p_h) + "; r(sad) " + fmt(r_s) + " p " + fmt(p_s) + "; " +
                    std::to_string(cfg.fractions.size()) + " splits x " + std::to_string(cfg.seeds) + " seeds, " +
                    std::to_string(cfg.train.max_steps) + " steps, " + std::to_string(cfg.permutations) +
                    " permutations, " + fmt(secs) + " s on " + std::to_string(o.jobs) + " threads"};
}

// 10. One training pass scored at three checkpoints.
Outcome checkpoint_sweep() {
    testing::TempDir dir("acc_sweep");
    auto cfg = MixExperimentConfig::ci();
    cfg.train.max_steps = 150;
    cfg.train.checkpoint_every = 50;
    SweepConfig sweep;
    sweep.checkpoints = {50, 100, 150};
    RunOptions o;
    o.out_dir = dir.path();
    o.jobs = hardware_jobs();
    const auto r = run_sweep(sweep, cfg, o);
    const int runs = static_cast<int>(cfg.fractions.size()) * cfg.seeds;
    std::set<std::string> distinct;
    for (const auto& c : r.cells) {
        std::string key;
        for (const auto& s : c.summary) {
            key += s.option + "=" + format_number(s.r) + ";";
        }
        distinct.insert(key);
    }
    const auto table = read_csv(dir / cfg.name / "summary.csv");
    const bool ok = r.cells.size() == 3 && distinct.size() == 3 && r.adapters_trained == runs &&
                    r.adapters_reused == 0 && r.runs_scored == 3 * runs &&
                    table.rows.size() == 3 * cfg.options.size();
    return {ok, std::to_string(r.cells.size()) + " cells, " + std::to_string(distinct.size()) +
                    " distinct summaries; trained " + std::to_string(r.adapters_trained) + " (= " +
                    std::to_string(cfg.fractions.size()) + " splits x " + std::to_string(cfg.seeds) +
                    " seeds), scored " + std::to_string(r.runs_scored) + ", summary rows " +
                    std::to_string(table.rows.size())};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"zero-init identity", zero_init_identity},
        {"frozen base", frozen_base},
        {"determinism", determinism},
        {"causality", causality},
        {"gradient check", gradient_check},
        {"stats oracles", stats_oracles},
        {"scoring arithmetic", scoring_arithmetic},
        {"series transforms", series_transforms},
        {"synthetic mix", mix_experiment},
        {"checkpoint sweep", checkpoint_sweep},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        selected.insert(std::atoi(argv[i]));
    }
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!selected.empty() && selected.count(id) == 0) {
            continue;
        }
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
