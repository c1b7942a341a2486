// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include "tempad/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>
#include <limits>
#include <numeric>

#include "tempad/error.hpp"
#include "tempad/io.hpp"
#include "tempad/rng.hpp"
#include "transformer.hpp"

namespace tempad::inline TEMPAD_PRECISION_NS {

namespace {

struct SequencePair {
    std::span<const TokenId> inputs;
    std::span<const TokenId> targets;
};

SequencePair shift(const Chunk& chunk) {
    const std::span<const TokenId> all(chunk.tokens);
    require(all.size() >= 2, ErrorCategory::invalid_argument, "chunk shorter than two tokens");
    return {all.first(all.size() - 1), all.subspan(1)};
}

std::size_t unmasked(std::span<const TokenId> targets) {
    std::size_t n = 0;
    for (const TokenId t : targets) {
        n += t != vocab::pad ? 1 : 0;
    }
    return n;
}

// Sum of token cross-entropies; when dlogits is given it receives
// grad_scale * (softmax - onehot) for unmasked rows and 0 elsewhere.
double cross_entropy(const Matrix& logits, std::span<const TokenId> targets, real grad_scale, Matrix* dlogits) {
    require(static_cast<std::size_t>(logits.rows()) == targets.size(), ErrorCategory::invalid_argument,
            "logits/targets length mismatch");
    const int v = logits.cols();
    if (dlogits != nullptr) {
        dlogits->resize(logits.rows(), v);
    }
    double total = 0.0;
    for (int i = 0; i < logits.rows(); ++i) {
        const TokenId target = targets[static_cast<std::size_t>(i)];
        if (target == vocab::pad) {
            continue;
        }
        require(target >= 0 && target < v, ErrorCategory::invalid_argument, "target id out of range");
        const real* row = logits.row(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < v; ++j) {
            mx = std::max(mx, static_cast<double>(row[j]));
        }
        double sum = 0.0;
        for (int j = 0; j < v; ++j) {
            sum += std::exp(static_cast<double>(row[j]) - mx);
        }
        const double lse = mx + std::log(sum);
        total += lse - static_cast<double>(row[target]);
        if (dlogits != nullptr) {
            real* drow = dlogits->row(i);
            for (int j = 0; j < v; ++j) {
                drow[j] = grad_scale * static_cast<real>(std::exp(static_cast<double>(row[j]) - lse));
            }
            drow[target] -= grad_scale;
        }
    }
    return total;
}

class AdamW {
public:
    AdamW(const LoraAdapter& shape, const AdamWConfig& cfg, double lr)
        : cfg_(cfg), lr_(lr), m_(zeros_like(shape)), v_(zeros_like(shape)) {}

    void step(LoraAdapter& params, const LoraAdapter& grads) {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        LoraAdapter::for_each_pair(params, [&](int l, Projection p, LoraPair& pair) {
            const LoraPair* g = grads.find(l, p);
            LoraPair* m = m_.find(l, p);
            LoraPair* v = v_.find(l, p);
            update(pair.a, g->a, m->a, v->a, bc1, bc2);
            update(pair.b, g->b, m->b, v->b, bc1, bc2);
        });
    }

private:
    void update(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v, double bc1, double bc2) const {
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double g = grad.data()[i];
            const double mi = cfg_.beta1 * m.data()[i] + (1.0 - cfg_.beta1) * g;
            const double vi = cfg_.beta2 * v.data()[i] + (1.0 - cfg_.beta2) * g * g;
            m.data()[i] = static_cast<real>(mi);
            v.data()[i] = static_cast<real>(vi);
            const double p = param.data()[i];
            const double update = (mi / bc1) / (std::sqrt(vi / bc2) + cfg_.eps) + cfg_.weight_decay * p;
            param.data()[i] = static_cast<real>(p - lr_ * update);
        }
    }

    AdamWConfig cfg_;
    double lr_;
    LoraAdapter m_;
    LoraAdapter v_;
    std::int64_t t_ = 0;
};

// Endless stream of chunk indices, reshuffled per epoch from the run seed.
class BatchStream {
public:
    BatchStream(std::size_t n, std::uint64_t seed) : order_(n), seed_(seed) { reshuffle(); }

    std::size_t next() {
        if (pos_ == order_.size()) {
            ++epoch_;
            reshuffle();
        }
        return order_[pos_++];
    }

private:
    void reshuffle() {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        Rng rng(derive_seed(seed_, epoch_));
        rng.shuffle(std::span(order_));
        pos_ = 0;
    }

    std::vector<std::size_t> order_;
    std::uint64_t seed_;
    std::uint64_t epoch_ = 0;
    std::size_t pos_ = 0;
};

double chunk_loss(const ModelWeights& weights, const LoraAdapter& adapter, const Chunk& chunk) {
    const auto seq = shift(chunk);
    const Matrix logits = forward(weights, &adapter, seq.inputs);
    const std::size_t n = unmasked(seq.targets);
    require(n > 0, ErrorCategory::invalid_argument, "chunk has no unmasked targets");
    return cross_entropy(logits, seq.targets, real(0.0), nullptr) / static_cast<double>(n);
}

}  // namespace

void TrainConfig::validate() const {
    require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorCategory::invalid_argument,
            "learning_rate must be positive");
    require(batch_size > 0 && grad_accum_steps > 0, ErrorCategory::invalid_argument,
            "batch_size and grad_accum_steps must be positive");
    require(max_steps >= 0, ErrorCategory::invalid_argument, "max_steps must be non-negative");
    require(checkpoint_every > 0, ErrorCategory::invalid_argument, "checkpoint_every must be positive");
    require(max_steps == 0 || checkpoint_every <= max_steps, ErrorCategory::invalid_argument,
            "checkpoint_every must not exceed max_steps");
    require(max_epochs > 0.0, ErrorCategory::invalid_argument, "max_epochs must be positive");
    require(adamw.beta1 >= 0.0 && adamw.beta1 < 1.0 && adamw.beta2 >= 0.0 && adamw.beta2 < 1.0 &&
                adamw.eps > 0.0 && adamw.weight_decay >= 0.0,
            ErrorCategory::invalid_argument, "invalid AdamW parameters");
}

TrainConfig TrainConfig::paper() {
    TrainConfig c;
    c.learning_rate = 5e-6;
    c.batch_size = 6;
    c.grad_accum_steps = 4;
    c.max_steps = 350;
    c.checkpoint_every = 50;
    c.max_epochs = 1.0;
    return c;
}

double lm_loss(const Matrix& logits, std::span<const TokenId> targets) {
    const std::size_t n = unmasked(targets);
    require(n > 0, ErrorCategory::invalid_argument, "all target positions are masked");
    return cross_entropy(logits, targets, real(0.0), nullptr) / static_cast<double>(n);
}

std::int64_t steps_per_epoch(std::size_t chunk_count, const TrainConfig& config) {
    const auto per_step = static_cast<std::size_t>(config.batch_size) * static_cast<std::size_t>(config.grad_accum_steps);
    return static_cast<std::int64_t>((chunk_count + per_step - 1) / per_step);
}

TrainResult train_adapter(const ModelWeights& weights, LoraAdapter adapter, std::span<const Chunk> chunks,
                          const TrainConfig& config, const CheckpointSink& sink) {
    config.validate();
    require(!chunks.empty(), ErrorCategory::empty_input, "no training chunks (empty slice?)");
    check_compatible(weights.config, adapter);
    const auto started = std::chrono::steady_clock::now();

    std::int64_t total_steps = config.max_steps;
    if (config.stop_mode == StopMode::epochs) {
        const auto by_epochs = static_cast<std::int64_t>(
            std::ceil(config.max_epochs * static_cast<double>(steps_per_epoch(chunks.size(), config))));
        total_steps = std::min(total_steps, by_epochs);
    }

    TrainResult result;
    AdamW optimizer(adapter, config.adamw, config.learning_rate);
    BatchStream stream(chunks.size(), config.seed);
    const std::int64_t base_steps = adapter.meta.steps;
    const int micro_per_step = config.batch_size * config.grad_accum_steps;
    std::vector<std::size_t> picked(static_cast<std::size_t>(micro_per_step));
    detail::ForwardCache cache;
    Matrix dlogits;

    for (std::int64_t step = 1; step <= total_steps; ++step) {
        std::size_t step_tokens = 0;
        for (auto& idx : picked) {
            idx = stream.next();
            step_tokens += unmasked(shift(chunks[idx]).targets);
        }
        require(step_tokens > 0, ErrorCategory::invalid_argument, "batch has no unmasked targets");
        const real grad_scale = real(1.0) / static_cast<real>(step_tokens);

        LoraAdapter grads = zeros_like(adapter);
        double loss_sum = 0.0;
        for (const auto idx : picked) {
            const auto seq = shift(chunks[idx]);
            const Matrix logits = detail::run_forward(weights, &adapter, seq.inputs, &cache);
            loss_sum += cross_entropy(logits, seq.targets, grad_scale, &dlogits);
            detail::run_backward(weights, adapter, cache, dlogits, grads);
        }
        const double loss = loss_sum / static_cast<double>(step_tokens);
        if (!std::isfinite(loss)) {
            fail(ErrorCategory::numeric, "non-finite loss at step " + std::to_string(step) + " (slice " +
                                             std::to_string(adapter.meta.slice_id) + ", seed " +
                                             std::to_string(config.seed) + "); try a lower learning rate");
        }
        optimizer.step(adapter, grads);
        adapter.meta.steps = base_steps + step;
        result.report.tokens_seen += static_cast<std::int64_t>(step_tokens);
        result.report.trace.push_back({adapter.meta.steps, loss, result.report.tokens_seen});
        result.report.steps = step;

        if (step % config.checkpoint_every == 0) {
            result.checkpoints.push_back(adapter);
            if (sink) {
                sink(adapter);
            }
        }
    }
    result.report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.adapter = std::move(adapter);
    return result;
}

LoraAdapter adapter_gradient(const ModelWeights& weights, const LoraAdapter& adapter, const Chunk& chunk) {
    const auto seq = shift(chunk);
    const std::size_t n = unmasked(seq.targets);
    require(n > 0, ErrorCategory::invalid_argument, "chunk has no unmasked targets");
    detail::ForwardCache cache;
    Matrix dlogits;
    const Matrix logits = detail::run_forward(weights, &adapter, seq.inputs, &cache);
    cross_entropy(logits, seq.targets, real(1.0) / static_cast<real>(n), &dlogits);
    LoraAdapter grads = zeros_like(adapter);
    detail::run_backward(weights, adapter, cache, dlogits, grads);
    return grads;
}

std::vector<std::size_t> sample_entries(const LoraAdapter& adapter, int samples, std::uint64_t seed) {
    require(samples > 0, ErrorCategory::invalid_argument, "need at least one sampled entry");
    std::vector<std::size_t> idx(static_cast<std::size_t>(adapter.parameter_count()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    Rng rng(seed);
    rng.shuffle(std::span(idx));
    idx.resize(std::min(idx.size(), static_cast<std::size_t>(samples)));
    return idx;
}

std::vector<real*> flat_parameters(LoraAdapter& adapter) {
    std::vector<real*> out;
    LoraAdapter::for_each_pair(adapter, [&out](int, Projection, LoraPair& pair) {
        for (real& v : pair.a.values()) {
            out.push_back(&v);
        }
        for (real& v : pair.b.values()) {
            out.push_back(&v);
        }
    });
    return out;
}

std::vector<double> numeric_gradient(const ModelWeights& weights, const LoraAdapter& adapter, const Chunk& chunk,
                                     std::span<const std::size_t> entries, double epsilon) {
    require(epsilon > 0.0, ErrorCategory::invalid_argument, "finite differences need epsilon > 0");
    LoraAdapter probe = adapter;
    const std::vector<real*> params = flat_parameters(probe);
    const auto h = static_cast<real>(epsilon);
    std::vector<double> out;
    out.reserve(entries.size());
    for (const std::size_t e : entries) {
        require(e < params.size(), ErrorCategory::invalid_argument, "adapter entry out of range");
        real& value = *params[e];
        const real original = value;
        auto loss_at = [&](real delta) {
            value = original + delta;
            return chunk_loss(weights, probe, chunk);
        };
        // Fourth-order central stencil.
        const double d1 = loss_at(h) - loss_at(-h);
        const double d2 = loss_at(real(2) * h) - loss_at(real(-2) * h);
        value = original;
        out.push_back((8.0 * d1 - d2) / (12.0 * static_cast<double>(h)));
    }
    return out;
}

double max_relative_error(std::span<const double> numeric, std::span<const double> analytic) {
    require(numeric.size() == analytic.size(), ErrorCategory::invalid_argument, "gradient length mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
        const double denom = std::max({std::abs(numeric[i]), std::abs(analytic[i]), 1e-8});
        worst = std::max(worst, std::abs(numeric[i] - analytic[i]) / denom);
    }
    return worst;
}

GradCheckResult grad_check(const ModelWeights& weights, const LoraAdapter& adapter, const Chunk& chunk,
                           double epsilon, int samples, std::uint64_t seed) {
    const std::vector<std::size_t> entries = sample_entries(adapter, samples, seed);
    LoraAdapter analytic = adapter_gradient(weights, adapter, chunk);
    const std::vector<real*> grads = flat_parameters(analytic);
    std::vector<double> exact;
    for (const std::size_t e : entries) {
        exact.push_back(*grads[e]);
    }
    const std::vector<double> numeric = numeric_gradient(weights, adapter, chunk, entries, epsilon);
    return {max_relative_error(numeric, exact), static_cast<int>(entries.size())};
}

void write_loss_trace(const std::filesystem::path& path, const TrainReport& report) {
    std::ostringstream out;
    write_csv_preamble(out);
    out << "step,loss,tokens_seen\n";
    for (const auto& p : report.trace) {
        out << p.step << ',' << format_number(p.loss) << ',' << p.tokens_seen << '\n';
    }
    write_file_atomic(path, out.str());
}

}  // namespace tempad
