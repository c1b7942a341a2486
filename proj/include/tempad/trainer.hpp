// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "tempad/adapters.hpp"
#include "tempad/model.hpp"
#include "tempad/tokenizer.hpp"

namespace tempad::inline TEMPAD_PRECISION_NS {

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;

    bool operator==(const AdamWConfig&) const = default;
};

/// `steps`: train exactly max_steps optimizer steps, cycling through the data
/// as often as needed. `epochs`: stop at min(max_steps, ceil(max_epochs *
/// steps_per_epoch)).
enum class StopMode { steps, epochs };

struct TrainConfig {
    double learning_rate = 3e-4;
    int batch_size = 6;
    int grad_accum_steps = 4;
    std::int64_t max_steps = 350;
    std::int64_t checkpoint_every = 50;
    double max_epochs = 1.0;
    StopMode stop_mode = StopMode::steps;
    std::uint64_t seed = 0;
    AdamWConfig adamw;

    void validate() const;

    /// The values the method was originally run with on an 8B model
    /// (lr 5e-6, batch 6, 4 accumulation steps, 350 steps, snapshots every 50).
    static TrainConfig paper();

    bool operator==(const TrainConfig&) const = default;
};

struct LossPoint {
    std::int64_t step = 0;
    double loss = 0.0;  // mean token cross-entropy in nats over the step's batch
    std::int64_t tokens_seen = 0;
};

struct TrainReport {
    std::vector<LossPoint> trace;
    std::int64_t steps = 0;
    std::int64_t tokens_seen = 0;
    double wall_seconds = 0.0;
};

struct TrainResult {
    LoraAdapter adapter;
    TrainReport report;
    std::vector<LoraAdapter> checkpoints;  // one every checkpoint_every steps
};

/// Called with each snapshot as it is taken (e.g. to write it to disk).
using CheckpointSink = std::function<void(const LoraAdapter&)>;

/// Mean cross-entropy (nats) of logits row i against targets[i]. PAD targets
/// are masked. Throws when every position is masked.
double lm_loss(const Matrix& logits, std::span<const TokenId> targets);

/// Fine-tunes only the adapter's A/B matrices on next-token prediction over
/// `chunks`; the base weights are read-only. Optimizer steps happen every
/// grad_accum_steps micro-batches of batch_size chunks. Deterministic given
/// the config seed.
TrainResult train_adapter(const ModelWeights& weights, LoraAdapter adapter, std::span<const Chunk> chunks,
                          const TrainConfig& config, const CheckpointSink& sink = {});

/// Optimizer steps in one pass over `chunk_count` chunks.
std::int64_t steps_per_epoch(std::size_t chunk_count, const TrainConfig& config);

/// Analytic gradient of the mean loss on one chunk with respect to A and B.
LoraAdapter adapter_gradient(const ModelWeights& weights, const LoraAdapter& adapter, const Chunk& chunk);

struct GradCheckResult {
    double max_relative_error = 0.0;
    int entries_checked = 0;
};

/// Flat indices into the adapter's A/B entries, in for_each_pair order with
/// A before B.
std::vector<std::size_t> sample_entries(const LoraAdapter& adapter, int samples, std::uint64_t seed);

/// Pointers to every A/B entry in the same flat order.
std::vector<real*> flat_parameters(LoraAdapter& adapter);

/// Fourth-order central finite differences of the chunk loss.
std::vector<double> numeric_gradient(const ModelWeights& weights, const LoraAdapter& adapter, const Chunk& chunk,
                                     std::span<const std::size_t> entries, double epsilon);

/// |n - a| / max(|n|, |a|, 1e-8), maximised over entries.
double max_relative_error(std::span<const double> numeric, std::span<const double> analytic);

/// Compares adapter_gradient with numeric_gradient on `samples` random
/// entries. In float the loss itself is noisy at roughly 1e-6 absolute per
/// gradient entry, so small entries dominate the error.
GradCheckResult grad_check(const ModelWeights& weights, const LoraAdapter& adapter, const Chunk& chunk,
                           double epsilon, int samples, std::uint64_t seed);

/// CSV with header `step,loss,tokens_seen`.
void write_loss_trace(const std::filesystem::path& path, const TrainReport& report);

}  // namespace tempad
