// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tempad/matrix.hpp"
#include "tempad/model.hpp"

namespace tempad::inline TEMPAD_PRECISION_NS {

struct LoraConfig {
    int rank = 8;
    double alpha = 16.0;
    std::vector<Projection> targets{Projection::query, Projection::value};

    real scale() const { return static_cast<real>(alpha / rank); }
    bool targets_projection(Projection p) const;

    bool operator==(const LoraConfig&) const = default;
};

/// A: rank × d_in, B: d_out × rank. The update to y = x W is
/// (alpha / rank) * x A^T B^T, computed as two thin products.
struct LoraPair {
    Matrix a;
    Matrix b;

    bool operator==(const LoraPair&) const = default;
};

struct AdapterMetadata {
    int slice_id = -1;
    std::uint64_t seed = 0;
    std::int64_t steps = 0;
    std::string created;  // free-form timestamp, set by whoever writes the file

    bool operator==(const AdapterMetadata&) const = default;
};

struct LoraAdapter {
    LoraConfig config;
    AdapterMetadata meta;
    ModelConfig model;  // dimensions the adapter was built for; init_seed ignored
    std::vector<std::array<std::optional<LoraPair>, projection_count>> layers;

    const LoraPair* find(int layer, Projection p) const;
    LoraPair* find(int layer, Projection p);

    /// Visits every (layer, projection, pair) present, in serialization order.
    template <typename Self, typename F>
    static void for_each_pair(Self& self, F&& f) {
        for (std::size_t l = 0; l < self.layers.size(); ++l) {
            for (const auto p : all_projections) {
                if (auto& slot = self.layers[l][static_cast<std::size_t>(p)]; slot) {
                    f(static_cast<int>(l), p, *slot);
                }
            }
        }
    }

    std::size_t parameter_count() const;
    bool operator==(const LoraAdapter&) const = default;
};

/// A ~ Normal(0, 1/rank) (variance), B = 0, so a fresh adapter changes nothing.
LoraAdapter init_adapter(const ModelConfig& model, const LoraConfig& config, std::uint64_t seed);

/// Same structure as `adapter`, all entries zero (gradient / moment buffers).
LoraAdapter zeros_like(const LoraAdapter& adapter);

/// (alpha / rank) * B * A, shaped d_out × d_in. For inspection and tests.
Matrix effective_delta(const LoraAdapter& adapter, int layer, Projection target);

/// Throws `Error{invalid_argument}` unless every adapter matrix fits the model.
void check_compatible(const ModelConfig& model, const LoraAdapter& adapter);

void save_adapter(const LoraAdapter& adapter, const std::filesystem::path& path);
LoraAdapter load_adapter(const std::filesystem::path& path);

/// A base model plus at most one active adapter. Swapping only replaces the
/// adapter pointer; base weights are shared and never modified, so many
/// sessions can run over one set of weights.
class ModelSession {
public:
    explicit ModelSession(std::shared_ptr<const ModelWeights> weights);

    void swap(std::shared_ptr<const LoraAdapter> adapter);
    const LoraAdapter* active() const noexcept { return adapter_.get(); }
    const ModelWeights& weights() const noexcept { return *weights_; }

    Matrix forward(std::span<const TokenId> tokens) const;
    std::vector<double> next_token_distribution(std::span<const TokenId> context, double temperature) const;

private:
    std::shared_ptr<const ModelWeights> weights_;
    std::shared_ptr<const LoraAdapter> adapter_;
};

}  // namespace tempad
