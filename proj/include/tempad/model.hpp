// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tempad/matrix.hpp"
#include "tempad/tokenizer.hpp"

namespace tempad::inline TEMPAD_PRECISION_NS {

struct ModelConfig {
    int n_layers = 4;
    int n_heads = 4;
    int d_model = 128;
    int d_ff = 512;
    int vocab_size = vocab::size;
    int max_seq_len = 512;
    std::uint64_t init_seed = 0;

    int head_dim() const { return d_model / n_heads; }

    /// Throws `Error{invalid_argument}` for non-positive fields or heads that
    /// do not divide d_model.
    void validate() const;

    /// 4 layers, d_model 128, 4 heads, d_ff 512, 512 positions.
    static ModelConfig desk();
    /// 1 layer, d_model 16: small enough for finite-difference checks.
    static ModelConfig tiny();

    bool operator==(const ModelConfig&) const = default;
};

/// Weight matrices an adapter can target. All are stored input-major
/// (d_in × d_out) and applied as y = x W.
enum class Projection : std::uint8_t { query, key, value, output, ff_up, ff_down };
inline constexpr int projection_count = 6;
inline constexpr std::array<Projection, projection_count> all_projections{
    Projection::query, Projection::key, Projection::value, Projection::output, Projection::ff_up, Projection::ff_down};

std::string_view projection_name(Projection p) noexcept;
Projection parse_projection(std::string_view name);

struct ProjectionShape {
    int d_in = 0;
    int d_out = 0;
};
ProjectionShape projection_shape(const ModelConfig& config, Projection p) noexcept;

struct LayerWeights {
    Matrix ln1_gain, ln1_bias;  // 1 × d_model
    Matrix query, key, value, output;
    Matrix ln2_gain, ln2_bias;
    Matrix ff_up;    // d_model × d_ff
    Matrix ff_down;  // d_ff × d_model

    const Matrix& projection(Projection p) const noexcept;
    Matrix& projection(Projection p) noexcept;
};

/// Pre-norm decoder-only transformer with learned positions and an untied
/// output head. Immutable once initialised or loaded.
struct ModelWeights {
    ModelConfig config;
    Matrix token_embedding;     // vocab × d_model
    Matrix position_embedding;  // max_seq_len × d_model
    std::vector<LayerWeights> layers;
    Matrix final_gain, final_bias;
    Matrix head;  // d_model × vocab

    /// FNV-1a over every parameter in a fixed order.
    std::uint64_t checksum() const;

    /// Visits (name, tensor) in serialization order.
    template <typename Self, typename F>
    static void for_each_tensor(Self& self, F&& f);
};

/// Normal(0, 0.02) for embeddings and projections; output and ff_down use
/// 0.02 / sqrt(2 * n_layers). Norm gains start at 1, biases at 0.
ModelWeights init_model(const ModelConfig& config);

void save_model(const ModelWeights& weights, const std::filesystem::path& path);
ModelWeights load_model(const std::filesystem::path& path);

struct LoraAdapter;

/// Logits for every position (tokens.size() × vocab). Position t depends only
/// on tokens[0..t]. `adapter` may be null for the bare base model.
Matrix forward(const ModelWeights& weights, const LoraAdapter* adapter, std::span<const TokenId> tokens);

/// softmax(logits / temperature), computed in double.
std::vector<double> softmax_with_temperature(std::span<const real> logits, double temperature);
/// log softmax(logits / temperature) for a single entry.
double log_softmax_at(std::span<const real> logits, double temperature, int index);

/// Distribution of the token following `context`.
std::vector<double> next_token_distribution(const ModelWeights& weights, const LoraAdapter* adapter,
                                            std::span<const TokenId> context, double temperature);

template <typename Self, typename F>
void ModelWeights::for_each_tensor(Self& self, F&& f) {
    f(std::string("token_embedding"), self.token_embedding);
    f(std::string("position_embedding"), self.position_embedding);
    for (std::size_t l = 0; l < self.layers.size(); ++l) {
        auto& layer = self.layers[l];
        const std::string p = "layers." + std::to_string(l) + ".";
        f(p + "ln1.gain", layer.ln1_gain);
        f(p + "ln1.bias", layer.ln1_bias);
        for (const auto proj : all_projections) {
            f(p + std::string(projection_name(proj)), layer.projection(proj));
        }
        f(p + "ln2.gain", layer.ln2_gain);
        f(p + "ln2.bias", layer.ln2_bias);
    }
    f(std::string("final.gain"), self.final_gain);
    f(std::string("final.bias"), self.final_bias);
    f(std::string("head"), self.head);
}

}  // namespace tempad
