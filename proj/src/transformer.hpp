// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

// Internal: activation cache and reverse pass shared by the model and trainer.

#pragma once

#include <array>
#include <span>
#include <vector>

#include "tempad/adapters.hpp"
#include "tempad/matrix.hpp"
#include "tempad/model.hpp"

namespace tempad::inline TEMPAD_PRECISION_NS::detail {

struct NormCache {
    Matrix out;
    std::vector<real> mean;
    std::vector<real> rstd;
};

struct LayerCache {
    Matrix x_in;
    NormCache ln1;
    Matrix q, k, v;
    std::vector<Matrix> probs;  // per head, T × T (lower triangle used)
    Matrix attn;                // concatenated head outputs, T × d_model
    Matrix x_mid;
    NormCache ln2;
    Matrix ff_pre;
    Matrix ff_act;
    std::array<Matrix, projection_count> lora_u;  // x A^T per targeted projection
};

struct ForwardCache {
    std::vector<LayerCache> layers;
    Matrix x_final;
    NormCache ln_final;
};

/// One code path for inference and training; `cache` may be null.
Matrix run_forward(const ModelWeights& w, const LoraAdapter* adapter, std::span<const TokenId> tokens,
                   ForwardCache* cache);

/// Accumulates d(loss)/d(A, B) into `grads` given d(loss)/d(logits).
/// Base weights receive no gradient.
void run_backward(const ModelWeights& w, const LoraAdapter& adapter, const ForwardCache& cache,
                  const Matrix& dlogits, LoraAdapter& grads);

}  // namespace tempad::detail
