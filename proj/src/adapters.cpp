// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include "tempad/adapters.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tempad/error.hpp"
#include "tempad/rng.hpp"
#include "tempad/tensor_file.hpp"

namespace tempad::inline TEMPAD_PRECISION_NS {

namespace {

constexpr std::array<char, 4> adapter_magic{'T', 'A', 'D', 'A'};

std::string join_targets(const std::vector<Projection>& targets) {
    std::string out;
    for (const auto p : targets) {
        if (!out.empty()) {
            out += ',';
        }
        out += projection_name(p);
    }
    return out;
}

std::vector<Projection> split_targets(const std::string& s) {
    std::vector<Projection> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        out.push_back(parse_projection(item));
    }
    return out;
}

std::string pair_name(int layer, Projection p, char which) {
    return "layers." + std::to_string(layer) + "." + std::string(projection_name(p)) + ".lora_" + which;
}

}  // namespace

bool LoraConfig::targets_projection(Projection p) const {
    return std::find(targets.begin(), targets.end(), p) != targets.end();
}

const LoraPair* LoraAdapter::find(int layer, Projection p) const {
    if (layer < 0 || static_cast<std::size_t>(layer) >= layers.size()) {
        return nullptr;
    }
    const auto& slot = layers[static_cast<std::size_t>(layer)][static_cast<std::size_t>(p)];
    return slot ? &*slot : nullptr;
}

LoraPair* LoraAdapter::find(int layer, Projection p) {
    return const_cast<LoraPair*>(static_cast<const LoraAdapter&>(*this).find(layer, p));
}

std::size_t LoraAdapter::parameter_count() const {
    std::size_t n = 0;
    for_each_pair(*this, [&n](int, Projection, const LoraPair& pair) { n += pair.a.size() + pair.b.size(); });
    return n;
}

LoraAdapter init_adapter(const ModelConfig& model, const LoraConfig& config, std::uint64_t seed) {
    model.validate();
    require(config.rank > 0, ErrorCategory::invalid_argument, "LoRA rank must be positive");
    require(config.alpha > 0.0, ErrorCategory::invalid_argument, "LoRA alpha must be positive");
    require(!config.targets.empty(), ErrorCategory::invalid_argument, "LoRA needs at least one target");
    for (const auto p : config.targets) {
        const auto shape = projection_shape(model, p);
        require(config.rank <= std::min(shape.d_in, shape.d_out), ErrorCategory::invalid_argument,
                "LoRA rank " + std::to_string(config.rank) + " exceeds the dimensions of target '" +
                    std::string(projection_name(p)) + "'");
    }

    LoraAdapter adapter;
    adapter.config = config;
    adapter.model = model;
    adapter.model.init_seed = 0;
    adapter.meta.seed = seed;
    adapter.layers.resize(static_cast<std::size_t>(model.n_layers));
    Rng rng(seed);
    const double std = 1.0 / std::sqrt(static_cast<double>(config.rank));
    for (int l = 0; l < model.n_layers; ++l) {
        for (const auto p : all_projections) {
            if (!config.targets_projection(p)) {
                continue;
            }
            const auto shape = projection_shape(model, p);
            LoraPair pair{Matrix(config.rank, shape.d_in), Matrix(shape.d_out, config.rank)};
            for (real& v : pair.a.values()) {
                v = static_cast<real>(rng.normal() * std);
            }
            adapter.layers[static_cast<std::size_t>(l)][static_cast<std::size_t>(p)] = std::move(pair);
        }
    }
    return adapter;
}

LoraAdapter zeros_like(const LoraAdapter& adapter) {
    LoraAdapter z = adapter;
    LoraAdapter::for_each_pair(z, [](int, Projection, LoraPair& pair) {
        pair.a.fill(real(0.0));
        pair.b.fill(real(0.0));
    });
    return z;
}

Matrix effective_delta(const LoraAdapter& adapter, int layer, Projection target) {
    const LoraPair* pair = adapter.find(layer, target);
    require(pair != nullptr, ErrorCategory::invalid_argument,
            "adapter has no target '" + std::string(projection_name(target)) + "' in layer " + std::to_string(layer));
    const int d_out = pair->b.rows();
    const int d_in = pair->a.cols();
    const int r = pair->a.rows();
    const real scale = adapter.config.scale();
    Matrix delta(d_out, d_in);
    for (int i = 0; i < d_out; ++i) {
        for (int k = 0; k < r; ++k) {
            kernels::axpy(scale * pair->b(i, k), pair->a.row(k), delta.row(i), d_in);
        }
    }
    return delta;
}

void check_compatible(const ModelConfig& model, const LoraAdapter& adapter) {
    require(static_cast<int>(adapter.layers.size()) == model.n_layers, ErrorCategory::invalid_argument,
            "adapter has " + std::to_string(adapter.layers.size()) + " layers, model has " +
                std::to_string(model.n_layers));
    LoraAdapter::for_each_pair(adapter, [&model, &adapter](int l, Projection p, const LoraPair& pair) {
        const auto shape = projection_shape(model, p);
        const int r = adapter.config.rank;
        require(pair.a.rows() == r && pair.a.cols() == shape.d_in && pair.b.rows() == shape.d_out &&
                    pair.b.cols() == r,
                ErrorCategory::invalid_argument,
                "adapter matrices for layer " + std::to_string(l) + " " + std::string(projection_name(p)) +
                    " do not match the model");
    });
}

void save_adapter(const LoraAdapter& adapter, const std::filesystem::path& path) {
    TensorFile file;
    file.magic = adapter_magic;
    std::ostringstream alpha;
    alpha.precision(17);
    alpha << adapter.config.alpha;
    file.metadata = {
        {"slice_id", std::to_string(adapter.meta.slice_id)},
        {"seed", std::to_string(adapter.meta.seed)},
        {"steps", std::to_string(adapter.meta.steps)},
        {"created", adapter.meta.created},
        {"rank", std::to_string(adapter.config.rank)},
        {"alpha", alpha.str()},
        {"targets", join_targets(adapter.config.targets)},
        {"n_layers", std::to_string(adapter.model.n_layers)},
        {"n_heads", std::to_string(adapter.model.n_heads)},
        {"d_model", std::to_string(adapter.model.d_model)},
        {"d_ff", std::to_string(adapter.model.d_ff)},
        {"vocab_size", std::to_string(adapter.model.vocab_size)},
        {"max_seq_len", std::to_string(adapter.model.max_seq_len)},
    };
    LoraAdapter::for_each_pair(adapter, [&file](int l, Projection p, const LoraPair& pair) {
        file.tensors.emplace_back(pair_name(l, p, 'a'), pair.a);
        file.tensors.emplace_back(pair_name(l, p, 'b'), pair.b);
    });
    write_tensor_file_atomic(path, file);
}

LoraAdapter load_adapter(const std::filesystem::path& path) {
    const TensorFile file = read_tensor_file(path, adapter_magic);
    LoraAdapter adapter;
    try {
        adapter.meta.slice_id = std::stoi(file.meta("slice_id"));
        adapter.meta.seed = std::stoull(file.meta("seed"));
        adapter.meta.steps = std::stoll(file.meta("steps"));
        adapter.meta.created = file.meta("created");
        adapter.config.rank = std::stoi(file.meta("rank"));
        adapter.config.alpha = std::stod(file.meta("alpha"));
        adapter.config.targets = split_targets(file.meta("targets"));
        adapter.model.n_layers = std::stoi(file.meta("n_layers"));
        adapter.model.n_heads = std::stoi(file.meta("n_heads"));
        adapter.model.d_model = std::stoi(file.meta("d_model"));
        adapter.model.d_ff = std::stoi(file.meta("d_ff"));
        adapter.model.vocab_size = std::stoi(file.meta("vocab_size"));
        adapter.model.max_seq_len = std::stoi(file.meta("max_seq_len"));
    } catch (const std::logic_error&) {
        fail(ErrorCategory::corrupt_file, "bad adapter metadata in " + path.string());
    }
    require(adapter.config.rank > 0 && adapter.model.n_layers > 0, ErrorCategory::corrupt_file,
            "bad adapter metadata in " + path.string());
    adapter.layers.resize(static_cast<std::size_t>(adapter.model.n_layers));
    for (int l = 0; l < adapter.model.n_layers; ++l) {
        for (const auto p : adapter.config.targets) {
            adapter.layers[static_cast<std::size_t>(l)][static_cast<std::size_t>(p)] =
                LoraPair{file.tensor(pair_name(l, p, 'a')), file.tensor(pair_name(l, p, 'b'))};
        }
    }
    require(file.tensors.size() == 2 * adapter.config.targets.size() * adapter.layers.size(),
            ErrorCategory::corrupt_file, "unexpected tensors in " + path.string());
    check_compatible(adapter.model, adapter);
    return adapter;
}

ModelSession::ModelSession(std::shared_ptr<const ModelWeights> weights) : weights_(std::move(weights)) {
    require(weights_ != nullptr, ErrorCategory::invalid_argument, "session needs model weights");
}

void ModelSession::swap(std::shared_ptr<const LoraAdapter> adapter) {
    if (adapter != nullptr) {
        check_compatible(weights_->config, *adapter);
    }
    adapter_ = std::move(adapter);
}

Matrix ModelSession::forward(std::span<const TokenId> tokens) const {
    return tempad::forward(*weights_, adapter_.get(), tokens);
}

std::vector<double> ModelSession::next_token_distribution(std::span<const TokenId> context,
                                                          double temperature) const {
    return tempad::next_token_distribution(*weights_, adapter_.get(), context, temperature);
}

}  // namespace tempad
