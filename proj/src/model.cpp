// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include "tempad/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tempad/adapters.hpp"
#include "tempad/error.hpp"
#include "tempad/rng.hpp"
#include "tempad/tensor_file.hpp"
#include "transformer.hpp"

namespace tempad::inline TEMPAD_PRECISION_NS {

namespace {

constexpr std::array<char, 4> model_magic{'T', 'A', 'D', 'M'};
constexpr real norm_eps = 1e-5F;
constexpr real gelu_c = real(0.7978845608028654);  // sqrt(2 / pi)

void layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, detail::NormCache& out) {
    const int n = x.rows();
    const int d = x.cols();
    out.out.resize(n, d);
    out.mean.resize(static_cast<std::size_t>(n));
    out.rstd.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const real* xi = x.row(i);
        real mean = real(0.0);
        for (int j = 0; j < d; ++j) {
            mean += xi[j];
        }
        mean /= static_cast<real>(d);
        real var = real(0.0);
        for (int j = 0; j < d; ++j) {
            const real c = xi[j] - mean;
            var += c * c;
        }
        var /= static_cast<real>(d);
        const real rstd = real(1.0) / std::sqrt(var + norm_eps);
        real* yi = out.out.row(i);
        for (int j = 0; j < d; ++j) {
            yi[j] = (xi[j] - mean) * rstd * gain.data()[j] + bias.data()[j];
        }
        out.mean[static_cast<std::size_t>(i)] = mean;
        out.rstd[static_cast<std::size_t>(i)] = rstd;
    }
}

// dx += LN'(x)^T dy
void layer_norm_backward(const Matrix& x, const detail::NormCache& cache, const Matrix& gain, const Matrix& dy,
                         Matrix& dx) {
    const int d = x.cols();
    const real inv_d = real(1.0) / static_cast<real>(d);
    std::vector<real> dxhat(static_cast<std::size_t>(d));
    for (int i = 0; i < x.rows(); ++i) {
        const real mean = cache.mean[static_cast<std::size_t>(i)];
        const real rstd = cache.rstd[static_cast<std::size_t>(i)];
        const real* xi = x.row(i);
        const real* dyi = dy.row(i);
        real sum_dxhat = real(0.0);
        real sum_dxhat_xhat = real(0.0);
        for (int j = 0; j < d; ++j) {
            dxhat[static_cast<std::size_t>(j)] = dyi[j] * gain.data()[j];
            const real xhat = (xi[j] - mean) * rstd;
            sum_dxhat += dxhat[static_cast<std::size_t>(j)];
            sum_dxhat_xhat += dxhat[static_cast<std::size_t>(j)] * xhat;
        }
        real* dxi = dx.row(i);
        for (int j = 0; j < d; ++j) {
            const real xhat = (xi[j] - mean) * rstd;
            dxi[j] += rstd * (dxhat[static_cast<std::size_t>(j)] - inv_d * sum_dxhat - xhat * inv_d * sum_dxhat_xhat);
        }
    }
}

// glibc's tanhf is several times slower than expf, and GELU dominates short forwards.
real fast_tanh(real u) {
    if (u > real(20.0)) {
        return real(1.0);
    }
    if (u < real(-20.0)) {
        return real(-1.0);
    }
    return real(1.0) - real(2.0) / (std::exp(real(2.0) * u) + real(1.0));
}

real gelu(real x) {
    const real u = gelu_c * (x + real(0.044715) * x * x * x);
    return real(0.5) * x * (real(1.0) + fast_tanh(u));
}

real gelu_grad(real x) {
    const real u = gelu_c * (x + real(0.044715) * x * x * x);
    const real t = fast_tanh(u);
    return real(0.5) * (real(1.0) + t) + real(0.5) * x * (real(1.0) - t * t) * gelu_c * (real(1.0) + real(3.0) * real(0.044715) * x * x);
}

// y = x W (+ scale * (x A^T) B^T when the projection is adapted)
void project(const Matrix& x, const Matrix& w, const LoraPair* lora, real scale, Matrix& y, Matrix* u_cache) {
    kernels::matmul(x, w, y);
    if (lora == nullptr) {
        return;
    }
    Matrix local;
    Matrix& u = u_cache != nullptr ? *u_cache : local;
    kernels::matmul_bt(x, lora->a, u);
    kernels::matmul_bt_acc(u, lora->b, scale, y);
}

// dx += dy W^T (+ LoRA path); gradients for A and B accumulate into `grad`.
void project_backward(const Matrix& x, const Matrix& w, const LoraPair* lora, real scale, const Matrix& u,
                      const Matrix& dy, Matrix* dx, LoraPair* grad) {
    if (dx != nullptr) {
        kernels::matmul_bt_acc(dy, w, real(1.0), *dx);
    }
    if (lora == nullptr) {
        return;
    }
    Matrix du;
    kernels::matmul(dy, lora->b, du);
    for (real& v : du.values()) {
        v *= scale;
    }
    kernels::matmul_at_acc(dy, u, scale, grad->b);
    kernels::matmul_at_acc(du, x, real(1.0), grad->a);
    if (dx != nullptr) {
        kernels::matmul_acc(du, lora->a, *dx);
    }
}

const LoraPair* adapted(const LoraAdapter* adapter, int layer, Projection p) {
    return adapter == nullptr ? nullptr : adapter->find(layer, p);
}

// Causal multi-head attention. Row t reads keys/values 0..t only.
void attention(const ModelConfig& cfg, const Matrix& q, const Matrix& k, const Matrix& v, Matrix& out,
               std::vector<Matrix>* probs) {
    const int n = q.rows();
    const int hd = cfg.head_dim();
    const real scale = real(1.0) / std::sqrt(static_cast<real>(hd));
    out.resize(n, cfg.d_model);
    if (probs != nullptr) {
        probs->assign(static_cast<std::size_t>(cfg.n_heads), Matrix(n, n));
    }
    std::vector<real> row(static_cast<std::size_t>(n));
    for (int h = 0; h < cfg.n_heads; ++h) {
        const int off = h * hd;
        for (int t = 0; t < n; ++t) {
            const real* qt = q.row(t) + off;
            real mx = -std::numeric_limits<real>::infinity();
            for (int j = 0; j <= t; ++j) {
                row[static_cast<std::size_t>(j)] = kernels::dot(qt, k.row(j) + off, hd) * scale;
                mx = std::max(mx, row[static_cast<std::size_t>(j)]);
            }
            real sum = real(0.0);
            for (int j = 0; j <= t; ++j) {
                row[static_cast<std::size_t>(j)] = std::exp(row[static_cast<std::size_t>(j)] - mx);
                sum += row[static_cast<std::size_t>(j)];
            }
            const real inv = real(1.0) / sum;
            real* ot = out.row(t) + off;
            for (int j = 0; j <= t; ++j) {
                const real p = row[static_cast<std::size_t>(j)] * inv;
                kernels::axpy(p, v.row(j) + off, ot, hd);
                if (probs != nullptr) {
                    (*probs)[static_cast<std::size_t>(h)](t, j) = p;
                }
            }
        }
    }
}

void attention_backward(const ModelConfig& cfg, const detail::LayerCache& c, const Matrix& d_attn, Matrix& dq,
                        Matrix& dk, Matrix& dv) {
    const int n = c.q.rows();
    const int hd = cfg.head_dim();
    const real scale = real(1.0) / std::sqrt(static_cast<real>(hd));
    dq.resize(n, cfg.d_model);
    dk.resize(n, cfg.d_model);
    dv.resize(n, cfg.d_model);
    std::vector<real> dp(static_cast<std::size_t>(n));
    for (int h = 0; h < cfg.n_heads; ++h) {
        const int off = h * hd;
        const Matrix& p = c.probs[static_cast<std::size_t>(h)];
        for (int t = 0; t < n; ++t) {
            const real* dat = d_attn.row(t) + off;
            const real* pt = p.row(t);
            real weighted = real(0.0);
            for (int j = 0; j <= t; ++j) {
                dp[static_cast<std::size_t>(j)] = kernels::dot(dat, c.v.row(j) + off, hd);
                weighted += pt[j] * dp[static_cast<std::size_t>(j)];
                kernels::axpy(pt[j], dat, dv.row(j) + off, hd);
            }
            real* dqt = dq.row(t) + off;
            const real* qt = c.q.row(t) + off;
            for (int j = 0; j <= t; ++j) {
                const real ds = pt[j] * (dp[static_cast<std::size_t>(j)] - weighted) * scale;
                if (ds != real(0.0)) {
                    kernels::axpy(ds, c.k.row(j) + off, dqt, hd);
                    kernels::axpy(ds, qt, dk.row(j) + off, hd);
                }
            }
        }
    }
}

Matrix normal_matrix(Rng& rng, int rows, int cols, double std) {
    Matrix m(rows, cols);
    for (real& v : m.values()) {
        v = static_cast<real>(rng.normal() * std);
    }
    return m;
}

}  // namespace

void ModelConfig::validate() const {
    require(n_layers > 0 && n_heads > 0 && d_model > 0 && d_ff > 0 && vocab_size > 0 && max_seq_len > 0,
            ErrorCategory::invalid_argument, "model config fields must be positive");
    require(d_model % n_heads == 0, ErrorCategory::invalid_argument,
            "d_model (" + std::to_string(d_model) + ") must be divisible by n_heads (" + std::to_string(n_heads) +
                ")");
    require(vocab_size >= vocab::size, ErrorCategory::invalid_argument,
            "vocab_size must cover the byte vocabulary (" + std::to_string(vocab::size) + ")");
}

ModelConfig ModelConfig::desk() { return ModelConfig{}; }

ModelConfig ModelConfig::tiny() {
    ModelConfig c;
    c.n_layers = 1;
    c.n_heads = 2;
    c.d_model = 16;
    c.d_ff = 32;
    c.max_seq_len = 64;
    return c;
}

std::string_view projection_name(Projection p) noexcept {
    switch (p) {
        case Projection::query: return "query";
        case Projection::key: return "key";
        case Projection::value: return "value";
        case Projection::output: return "output";
        case Projection::ff_up: return "ff_up";
        case Projection::ff_down: return "ff_down";
    }
    return "?";
}

Projection parse_projection(std::string_view name) {
    for (const auto p : all_projections) {
        if (projection_name(p) == name) {
            return p;
        }
    }
    if (name == "q") return Projection::query;
    if (name == "k") return Projection::key;
    if (name == "v") return Projection::value;
    if (name == "o") return Projection::output;
    fail(ErrorCategory::invalid_argument, "unknown projection '" + std::string(name) + "'");
}

ProjectionShape projection_shape(const ModelConfig& config, Projection p) noexcept {
    switch (p) {
        case Projection::ff_up: return {config.d_model, config.d_ff};
        case Projection::ff_down: return {config.d_ff, config.d_model};
        default: return {config.d_model, config.d_model};
    }
}

const Matrix& LayerWeights::projection(Projection p) const noexcept {
    switch (p) {
        case Projection::query: return query;
        case Projection::key: return key;
        case Projection::value: return value;
        case Projection::output: return output;
        case Projection::ff_up: return ff_up;
        case Projection::ff_down: return ff_down;
    }
    return query;
}

Matrix& LayerWeights::projection(Projection p) noexcept {
    return const_cast<Matrix&>(static_cast<const LayerWeights&>(*this).projection(p));
}

std::uint64_t ModelWeights::checksum() const {
    std::uint64_t h = fnv1a(&config.n_layers, sizeof config.n_layers);
    for_each_tensor(*this, [&h](const std::string&, const Matrix& m) {
        h = fnv1a(m.data(), m.size() * sizeof(real), h);
    });
    return h;
}

ModelWeights init_model(const ModelConfig& config) {
    config.validate();
    Rng rng(config.init_seed);
    constexpr double std = 0.02;
    const double residual_std = std / std::sqrt(2.0 * config.n_layers);
    const int d = config.d_model;

    ModelWeights w;
    w.config = config;
    w.token_embedding = normal_matrix(rng, config.vocab_size, d, std);
    w.position_embedding = normal_matrix(rng, config.max_seq_len, d, std);
    for (int l = 0; l < config.n_layers; ++l) {
        LayerWeights layer;
        layer.ln1_gain = Matrix(1, d, real(1.0));
        layer.ln1_bias = Matrix(1, d);
        layer.query = normal_matrix(rng, d, d, std);
        layer.key = normal_matrix(rng, d, d, std);
        layer.value = normal_matrix(rng, d, d, std);
        layer.output = normal_matrix(rng, d, d, residual_std);
        layer.ln2_gain = Matrix(1, d, real(1.0));
        layer.ln2_bias = Matrix(1, d);
        layer.ff_up = normal_matrix(rng, d, config.d_ff, std);
        layer.ff_down = normal_matrix(rng, config.d_ff, d, residual_std);
        w.layers.push_back(std::move(layer));
    }
    w.final_gain = Matrix(1, d, real(1.0));
    w.final_bias = Matrix(1, d);
    w.head = normal_matrix(rng, d, config.vocab_size, std);
    return w;
}

void save_model(const ModelWeights& weights, const std::filesystem::path& path) {
    TensorFile file;
    file.magic = model_magic;
    const auto& c = weights.config;
    file.metadata = {{"n_layers", std::to_string(c.n_layers)},   {"n_heads", std::to_string(c.n_heads)},
                     {"d_model", std::to_string(c.d_model)},     {"d_ff", std::to_string(c.d_ff)},
                     {"vocab_size", std::to_string(c.vocab_size)}, {"max_seq_len", std::to_string(c.max_seq_len)},
                     {"init_seed", std::to_string(c.init_seed)}};
    ModelWeights::for_each_tensor(weights, [&file](const std::string& name, const Matrix& m) {
        file.tensors.emplace_back(name, m);
    });
    write_tensor_file_atomic(path, file);
}

ModelWeights load_model(const std::filesystem::path& path) {
    const TensorFile file = read_tensor_file(path, model_magic);
    auto int_field = [&file](const std::string& key) {
        try {
            return std::stoi(file.meta(key));
        } catch (const std::logic_error&) {
            fail(ErrorCategory::corrupt_file, "bad model config field '" + key + "'");
        }
    };
    ModelConfig c;
    c.n_layers = int_field("n_layers");
    c.n_heads = int_field("n_heads");
    c.d_model = int_field("d_model");
    c.d_ff = int_field("d_ff");
    c.vocab_size = int_field("vocab_size");
    c.max_seq_len = int_field("max_seq_len");
    c.init_seed = std::stoull(file.meta("init_seed"));
    c.validate();

    // Shapes come from a freshly built skeleton so a mismatched file is caught.
    ModelWeights w;
    w.config = c;
    w.layers.resize(static_cast<std::size_t>(c.n_layers));
    const ModelWeights shape_ref = [&c] {
        ModelConfig z = c;
        z.init_seed = 0;
        return init_model(z);
    }();
    std::vector<std::pair<std::string, const Matrix*>> expected;
    ModelWeights::for_each_tensor(shape_ref, [&expected](const std::string& name, const Matrix& m) {
        expected.emplace_back(name, &m);
    });
    std::size_t i = 0;
    ModelWeights::for_each_tensor(w, [&](const std::string& name, Matrix& m) {
        const Matrix& stored = file.tensor(name);
        require(stored.same_shape(*expected[i++].second), ErrorCategory::corrupt_file,
                "tensor '" + name + "' has the wrong shape in " + path.string());
        m = stored;
    });
    return w;
}

std::vector<double> softmax_with_temperature(std::span<const real> logits, double temperature) {
    require(temperature > 0.0 && std::isfinite(temperature), ErrorCategory::invalid_argument,
            "temperature must be positive");
    double mx = -std::numeric_limits<double>::infinity();
    for (const real l : logits) {
        mx = std::max(mx, static_cast<double>(l) / temperature);
    }
    std::vector<double> p(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(static_cast<double>(logits[i]) / temperature - mx);
        sum += p[i];
    }
    for (double& v : p) {
        v /= sum;
    }
    return p;
}

double log_softmax_at(std::span<const real> logits, double temperature, int index) {
    require(temperature > 0.0 && std::isfinite(temperature), ErrorCategory::invalid_argument,
            "temperature must be positive");
    require(index >= 0 && static_cast<std::size_t>(index) < logits.size(), ErrorCategory::invalid_argument,
            "token index out of range");
    double mx = -std::numeric_limits<double>::infinity();
    for (const real l : logits) {
        mx = std::max(mx, static_cast<double>(l) / temperature);
    }
    double sum = 0.0;
    for (const real l : logits) {
        sum += std::exp(static_cast<double>(l) / temperature - mx);
    }
    return static_cast<double>(logits[static_cast<std::size_t>(index)]) / temperature - mx - std::log(sum);
}

Matrix forward(const ModelWeights& weights, const LoraAdapter* adapter, std::span<const TokenId> tokens) {
    return detail::run_forward(weights, adapter, tokens, nullptr);
}

std::vector<double> next_token_distribution(const ModelWeights& weights, const LoraAdapter* adapter,
                                            std::span<const TokenId> context, double temperature) {
    require(temperature > 0.0, ErrorCategory::invalid_argument, "temperature must be positive");
    require(!context.empty(), ErrorCategory::invalid_argument, "context must hold at least one token");
    const Matrix logits = forward(weights, adapter, context);
    const int last = logits.rows() - 1;
    return softmax_with_temperature(std::span<const real>(logits.row(last), static_cast<std::size_t>(logits.cols())),
                                    temperature);
}

namespace detail {

Matrix run_forward(const ModelWeights& w, const LoraAdapter* adapter, std::span<const TokenId> tokens,
                   ForwardCache* cache) {
    const ModelConfig& cfg = w.config;
    const int n = static_cast<int>(tokens.size());
    require(n > 0, ErrorCategory::invalid_argument, "empty token sequence");
    require(n <= cfg.max_seq_len, ErrorCategory::invalid_argument,
            "sequence length " + std::to_string(n) + " exceeds max_seq_len " + std::to_string(cfg.max_seq_len));
    const real scale = adapter != nullptr ? adapter->config.scale() : real(0.0);

    Matrix x(n, cfg.d_model);
    for (int t = 0; t < n; ++t) {
        const TokenId id = tokens[static_cast<std::size_t>(t)];
        require(id >= 0 && id < cfg.vocab_size, ErrorCategory::invalid_argument,
                "token id " + std::to_string(id) + " out of range");
        const real* te = w.token_embedding.row(id);
        const real* pe = w.position_embedding.row(t);
        real* xt = x.row(t);
        for (int j = 0; j < cfg.d_model; ++j) {
            xt[j] = te[j] + pe[j];
        }
    }
    if (cache != nullptr) {
        cache->layers.resize(static_cast<std::size_t>(cfg.n_layers));
    }

    NormCache ln_scratch;
    Matrix q, k, v, attn, o, ff_pre, ff_act, ff_out;
    for (int l = 0; l < cfg.n_layers; ++l) {
        const LayerWeights& lw = w.layers[static_cast<std::size_t>(l)];
        LayerCache* lc = cache != nullptr ? &cache->layers[static_cast<std::size_t>(l)] : nullptr;
        auto u_slot = [lc](Projection p) { return lc != nullptr ? &lc->lora_u[static_cast<std::size_t>(p)] : nullptr; };

        if (lc != nullptr) {
            lc->x_in = x;
        }
        NormCache& ln1 = lc != nullptr ? lc->ln1 : ln_scratch;
        layer_norm(x, lw.ln1_gain, lw.ln1_bias, ln1);
        Matrix& qm = lc != nullptr ? lc->q : q;
        Matrix& km = lc != nullptr ? lc->k : k;
        Matrix& vm = lc != nullptr ? lc->v : v;
        project(ln1.out, lw.query, adapted(adapter, l, Projection::query), scale, qm, u_slot(Projection::query));
        project(ln1.out, lw.key, adapted(adapter, l, Projection::key), scale, km, u_slot(Projection::key));
        project(ln1.out, lw.value, adapted(adapter, l, Projection::value), scale, vm, u_slot(Projection::value));
        Matrix& am = lc != nullptr ? lc->attn : attn;
        attention(cfg, qm, km, vm, am, lc != nullptr ? &lc->probs : nullptr);
        project(am, lw.output, adapted(adapter, l, Projection::output), scale, o, u_slot(Projection::output));
        for (std::size_t i = 0; i < x.size(); ++i) {
            x.data()[i] += o.data()[i];
        }

        if (lc != nullptr) {
            lc->x_mid = x;
        }
        NormCache& ln2 = lc != nullptr ? lc->ln2 : ln_scratch;
        layer_norm(x, lw.ln2_gain, lw.ln2_bias, ln2);
        Matrix& pre = lc != nullptr ? lc->ff_pre : ff_pre;
        Matrix& act = lc != nullptr ? lc->ff_act : ff_act;
        project(ln2.out, lw.ff_up, adapted(adapter, l, Projection::ff_up), scale, pre, u_slot(Projection::ff_up));
        act.resize(pre.rows(), pre.cols());
        for (std::size_t i = 0; i < pre.size(); ++i) {
            act.data()[i] = gelu(pre.data()[i]);
        }
        project(act, lw.ff_down, adapted(adapter, l, Projection::ff_down), scale, ff_out,
                u_slot(Projection::ff_down));
        for (std::size_t i = 0; i < x.size(); ++i) {
            x.data()[i] += ff_out.data()[i];
        }
    }

    NormCache& lnf = cache != nullptr ? cache->ln_final : ln_scratch;
    layer_norm(x, w.final_gain, w.final_bias, lnf);
    Matrix logits;
    kernels::matmul(lnf.out, w.head, logits);
    if (cache != nullptr) {
        cache->x_final = std::move(x);
    }
    return logits;
}

void run_backward(const ModelWeights& w, const LoraAdapter& adapter, const ForwardCache& cache,
                  const Matrix& dlogits, LoraAdapter& grads) {
    const ModelConfig& cfg = w.config;
    const int n = dlogits.rows();
    const real scale = adapter.config.scale();

    Matrix d_lnf(n, cfg.d_model);
    kernels::matmul_bt_acc(dlogits, w.head, real(1.0), d_lnf);
    Matrix dx(n, cfg.d_model);
    layer_norm_backward(cache.x_final, cache.ln_final, w.final_gain, d_lnf, dx);

    for (int l = cfg.n_layers - 1; l >= 0; --l) {
        const LayerWeights& lw = w.layers[static_cast<std::size_t>(l)];
        const LayerCache& lc = cache.layers[static_cast<std::size_t>(l)];
        auto lora = [&](Projection p) { return adapter.find(l, p); };
        auto grad = [&](Projection p) { return grads.find(l, p); };
        auto u = [&](Projection p) -> const Matrix& { return lc.lora_u[static_cast<std::size_t>(p)]; };

        // Feed-forward block. dx is the gradient at the block output.
        Matrix d_act(n, cfg.d_ff);
        project_backward(lc.ff_act, lw.ff_down, lora(Projection::ff_down), scale, u(Projection::ff_down), dx,
                         &d_act, grad(Projection::ff_down));
        for (std::size_t i = 0; i < d_act.size(); ++i) {
            d_act.data()[i] *= gelu_grad(lc.ff_pre.data()[i]);
        }
        Matrix d_ln2(n, cfg.d_model);
        project_backward(lc.ln2.out, lw.ff_up, lora(Projection::ff_up), scale, u(Projection::ff_up), d_act, &d_ln2,
                         grad(Projection::ff_up));
        layer_norm_backward(lc.x_mid, lc.ln2, lw.ln2_gain, d_ln2, dx);

        // Attention block.
        Matrix d_attn(n, cfg.d_model);
        project_backward(lc.attn, lw.output, lora(Projection::output), scale, u(Projection::output), dx, &d_attn,
                         grad(Projection::output));
        // Below layer 0 nothing is trainable, so the input gradient is skipped there.
        const bool need_input_grad = l > 0;
        if (!need_input_grad && lora(Projection::query) == nullptr && lora(Projection::key) == nullptr &&
            lora(Projection::value) == nullptr) {
            break;
        }
        Matrix dq, dk, dv;
        attention_backward(cfg, lc, d_attn, dq, dk, dv);
        Matrix d_ln1(n, cfg.d_model);
        Matrix* d_ln1_ptr = need_input_grad ? &d_ln1 : nullptr;
        project_backward(lc.ln1.out, lw.query, lora(Projection::query), scale, u(Projection::query), dq, d_ln1_ptr,
                         grad(Projection::query));
        project_backward(lc.ln1.out, lw.key, lora(Projection::key), scale, u(Projection::key), dk, d_ln1_ptr,
                         grad(Projection::key));
        project_backward(lc.ln1.out, lw.value, lora(Projection::value), scale, u(Projection::value), dv, d_ln1_ptr,
                         grad(Projection::value));
        if (need_input_grad) {
            layer_norm_backward(lc.x_in, lc.ln1, lw.ln1_gain, d_ln1, dx);
        }
    }
}

}  // namespace detail

}  // namespace tempad
