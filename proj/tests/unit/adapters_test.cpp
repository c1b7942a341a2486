// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include <Eigen/Dense>
#include <fstream>
#include <memory>

#include "doctest.h"
#include "support/test_util.hpp"
#include "tempad/adapters.hpp"
#include "tempad/rng.hpp"

using namespace tempad;

namespace {

ModelConfig model_config() {
    ModelConfig c = ModelConfig::tiny();
    c.max_seq_len = 32;
    return c;
}

void randomize_b(LoraAdapter& a, std::uint64_t seed, double scale = 0.05) {
    Rng rng(seed);
    LoraAdapter::for_each_pair(a, [&](int, Projection, LoraPair& p) {
        for (real& v : p.b.values()) {
            v = static_cast<real>(rng.normal() * scale);
        }
    });
}

int numeric_rank(const Matrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) {
            e(r, c) = m(r, c);
        }
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(e);
    const auto& s = svd.singularValues();
    const double tol = s(0) * 1e-5;
    int rank = 0;
    for (int i = 0; i < s.size(); ++i) {
        rank += s(i) > tol ? 1 : 0;
    }
    return rank;
}

}  // namespace

TEST_SUITE("adapters") {

TEST_CASE("init shapes and zero B") {
    ModelConfig mc;
    mc.d_model = 128;
    mc.n_heads = 4;
    mc.d_ff = 256;
    mc.n_layers = 1;
    LoraConfig lc;
    lc.rank = 8;
    const auto a = init_adapter(mc, lc, 1);
    const LoraPair* q = a.find(0, Projection::query);
    REQUIRE(q != nullptr);
    CHECK(q->a.rows() == 8);
    CHECK(q->a.cols() == 128);
    CHECK(q->b.rows() == 128);
    CHECK(q->b.cols() == 8);
    CHECK(a.find(0, Projection::key) == nullptr);
    const Matrix d = effective_delta(a, 0, Projection::query);
    CHECK(d.rows() == 128);
    CHECK(d.cols() == 128);
    for (const real v : d.values()) {
        CHECK(v == real(0));
    }
    CHECK(init_adapter(mc, lc, 1) == a);
    CHECK(init_adapter(mc, lc, 2).find(0, Projection::query)->a != q->a);
    CHECK(a.parameter_count() == 2u * (8 * 128 + 128 * 8));
}

TEST_CASE("effective delta of a hand-built pair") {
    ModelConfig mc;
    mc.n_layers = 1;
    mc.d_model = 2;
    mc.n_heads = 1;
    mc.d_ff = 2;
    LoraConfig lc;
    lc.rank = 1;
    lc.alpha = 1.0;
    lc.targets = {Projection::query};
    auto a = init_adapter(mc, lc, 0);
    LoraPair* p = a.find(0, Projection::query);
    p->a(0, 0) = 1;
    p->a(0, 1) = 0;
    p->b(0, 0) = 2;
    p->b(1, 0) = 0;
    const Matrix d = effective_delta(a, 0, Projection::query);
    CHECK(d(0, 0) == 2);
    CHECK(d(0, 1) == 0);
    CHECK(d(1, 0) == 0);
    CHECK(d(1, 1) == 0);
}

TEST_CASE("delta rank is bounded by the adapter rank") {
    ModelConfig mc;
    mc.n_layers = 1;
    mc.d_model = 32;
    mc.n_heads = 2;
    mc.d_ff = 64;
    LoraConfig lc;
    lc.rank = 4;
    lc.targets = {Projection::query, Projection::ff_up};
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto a = init_adapter(mc, lc, seed);
        randomize_b(a, seed + 100, 1.0);
        CHECK(numeric_rank(effective_delta(a, 0, Projection::query)) == 4);
        CHECK(numeric_rank(effective_delta(a, 0, Projection::ff_up)) == 4);
    }
}

TEST_CASE("fresh adapter leaves the model unchanged") {
    const auto w = init_model(model_config());
    const auto a = init_adapter(w.config, LoraConfig{}, 3);
    const std::vector<TokenId> t{vocab::bos, 'a', 'b', 'c'};
    CHECK(forward(w, &a, t) == forward(w, nullptr, t));
}

TEST_CASE("session swap does not touch the base") {
    auto weights = std::make_shared<const ModelWeights>(init_model(model_config()));
    const auto sum = weights->checksum();
    ModelSession s(weights);
    const std::vector<TokenId> t{vocab::bos, 'x', 'y'};
    const Matrix base = s.forward(t);

    auto a = init_adapter(weights->config, LoraConfig{}, 4);
    randomize_b(a, 9);
    s.swap(std::make_shared<const LoraAdapter>(a));
    CHECK(s.active() != nullptr);
    CHECK(s.forward(t) != base);
    s.swap(nullptr);
    CHECK(s.forward(t) == base);
    CHECK(weights->checksum() == sum);
}

TEST_CASE("incompatible adapters are rejected") {
    const auto w = init_model(model_config());
    ModelConfig other = model_config();
    other.d_model = 32;
    other.n_heads = 2;
    const auto a = init_adapter(other, LoraConfig{}, 0);
    CHECK(testing::error_category([&] { check_compatible(w.config, a); }) == ErrorCategory::invalid_argument);
    ModelSession s(std::make_shared<const ModelWeights>(w));
    CHECK(testing::error_category([&] { s.swap(std::make_shared<const LoraAdapter>(a)); }).has_value());
}

TEST_CASE("file roundtrip is bit-exact and truncation is detected") {
    testing::TempDir dir("adapter");
    auto a = init_adapter(model_config(), LoraConfig{}, 5);
    randomize_b(a, 6);
    a.meta.slice_id = 12;
    a.meta.seed = 3;
    a.meta.steps = 350;
    a.meta.created = "2026-01-01T00:00:00Z";
    save_adapter(a, dir / "a.tada");
    const auto back = load_adapter(dir / "a.tada");
    CHECK(back == a);
    CHECK(back.meta.steps == 350);

    std::filesystem::resize_file(dir / "a.tada", std::filesystem::file_size(dir / "a.tada") - 7);
    CHECK(testing::error_category([&] { load_adapter(dir / "a.tada"); }) == ErrorCategory::corrupt_file);
}

}  // TEST_SUITE
