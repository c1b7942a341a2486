// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include <cmath>
#include <fstream>

#include "doctest.h"
#include "support/test_util.hpp"
#include "tempad/model.hpp"
#include "tempad/rng.hpp"

using namespace tempad;

namespace {

ModelConfig small_config(std::uint64_t seed = 1) {
    ModelConfig c = ModelConfig::tiny();
    c.max_seq_len = 32;
    c.init_seed = seed;
    return c;
}

std::vector<TokenId> random_tokens(Rng& rng, std::size_t n) {
    std::vector<TokenId> t(n);
    for (auto& id : t) {
        id = static_cast<TokenId>(rng.uniform_index(vocab::size));
    }
    return t;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("initialisation is seeded") {
    const auto a = init_model(small_config(1));
    const auto b = init_model(small_config(1));
    const auto c = init_model(small_config(2));
    CHECK(a.checksum() == b.checksum());
    CHECK(a.token_embedding == b.token_embedding);
    CHECK(a.checksum() != c.checksum());
}

TEST_CASE("config arithmetic and validation") {
    ModelConfig c;
    c.d_model = 128;
    c.n_heads = 4;
    CHECK(c.head_dim() == 32);
    c.n_heads = 3;
    CHECK(testing::error_category([&] { c.validate(); }) == ErrorCategory::invalid_argument);
    CHECK(ModelConfig::desk().n_layers == 4);
    CHECK(ModelConfig::tiny().d_model == 16);
}

TEST_CASE("forward shape and determinism") {
    const auto w = init_model(small_config());
    Rng rng(1);
    const auto tokens = random_tokens(rng, 12);
    const Matrix a = forward(w, nullptr, tokens);
    const Matrix b = forward(w, nullptr, tokens);
    CHECK(a.rows() == 12);
    CHECK(a.cols() == vocab::size);
    CHECK(a == b);
}

TEST_CASE("later tokens never change earlier logits") {
    const auto w = init_model(small_config());
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        auto tokens = random_tokens(rng, 16);
        const Matrix before = forward(w, nullptr, tokens);
        const auto t = static_cast<int>(rng.uniform_index(tokens.size()));
        tokens[static_cast<std::size_t>(t)] = (tokens[static_cast<std::size_t>(t)] + 1) % vocab::size;
        const Matrix after = forward(w, nullptr, tokens);
        bool prefix_same = true;
        for (int r = 0; r < t; ++r) {
            for (int c = 0; c < after.cols(); ++c) {
                prefix_same = prefix_same && before(r, c) == after(r, c);
            }
        }
        CHECK(prefix_same);
    }
}

TEST_CASE("sequence longer than max_seq_len is rejected") {
    const auto w = init_model(small_config());
    const std::vector<TokenId> tokens(33, 'a');
    CHECK(testing::error_category([&] { forward(w, nullptr, tokens); }).has_value());
}

TEST_CASE("softmax with temperature") {
    const std::vector<real> logits{2, 1, 0};
    const auto p = softmax_with_temperature(logits, 1.0);
    // Direct evaluation: e^x / sum e^x.
    const double z = std::exp(2.0) + std::exp(1.0) + 1.0;
    CHECK(p[0] == doctest::Approx(std::exp(2.0) / z).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(std::exp(1.0) / z).epsilon(1e-12));
    CHECK(p[2] == doctest::Approx(1.0 / z).epsilon(1e-12));
    CHECK(std::abs(p[0] - 0.6652) < 5e-5);
    CHECK(std::abs(p[1] - 0.2447) < 5e-5);
    CHECK(std::abs(p[2] - 0.0900) < 5e-5);
    CHECK(log_softmax_at(logits, 1.0, 0) == doctest::Approx(std::log(p[0])));

    const std::vector<real> flat(vocab::size, real(0.7));
    for (const double t : {0.25, 1.0, 4.0}) {
        for (const double v : softmax_with_temperature(flat, t)) {
            CHECK(v == doctest::Approx(1.0 / vocab::size).epsilon(1e-12));
        }
    }
    const std::vector<real> spread{5, -3, 1, 0};
    for (const double v : softmax_with_temperature(spread, 1e8)) {
        CHECK(std::abs(v - 0.25) < 1e-6);
    }
    CHECK(testing::error_category([&] { softmax_with_temperature(spread, 0.0); }) == ErrorCategory::invalid_argument);
}

TEST_CASE("next-token distribution is a distribution") {
    const auto w = init_model(small_config());
    const std::vector<TokenId> ctx{vocab::bos, 'h', 'i'};
    const auto p = next_token_distribution(w, nullptr, ctx, 1.0);
    REQUIRE(p.size() == static_cast<std::size_t>(vocab::size));
    double sum = 0.0;
    for (const double v : p) {
        CHECK(v >= 0.0);
        sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("save and load roundtrip; corrupt files fail") {
    testing::TempDir dir("model");
    const auto w = init_model(small_config(5));
    save_model(w, dir / "m.tmod");
    const auto back = load_model(dir / "m.tmod");
    CHECK(back.config == w.config);
    CHECK(back.checksum() == w.checksum());

    const auto size = std::filesystem::file_size(dir / "m.tmod");
    std::filesystem::resize_file(dir / "m.tmod", size / 2);
    CHECK(testing::error_category([&] { load_model(dir / "m.tmod"); }) == ErrorCategory::corrupt_file);
    std::ofstream(dir / "junk.tmod") << "not a model";
    CHECK(testing::error_category([&] { load_model(dir / "junk.tmod"); }) == ErrorCategory::corrupt_file);
}

TEST_CASE("projection names") {
    for (const auto p : all_projections) {
        CHECK(parse_projection(projection_name(p)) == p);
    }
    CHECK(testing::error_category([] { parse_projection("gate"); }).has_value());
}

}  // TEST_SUITE
