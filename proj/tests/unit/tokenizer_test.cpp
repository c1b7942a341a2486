// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include <algorithm>

#include "doctest.h"
#include "support/test_util.hpp"
#include "tempad/rng.hpp"
#include "tempad/tokenizer.hpp"

using namespace tempad;

namespace {

Document doc(std::string text) { return Document{std::move(text), {}, {}}; }

}  // namespace

TEST_SUITE("tokenizer") {

TEST_CASE("byte roundtrip") {
    CHECK(encode("").empty());
    CHECK(decode(encode("")).empty());
    const auto abc = encode("abc");
    CHECK(abc == std::vector<TokenId>{'a', 'b', 'c'});
    CHECK(decode(abc) == "abc");
    const std::string emoji = "mood \xf0\x9f\x98\x80 caf\xc3\xa9";
    CHECK(decode(encode(emoji)) == emoji);
}

TEST_CASE("random byte strings roundtrip") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        std::string s(rng.uniform_index(64), '\0');
        for (auto& ch : s) {
            ch = static_cast<char>(rng.uniform_index(256));
        }
        const auto ids = encode(s);
        CHECK(ids.size() == s.size());
        CHECK(decode(ids) == s);
    }
}

TEST_CASE("control tokens do not decode") {
    const std::vector<TokenId> ids{'a', vocab::bos};
    CHECK(testing::error_category([&] { decode(ids); }).has_value());
    const std::vector<TokenId> bad{300};
    CHECK(testing::error_category([&] { decode(bad); }).has_value());
}

TEST_CASE("packing exact fit and partial drop") {
    const std::vector<Document> fit{doc(std::string(510, 'x'))};
    const auto p = pack_chunks(fit, 512, 0);
    REQUIRE(p.chunks.size() == 1);
    CHECK(p.chunks[0].tokens.size() == 512);
    CHECK(p.chunks[0].tokens.front() == vocab::bos);
    CHECK(p.chunks[0].tokens.back() == vocab::sep);

    const std::vector<Document> small{doc(std::string(100, 'x'))};
    const auto q = pack_chunks(small, 512, 0);
    CHECK(q.chunks.empty());
    CHECK(q.dropped == 102);
}

TEST_CASE("5000 framed tokens make 9 chunks of 512") {
    // 10 documents of 498 bytes frame to 500 tokens each.
    std::vector<Document> docs(10, doc(std::string(498, 'y')));
    const auto p = pack_chunks(docs, 512, 1);
    CHECK(p.framed_tokens == 5000);
    CHECK(p.chunks.size() == 5000 / 512);
    CHECK(p.dropped == 5000 % 512);
    CHECK(p.dropped == 392);
}

TEST_CASE("pad mode keeps the tail") {
    std::vector<Document> docs{doc(std::string(100, 'z'))};
    const auto p = pack_chunks(docs, 64, 0, TailPolicy::pad);
    REQUIRE(p.chunks.size() == 2);
    CHECK(p.padding == 128 - 102);
    CHECK(p.chunks[1].tokens.back() == vocab::pad);
    CHECK(p.dropped == 0);
}

TEST_CASE("same seed same chunks; other seed same token multiset") {
    std::vector<Document> docs;
    for (int i = 0; i < 40; ++i) {
        docs.push_back(doc("document number " + std::to_string(i) + std::string(static_cast<std::size_t>(i), 'q')));
    }
    const auto a = pack_chunks(docs, 32, 7, TailPolicy::pad);
    const auto b = pack_chunks(docs, 32, 7, TailPolicy::pad);
    const auto c = pack_chunks(docs, 32, 8, TailPolicy::pad);
    auto flat = [](const PackResult& r) {
        std::vector<TokenId> all;
        for (const auto& ch : r.chunks) {
            all.insert(all.end(), ch.tokens.begin(), ch.tokens.end());
        }
        return all;
    };
    CHECK(flat(a) == flat(b));
    auto fa = flat(a);
    auto fc = flat(c);
    CHECK(fa != fc);
    std::sort(fa.begin(), fa.end());
    std::sort(fc.begin(), fc.end());
    CHECK(fa == fc);
}

TEST_CASE("chunk dump roundtrip") {
    testing::TempDir dir("chunks");
    std::vector<Document> docs{doc(std::string(200, 'k'))};
    const auto p = pack_chunks(docs, 50, 0);
    write_chunk_dump(dir / "c.bin", p.chunks, 50);
    const auto back = read_chunk_dump(dir / "c.bin");
    REQUIRE(back.size() == p.chunks.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].tokens == p.chunks[i].tokens);
    }
}

}  // TEST_SUITE
