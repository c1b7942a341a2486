// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include <algorithm>
#include <set>
#include <sstream>

#include "doctest.h"
#include "support/test_util.hpp"
#include "tempad/corpus.hpp"
#include "tempad/rng.hpp"

using namespace tempad;
using namespace std::chrono;

namespace {

Document doc_at(const std::string& ts, std::string text = "x", std::optional<std::string> label = {}) {
    return Document{std::move(text), *parse_timestamp(ts), std::move(label)};
}

Corpus corpus_of(std::vector<Document> docs) {
    std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
    return Corpus{std::move(docs), 0};
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("empty input gives an empty corpus") {
    std::istringstream in("");
    const Corpus c = read_corpus(in);
    CHECK(c.documents.empty());
    CHECK(c.skipped == 0);
}

TEST_CASE("records without a timestamp are skipped and counted") {
    std::istringstream in(R"({"text":"a","timestamp":"2020-01-01T10:00:00Z"}
{"text":"b","timestamp":"2020-01-02T10:00:00Z"}
{"text":"c"}
{"text":"d","timestamp":"2020-01-03T10:00:00Z"}
)");
    const Corpus c = read_corpus(in);
    CHECK(c.documents.size() == 3);
    CHECK(c.skipped == 1);
}

TEST_CASE("mostly malformed input is a schema error") {
    std::istringstream in("garbage\nmore garbage\n{\"text\":\"a\",\"timestamp\":\"2020-01-01\"}\n");
    CHECK(testing::error_category([&] { read_corpus(in); }) == ErrorCategory::schema);
}

TEST_CASE("custom field names and time bounds") {
    std::istringstream in(R"({"body":"a","when":"2020-01-01T00:00:00Z","mood":"happy"}
{"body":"b","when":"2020-02-01T00:00:00Z"}
)");
    CorpusSchema schema;
    schema.text_field = "body";
    schema.timestamp_field = "when";
    schema.label_field = "mood";
    schema.not_after = parse_timestamp("2020-01-15");
    const Corpus c = read_corpus(in, schema);
    REQUIRE(c.documents.size() == 1);
    CHECK(c.documents[0].text == "a");
    CHECK(c.documents[0].label == std::optional<std::string>("happy"));
}

TEST_CASE("loaded corpus matches a line count and date scan of the same file") {
    Rng rng(42);
    const auto base = *parse_timestamp("2020-03-01T00:00:00Z");
    std::ostringstream file;
    std::vector<std::string> stamps;
    for (int i = 0; i < 250; ++i) {
        const auto ts = base + seconds(static_cast<long long>(rng.uniform_index(14 * 86400)));
        stamps.push_back(format_timestamp(ts));
        file << R"({"text":"doc )" << i << R"(","timestamp":")" << stamps.back() << "\"}\n";
    }
    std::istringstream in(file.str());
    const Corpus c = read_corpus(in);
    CHECK(c.documents.size() == stamps.size());
    // ISO-8601 UTC strings order lexicographically.
    const auto [lo, hi] = std::minmax_element(stamps.begin(), stamps.end());
    CHECK(c.documents.front().timestamp == *parse_timestamp(*lo));
    CHECK(c.documents.back().timestamp == *parse_timestamp(*hi));
    CHECK(std::is_sorted(c.documents.begin(), c.documents.end(),
                         [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; }));
}

TEST_CASE("write then read is lossless") {
    const std::vector<Document> docs{doc_at("2020-01-01T01:02:03Z", "hello, \"world\"\n", "happy"),
                                     doc_at("2020-01-02T00:00:00Z", "caf\xc3\xa9")};
    std::ostringstream out;
    write_corpus(out, docs);
    std::istringstream in(out.str());
    CHECK(read_corpus(in).documents == docs);
}

TEST_CASE("slice windows are half-open") {
    const auto c = corpus_of({doc_at("2020-01-10T12:00:00Z", "inside"), doc_at("2020-01-11T00:00:00Z", "on_edge"),
                              doc_at("2020-01-04T00:00:00Z", "first_day"), doc_at("2020-01-03T23:59:59Z", "before")});
    const std::vector<Date> waves{parse_date("2020-01-11")};
    const auto slices = slice_weekly(c, waves, 7);
    REQUIRE(slices.size() == 1);
    std::set<std::string> texts;
    for (const auto& d : slices[0].documents) {
        texts.insert(d.text);
    }
    CHECK(texts == std::set<std::string>{"inside", "first_day"});
}

TEST_CASE("one slice per wave, empty slices kept") {
    std::vector<Date> waves;
    for (int w = 0; w < 35; ++w) {
        waves.push_back(parse_date("2019-11-04") + days(7 * w));
    }
    const auto c = corpus_of({doc_at("2019-11-01T00:00:00Z")});
    const auto slices = slice_weekly(c, waves, 7);
    CHECK(slices.size() == 35);
    CHECK(slices[0].documents.size() == 1);
    CHECK(slices[1].flagged_empty());
    for (std::size_t i = 0; i < slices.size(); ++i) {
        CHECK(slices[i].id == static_cast<int>(i));
        CHECK(slices[i].end_date == waves[i]);
    }
}

TEST_CASE("unordered wave dates are rejected") {
    const auto c = corpus_of({doc_at("2020-01-01T00:00:00Z")});
    const std::vector<Date> waves{parse_date("2020-01-10"), parse_date("2020-01-03")};
    CHECK(testing::error_category([&] { slice_weekly(c, waves, 7); }).has_value());
}

TEST_CASE("capping subsamples every slice to the smallest") {
    std::vector<Document> docs;
    for (int i = 0; i < 10; ++i) {
        docs.push_back(doc_at("2020-01-0" + std::to_string(1 + i % 5) + "T00:00:00Z", "a" + std::to_string(i)));
    }
    for (int i = 0; i < 3; ++i) {
        docs.push_back(doc_at("2020-01-09T00:00:00Z", "b" + std::to_string(i)));
    }
    const std::vector<Date> waves{parse_date("2020-01-07"), parse_date("2020-01-14"), parse_date("2020-01-21")};
    auto slices = slice_weekly(corpus_of(docs), waves, 7);
    cap_to_smallest_slice(slices, 3);
    CHECK(slices[0].documents.size() == 3);
    CHECK(slices[1].documents.size() == 3);
    CHECK(slices[2].documents.empty());
}

TEST_CASE("slice directory roundtrip") {
    testing::TempDir dir("slices");
    const auto c = corpus_of({doc_at("2020-01-02T00:00:00Z", "a"), doc_at("2020-01-09T00:00:00Z", "b"),
                              doc_at("2020-01-10T00:00:00Z", "c")});
    const std::vector<Date> waves{parse_date("2020-01-07"), parse_date("2020-01-14")};
    const auto slices = slice_weekly(c, waves, 7);
    write_slices(dir.path(), slices);
    const auto manifest = read_slice_manifest(dir.path());
    REQUIRE(manifest.size() == 2);
    CHECK(manifest[1].id == 1);
    CHECK(manifest[1].end_date == waves[1]);
    CHECK(manifest[1].n_docs == 2);
    CHECK(load_slice_documents(dir.path(), 1) == slices[1].documents);
}

TEST_CASE("mix counts use nearest-integer rounding") {
    CHECK(mix_counts(0.3, 1163).first == 349);
    CHECK(mix_counts(0.3, 1163).second == 814);
    CHECK(mix_counts(1.0, 1163).first == 1163);
    CHECK(mix_counts(1.0, 1163).second == 0);
    CHECK(mix_counts(0.0, 1163).first == 0);
    // Independent oracle over the whole preset grid.
    for (const double f : preset_mix_fractions()) {
        const auto m = mix_counts(f, 1163);
        CHECK(m.first == static_cast<std::size_t>(std::llround(f * 1163)));
        CHECK(m.first + m.second == 1163);
    }
    CHECK(preset_mix_fractions().size() == 11);
}

TEST_CASE("synthetic mix is deterministic and recounts to the requested shares") {
    const auto pool = generate_synthetic_emotion_corpus(default_emotion_templates(), 300, 9);
    const auto happy = filter_label(pool, "happy");
    const auto sad = filter_label(pool, "sad");
    CHECK(happy.size() == 300);
    CHECK(sad.size() == 300);

    const auto a = synth_mix(happy, sad, MixSpec{0.5, 10, 4});
    const auto b = synth_mix(happy, sad, MixSpec{0.5, 10, 4});
    CHECK(a == b);
    const auto shares = label_shares(a);
    CHECK(shares.at("happy") == 0.5);

    for (const double f : {0.0, 0.1, 0.3, 0.7, 1.0}) {
        const auto mix = synth_mix(happy, sad, MixSpec{f, 200, 1});
        std::size_t n_happy = 0;
        for (const auto& d : mix) {
            n_happy += d.label == std::optional<std::string>("happy") ? 1 : 0;
        }
        CHECK(mix.size() == 200);
        CHECK(std::abs(static_cast<double>(n_happy) / 200.0 - f) <= 0.5 / 200.0 + 1e-12);
    }
}

TEST_CASE("mixing more than a pool holds is an error") {
    const std::vector<Document> one{doc_at("2020-01-01", "h", "happy")};
    const std::vector<Document> two{doc_at("2020-01-01", "s", "sad"), doc_at("2020-01-01", "t", "sad")};
    CHECK(testing::error_category([&] { synth_mix(one, two, MixSpec{1.0, 2, 0}); }).has_value());
}

TEST_CASE("template generation") {
    SUBCASE("single template and fill") {
        EmotionTemplates t;
        t.templates["happy"] = {"I am {w}"};
        t.slots["w"] = {"glad"};
        const auto docs = generate_synthetic_emotion_corpus(t, 1, 0);
        REQUIRE(docs.size() == 1);
        CHECK(docs[0].text == "I am glad");
        CHECK(docs[0].label == std::optional<std::string>("happy"));
    }
    SUBCASE("distinct documents while capacity lasts") {
        EmotionTemplates t;
        for (int i = 0; i < 10; ++i) {
            t.templates["happy"].push_back("h" + std::to_string(i) + " {w}");
            t.templates["sad"].push_back("s" + std::to_string(i) + " {w}");
        }
        for (int i = 0; i < 20; ++i) {
            t.slots["w"].push_back("w" + std::to_string(i));
        }
        CHECK(template_capacity(t, "happy") == 200);
        const auto docs = generate_synthetic_emotion_corpus(t, 100, 5);
        for (const char* label : {"happy", "sad"}) {
            std::set<std::string> texts;
            for (const auto& d : filter_label(docs, label)) {
                texts.insert(d.text);
            }
            CHECK(texts.size() == 100);
        }
    }
    SUBCASE("seeds change order, not counts") {
        const auto a = generate_synthetic_emotion_corpus(default_emotion_templates(), 50, 1);
        const auto b = generate_synthetic_emotion_corpus(default_emotion_templates(), 50, 2);
        CHECK(a != b);
        CHECK(label_shares(a) == label_shares(b));
    }
}

TEST_CASE("label shares") {
    const std::vector<Document> docs{doc_at("2020-01-01", "a", "happy"), doc_at("2020-01-01", "b", "happy"),
                                     doc_at("2020-01-01", "c", "happy"), doc_at("2020-01-01", "d", "sad"),
                                     doc_at("2020-01-01", "e")};
    const auto s = label_shares(docs);
    CHECK(s.at("happy") == 0.75);
    CHECK(s.at("sad") == 0.25);
    const std::vector<Document> same{doc_at("2020-01-01", "a", "sad")};
    CHECK(label_shares(same).at("sad") == 1.0);
}

}  // TEST_SUITE
