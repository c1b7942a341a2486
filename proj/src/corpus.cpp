// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include "tempad/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "tempad/error.hpp"
#include "tempad/io.hpp"
#include "tempad/rng.hpp"

namespace tempad {

using nlohmann::json;

namespace {

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

std::optional<Document> parse_record(const std::string& line, const CorpusSchema& schema) {
    const json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (!record.is_object()) {
        return std::nullopt;
    }
    const auto text = record.find(schema.text_field);
    const auto stamp = record.find(schema.timestamp_field);
    if (text == record.end() || stamp == record.end() || !text->is_string() || !stamp->is_string()) {
        return std::nullopt;
    }
    Document doc;
    doc.text = text->get<std::string>();
    if (is_blank(doc.text)) {
        return std::nullopt;
    }
    const auto ts = parse_timestamp(stamp->get<std::string>());
    if (!ts) {
        return std::nullopt;
    }
    if ((schema.not_before && *ts < *schema.not_before) || (schema.not_after && *ts > *schema.not_after)) {
        return std::nullopt;
    }
    doc.timestamp = *ts;
    if (const auto label = record.find(schema.label_field); label != record.end()) {
        if (label->is_string()) {
            doc.label = label->get<std::string>();
        } else if (!label->is_null()) {
            return std::nullopt;
        }
    }
    return doc;
}

// Splits a template into literal text and slot names; slots are `{name}`.
struct TemplatePart {
    bool is_slot = false;
    std::string text;
};

std::vector<TemplatePart> split_template(const std::string& tmpl) {
    std::vector<TemplatePart> parts;
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const auto open = tmpl.find('{', pos);
        if (open == std::string::npos) {
            parts.push_back({false, tmpl.substr(pos)});
            break;
        }
        const auto close = tmpl.find('}', open);
        require(close != std::string::npos, ErrorCategory::schema, "unterminated slot marker in template: " + tmpl);
        if (open > pos) {
            parts.push_back({false, tmpl.substr(pos, open - pos)});
        }
        parts.push_back({true, tmpl.substr(open + 1, close - open - 1)});
        pos = close + 1;
    }
    return parts;
}

// Mixed-radix decoding of a fill index into one sentence.
struct ExpandedTemplate {
    std::vector<TemplatePart> parts;
    std::vector<const std::vector<std::string>*> slot_words;
    std::size_t combinations = 1;

    std::string render(std::size_t index) const {
        std::string out;
        std::size_t slot = 0;
        for (const auto& part : parts) {
            if (!part.is_slot) {
                out += part.text;
                continue;
            }
            const auto& words = *slot_words[slot++];
            out += words[index % words.size()];
            index /= words.size();
        }
        return out;
    }
};

std::vector<ExpandedTemplate> expand(const EmotionTemplates& templates, const std::string& label) {
    const auto it = templates.templates.find(label);
    require(it != templates.templates.end() && !it->second.empty(), ErrorCategory::empty_input,
            "no templates for label '" + label + "'");
    std::vector<ExpandedTemplate> out;
    for (const auto& tmpl : it->second) {
        ExpandedTemplate e;
        e.parts = split_template(tmpl);
        for (const auto& part : e.parts) {
            if (!part.is_slot) {
                continue;
            }
            const auto words = templates.slots.find(part.text);
            require(words != templates.slots.end() && !words->second.empty(), ErrorCategory::schema,
                    "template slot '{" + part.text + "}' has no fill words");
            e.slot_words.push_back(&words->second);
            e.combinations *= words->second.size();
        }
        out.push_back(std::move(e));
    }
    return out;
}

}  // namespace

Corpus read_corpus(std::istream& in, const CorpusSchema& schema) {
    Corpus corpus;
    std::size_t records = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (is_blank(line)) {
            continue;
        }
        ++records;
        if (auto doc = parse_record(line, schema)) {
            corpus.documents.push_back(std::move(*doc));
        } else {
            ++corpus.skipped;
        }
    }
    if (in.bad()) {
        fail(ErrorCategory::io, "read error while loading corpus");
    }
    if (records > 0 && corpus.skipped * 2 > records) {
        fail(ErrorCategory::schema, std::to_string(corpus.skipped) + " of " + std::to_string(records) +
                                        " records are malformed; check the field mapping");
    }
    std::stable_sort(corpus.documents.begin(), corpus.documents.end(),
                     [](const Document& a, const Document& b) { return a.timestamp < b.timestamp; });
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const CorpusSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    require(in.is_open(), ErrorCategory::io, "cannot open corpus file " + path.string());
    return read_corpus(in, schema);
}

void write_corpus(std::ostream& out, std::span<const Document> docs) {
    for (const auto& doc : docs) {
        json record{{"text", doc.text}, {"timestamp", format_timestamp(doc.timestamp)}};
        if (doc.label) {
            record["label"] = *doc.label;
        }
        out << record.dump() << '\n';
    }
}

void write_corpus(const std::filesystem::path& path, std::span<const Document> docs) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.is_open(), ErrorCategory::io, "cannot write corpus file " + path.string());
    write_corpus(out, docs);
    require(out.good(), ErrorCategory::io, "write failed for " + path.string());
}

std::vector<Date> read_wave_dates(std::istream& in) {
    std::vector<Date> dates;
    std::string line;
    while (std::getline(in, line)) {
        if (is_blank(line) || line.front() == '#') {
            continue;
        }
        dates.push_back(parse_date(line));
    }
    return dates;
}

std::vector<Date> read_wave_dates(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.is_open(), ErrorCategory::io, "cannot open wave date file " + path.string());
    return read_wave_dates(in);
}

std::vector<TimeSlice> slice_weekly(const Corpus& corpus, std::span<const Date> wave_dates, int window_days) {
    require(!wave_dates.empty(), ErrorCategory::empty_input, "no wave dates given");
    require(window_days >= 1, ErrorCategory::invalid_argument, "window_days must be >= 1");
    for (std::size_t i = 1; i < wave_dates.size(); ++i) {
        require(wave_dates[i - 1] < wave_dates[i], ErrorCategory::invalid_argument,
                "wave dates must be strictly increasing (" + format_date(wave_dates[i]) + ")");
    }
    const auto& docs = corpus.documents;
    require(std::is_sorted(docs.begin(), docs.end(),
                           [](const Document& a, const Document& b) { return a.timestamp < b.timestamp; }),
            ErrorCategory::invalid_argument, "corpus must be sorted by timestamp");

    std::vector<TimeSlice> slices;
    slices.reserve(wave_dates.size());
    for (std::size_t i = 0; i < wave_dates.size(); ++i) {
        TimeSlice slice;
        slice.id = static_cast<int>(i);
        slice.end_date = wave_dates[i];
        slice.window_days = window_days;
        const Timestamp lo{std::chrono::duration_cast<std::chrono::seconds>(slice.start_date().time_since_epoch())};
        const Timestamp hi{std::chrono::duration_cast<std::chrono::seconds>(slice.end_date.time_since_epoch())};
        const auto first = std::lower_bound(docs.begin(), docs.end(), lo,
                                            [](const Document& d, Timestamp t) { return d.timestamp < t; });
        const auto last = std::lower_bound(first, docs.end(), hi,
                                           [](const Document& d, Timestamp t) { return d.timestamp < t; });
        slice.documents.assign(first, last);
        slices.push_back(std::move(slice));
    }
    return slices;
}

void cap_to_smallest_slice(std::vector<TimeSlice>& slices, std::uint64_t seed) {
    std::size_t smallest = 0;
    for (const auto& s : slices) {
        if (!s.flagged_empty() && (smallest == 0 || s.documents.size() < smallest)) {
            smallest = s.documents.size();
        }
    }
    for (auto& s : slices) {
        if (s.documents.size() <= smallest) {
            continue;
        }
        std::vector<std::size_t> idx(s.documents.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(s.id)));
        rng.shuffle(std::span(idx));
        idx.resize(smallest);
        std::sort(idx.begin(), idx.end());  // keep chronological order
        std::vector<Document> kept;
        kept.reserve(smallest);
        for (const auto i : idx) {
            kept.push_back(std::move(s.documents[i]));
        }
        s.documents = std::move(kept);
    }
}

MixCounts mix_counts(double fraction, std::size_t total) {
    require(fraction >= 0.0 && fraction <= 1.0, ErrorCategory::invalid_argument, "mix fraction must be in [0, 1]");
    const auto first = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(total)));
    return {std::min(first, total), total - std::min(first, total)};
}

std::vector<double> preset_mix_fractions() {
    std::vector<double> out;
    for (int i = 0; i <= 10; ++i) {
        out.push_back(static_cast<double>(i) / 10.0);
    }
    return out;
}

std::vector<Document> synth_mix(std::span<const Document> first_pool, std::span<const Document> second_pool,
                                const MixSpec& spec) {
    require(spec.total_count > 0, ErrorCategory::invalid_argument, "mix total_count must be positive");
    const auto counts = mix_counts(spec.happy_fraction, spec.total_count);
    require(counts.first <= first_pool.size() && counts.second <= second_pool.size(),
            ErrorCategory::insufficient_data,
            "mix needs " + std::to_string(counts.first) + " + " + std::to_string(counts.second) +
                " documents but pools hold " + std::to_string(first_pool.size()) + " + " +
                std::to_string(second_pool.size()));
    std::set<std::string> first_labels;
    for (const auto& d : first_pool) {
        first_labels.insert(d.label.value_or(""));
    }
    for (const auto& d : second_pool) {
        require(!first_labels.contains(d.label.value_or("")), ErrorCategory::invalid_argument,
                "mix pools must be disjoint by label");
    }

    auto draw = [](std::span<const Document> pool, std::size_t n, std::uint64_t seed) {
        std::vector<std::size_t> idx(pool.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        Rng rng(seed);
        rng.shuffle(std::span(idx));
        std::vector<Document> out;
        out.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            out.push_back(pool[idx[i]]);
        }
        return out;
    };
    auto mixed = draw(first_pool, counts.first, derive_seed(spec.seed, 1));
    auto rest = draw(second_pool, counts.second, derive_seed(spec.seed, 2));
    mixed.insert(mixed.end(), std::make_move_iterator(rest.begin()), std::make_move_iterator(rest.end()));
    Rng rng(derive_seed(spec.seed, 3));
    rng.shuffle(std::span(mixed));
    return mixed;
}

EmotionTemplates default_emotion_templates() {
    EmotionTemplates t;
    t.templates["happy"] = {
        "I felt so happy {when} {reason}",
        "feeling really happy {when}, {reason}",
        "so happy and {good} {when}!",
        "honestly I am happy {reason}",
        "what a {good} day, I feel happy {when}",
        "{when} I felt happy and {good}",
        "happy happy happy {reason}",
        "cannot stop smiling {when}, so happy {reason}",
        "I felt happy {reason}, life is {good}",
        "so grateful and happy {when}",
    };
    t.templates["sad"] = {
        "I felt so sad {when} {reason}",
        "feeling really sad {when}, {reason}",
        "so sad and {bad} {when}.",
        "honestly I am sad {reason}",
        "what a {bad} day, I feel sad {when}",
        "{when} I felt sad and {bad}",
        "sad sad sad {reason}",
        "cannot stop crying {when}, so sad {reason}",
        "I felt sad {reason}, life is {bad}",
        "so tired and sad {when}",
    };
    t.slots["when"] = {"today",        "this morning", "tonight",       "right now",     "this week",
                       "all day",      "at the moment", "this weekend", "again",         "lately",
                       "after work",   "since monday", "this evening",  "after lunch",   "so far",
                       "at home",      "on the train", "after school",  "this afternoon", "all week"};
    t.slots["reason"] = {"because of my friends",  "because of the news",   "after the match",
                         "about the weather",      "about my family",       "with my mum",
                         "because of work",        "after the call",        "about the holidays",
                         "because of the results", "about my dog",          "after that film",
                         "with everyone",          "because of the letter", "about the garden",
                         "after the concert",      "about my exams",        "because of the trip",
                         "with my partner",        "about the weekend"};
    t.slots["good"] = {"great", "lovely", "wonderful", "bright", "amazing", "cheerful", "joyful", "brilliant",
                       "fantastic", "excellent", "sunny", "perfect", "glorious", "delightful", "sweet",
                       "merry", "splendid", "blessed", "calm", "warm"};
    t.slots["bad"] = {"awful", "gloomy", "terrible", "grey", "lonely", "miserable", "heavy", "empty",
                      "dark", "bleak", "cold", "broken", "hopeless", "tearful", "low", "down", "dreary",
                      "painful", "lost", "hurt"};
    return t;
}

EmotionTemplates load_emotion_templates(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.is_open(), ErrorCategory::io, "cannot open template file " + path.string());
    const json doc = json::parse(in, nullptr, false);
    require(doc.is_object() && doc.contains("templates") && doc["templates"].is_object(), ErrorCategory::schema,
            "template file needs an object field 'templates' (label -> [templates])");
    EmotionTemplates t;
    try {
        t.templates = doc["templates"].get<std::map<std::string, std::vector<std::string>>>();
        if (doc.contains("slots")) {
            t.slots = doc["slots"].get<std::map<std::string, std::vector<std::string>>>();
        }
    } catch (const json::exception& e) {
        fail(ErrorCategory::schema, std::string("template file: ") + e.what());
    }
    return t;
}

std::size_t template_capacity(const EmotionTemplates& templates, const std::string& label) {
    std::size_t total = 0;
    for (const auto& e : expand(templates, label)) {
        total += e.combinations;
    }
    return total;
}

std::vector<Document> generate_synthetic_emotion_corpus(const EmotionTemplates& templates,
                                                        std::size_t n_per_label, std::uint64_t seed,
                                                        Timestamp stamp) {
    require(!templates.templates.empty(), ErrorCategory::empty_input, "no templates given");
    std::vector<Document> out;
    std::uint64_t label_index = 0;
    for (const auto& [label, _] : templates.templates) {
        const auto expanded = expand(templates, label);
        std::vector<std::size_t> offsets;  // prefix sums over template capacities
        std::size_t capacity = 0;
        for (const auto& e : expanded) {
            offsets.push_back(capacity);
            capacity += e.combinations;
        }
        Rng rng(derive_seed(seed, label_index++));
        auto render = [&](std::size_t combo) {
            const auto t = static_cast<std::size_t>(
                std::upper_bound(offsets.begin(), offsets.end(), combo) - offsets.begin() - 1);
            return expanded[t].render(combo - offsets[t]);
        };
        std::unordered_set<std::size_t> used;
        for (std::size_t i = 0; i < n_per_label; ++i) {
            if (used.size() == capacity) {
                used.clear();  // pool exhausted; start another round of distinct draws
            }
            std::size_t combo = 0;
            do {
                combo = static_cast<std::size_t>(rng.uniform_index(capacity));
            } while (used.contains(combo));
            used.insert(combo);
            out.push_back(Document{render(combo), stamp, label});
        }
    }
    Rng order(derive_seed(seed, 0xfeedULL));
    order.shuffle(std::span(out));
    return out;
}

std::vector<Document> filter_label(std::span<const Document> docs, const std::string& label) {
    std::vector<Document> out;
    for (const auto& d : docs) {
        if (d.label && *d.label == label) {
            out.push_back(d);
        }
    }
    return out;
}

std::map<std::string, double> label_shares(std::span<const Document> docs) {
    std::map<std::string, std::size_t> counts;
    std::size_t labeled = 0;
    for (const auto& d : docs) {
        if (d.label) {
            ++counts[*d.label];
            ++labeled;
        }
    }
    require(labeled > 0, ErrorCategory::empty_input, "no labeled documents");
    std::map<std::string, double> shares;
    for (const auto& [label, n] : counts) {
        shares[label] = static_cast<double>(n) / static_cast<double>(labeled);
    }
    return shares;
}

void write_slices(const std::filesystem::path& dir, std::span<const TimeSlice> slices) {
    std::filesystem::create_directories(dir);
    std::ostringstream manifest;
    write_csv_preamble(manifest);
    manifest << "slice_id,end_date,window_days,n_docs\n";
    for (const auto& s : slices) {
        write_corpus(dir / ("slice_" + std::to_string(s.id) + ".jsonl"), s.documents);
        manifest << s.id << ',' << format_date(s.end_date) << ',' << s.window_days << ',' << s.documents.size()
                 << '\n';
    }
    write_file_atomic(dir / "manifest.csv", manifest.str());
}

std::vector<SliceInfo> read_slice_manifest(const std::filesystem::path& dir) {
    const CsvTable t = read_csv(dir / "manifest.csv");
    const auto ci = t.column("slice_id"), cd = t.column("end_date"), cw = t.column("window_days"),
               cn = t.column("n_docs");
    std::vector<SliceInfo> out;
    for (const auto& r : t.rows) {
        SliceInfo s;
        s.id = static_cast<int>(parse_int(r[ci], "slice_id"));
        s.end_date = parse_date(r[cd]);
        s.window_days = static_cast<int>(parse_int(r[cw], "window_days"));
        s.n_docs = static_cast<std::size_t>(parse_uint(r[cn], "n_docs"));
        out.push_back(s);
    }
    require(!out.empty(), ErrorCategory::empty_input, (dir / "manifest.csv").string() + " lists no slices");
    return out;
}

std::vector<Document> load_slice_documents(const std::filesystem::path& dir, int slice_id) {
    return load_corpus(dir / ("slice_" + std::to_string(slice_id) + ".jsonl")).documents;
}

}  // namespace tempad
