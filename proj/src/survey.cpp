// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include "tempad/survey.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "tempad/error.hpp"
#include "tempad/io.hpp"

namespace tempad::inline TEMPAD_PRECISION_NS {

namespace {

using nlohmann::json;

char ascii_lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }
char ascii_upper(char c) { return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c; }

std::string recase(std::string s, OptionCasing casing) {
    switch (casing) {
    case OptionCasing::as_is:
        break;
    case OptionCasing::lower:
        std::transform(s.begin(), s.end(), s.begin(), ascii_lower);
        break;
    case OptionCasing::capitalized:
        if (!s.empty()) {
            s[0] = ascii_upper(s[0]);
        }
        break;
    }
    return s;
}

std::string fill_adjective(const std::string& question, const std::string& adjective) {
    std::string out = question;
    const auto pos = out.find(adjective_placeholder);
    out.replace(pos, adjective_placeholder.size(), adjective);
    return out;
}

Prompt make_prompt(const std::string& question, const std::optional<std::string>& prefix, const std::string& item,
                   const std::string& option) {
    Prompt p;
    p.item = item;
    p.option = option;
    p.tokens.push_back(vocab::bos);
    std::string head = question + "\n";
    if (prefix) {
        head += *prefix + " ";
    }
    const auto head_ids = encode(head);
    p.tokens.insert(p.tokens.end(), head_ids.begin(), head_ids.end());
    p.span_begin = p.tokens.size();
    const auto option_ids = encode(option);
    require(!option_ids.empty(), ErrorCategory::schema, "option '" + option + "' encodes to no tokens");
    p.tokens.insert(p.tokens.end(), option_ids.begin(), option_ids.end());
    p.span_end = p.tokens.size();
    return p;
}

double expected_value(std::span<const double> weights, std::span<const int> values) {
    // Scaling by the largest weight makes uniform weights exactly 1.
    const double top = weights.empty() ? 0.0 : *std::max_element(weights.begin(), weights.end());
    require(top > 0.0 && std::isfinite(top), ErrorCategory::degenerate,
            "adjective has all-zero option probabilities");
    double total = 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        const double w = weights[k] / top;
        total += w;
        acc += w * values[k];
    }
    require(total > 0.0 && std::isfinite(total), ErrorCategory::degenerate,
            "adjective has all-zero option probabilities");
    return acc / total;
}

void check_combine_shape(std::size_t n_adjectives, std::span<const int> option_values) {
    require(n_adjectives > 0, ErrorCategory::empty_input, "no adjectives to combine");
    require(!option_values.empty(), ErrorCategory::invalid_argument, "no option values");
}

}  // namespace

void Instrument::validate() const {
    require(!id.empty(), ErrorCategory::schema, "instrument id is empty");
    require(!question.empty(), ErrorCategory::schema, id + ": question is empty");
    require(options.size() >= 2, ErrorCategory::schema, id + ": an instrument needs at least two options");
    std::set<std::string> seen;
    for (const auto& o : options) {
        require(!o.empty(), ErrorCategory::schema, id + ": empty option");
        require(seen.insert(o).second, ErrorCategory::schema, id + ": duplicate option '" + o + "'");
    }
    if (prefix) {
        require(!prefix->empty(), ErrorCategory::schema, id + ": prefix present but empty");
    }
    if (scoring == Scoring::direct) {
        require(scales.empty() && option_values.empty(), ErrorCategory::schema,
                id + ": direct scoring takes no scales or option values");
        return;
    }
    require(question.find(adjective_placeholder) != std::string::npos, ErrorCategory::schema,
            id + ": likert question needs an [adjective] placeholder");
    require(option_values.size() == options.size(), ErrorCategory::schema,
            id + ": one option value per option required");
    for (std::size_t k = 1; k < option_values.size(); ++k) {
        require(option_values[k] > option_values[k - 1], ErrorCategory::schema,
                id + ": option values must increase strictly");
    }
    require(!scales.empty(), ErrorCategory::schema, id + ": likert scoring needs at least one scale");
    std::set<std::string> emotions;
    for (const auto& s : scales) {
        require(!s.emotion.empty(), ErrorCategory::schema, id + ": scale without an emotion name");
        require(emotions.insert(s.emotion).second, ErrorCategory::schema, id + ": duplicate emotion " + s.emotion);
        require(!s.adjectives.empty(), ErrorCategory::schema, id + ": scale " + s.emotion + " has no adjectives");
        for (const auto& a : s.adjectives) {
            require(!a.empty(), ErrorCategory::schema, id + ": empty adjective in " + s.emotion);
        }
    }
}

std::vector<std::string> builtin_instrument_ids() { return {"mood_weekly", "panasx_week", "nhs_expectation"}; }

Instrument builtin_instrument(std::string_view id) {
    Instrument in;
    in.id = std::string(id);
    if (id == "mood_weekly") {
        in.question =
            "Broadly speaking, which of the following best describe your mood and/or how you have felt in the past "
            "week?";
        in.prefix = "I felt";
        in.options = {"happy",      "sad",      "energetic", "apathetic", "inspired", "frustrated",
                      "optimistic", "stressed", "content",   "bored",     "lonely",   "scared"};
    } else if (id == "panasx_week") {
        // Wording kept as published, including "extend".
        in.question = "To what extend have you felt [adjective] during the past week?";
        in.options = {"very slightly or not at all", "a little", "moderately", "quite a bit", "extremely"};
        in.scoring = Scoring::likert_scale;
        in.option_values = {1, 2, 3, 4, 5};
        in.scales = {
            {"scared", {"afraid", "scared", "frightened", "nervous", "jittery", "shaky"}},
            {"sad", {"sad", "blue", "downhearted", "alone", "lonely"}},
        };
    } else if (id == "nhs_expectation") {
        in.question =
            "Do you expect the National Health Service to get better, worse or stay the same over the next few years?";
        in.options = {"get better", "get worse"};
    } else {
        fail(ErrorCategory::invalid_argument, "unknown built-in instrument '" + std::string(id) + "'");
    }
    return in;
}

Instrument parse_instrument(std::string_view text, const std::string& source) {
    const json doc = json::parse(text, nullptr, false);
    require(!doc.is_discarded() && doc.is_object(), ErrorCategory::parse, source + ": not a JSON object");
    Instrument in;
    try {
        in.id = doc.at("id").get<std::string>();
        in.question = doc.at("question").get<std::string>();
        if (doc.contains("prefix") && !doc.at("prefix").is_null()) {
            in.prefix = doc.at("prefix").get<std::string>();
        }
        in.options = doc.at("options").get<std::vector<std::string>>();
        const json scoring = doc.value("scoring", json{{"type", "direct"}});
        const auto type = scoring.at("type").get<std::string>();
        if (type == "direct") {
            in.scoring = Scoring::direct;
        } else if (type == "likert_scale") {
            in.scoring = Scoring::likert_scale;
            in.option_values = scoring.at("option_values").get<std::vector<int>>();
            for (const auto& s : scoring.at("scales")) {
                in.scales.push_back({s.at("emotion").get<std::string>(), s.at("adjectives").get<std::vector<std::string>>()});
            }
        } else {
            fail(ErrorCategory::schema, source + ": unknown scoring type '" + type + "'");
        }
    } catch (const json::exception& e) {
        fail(ErrorCategory::schema, source + ": " + e.what());
    }
    in.validate();
    return in;
}

Instrument load_instrument(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.is_open(), ErrorCategory::io, "cannot open instrument " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_instrument(ss.str(), path.string());
}

Instrument resolve_instrument(std::string_view id_or_path) {
    for (const auto& id : builtin_instrument_ids()) {
        if (id == id_or_path) {
            return builtin_instrument(id);
        }
    }
    return load_instrument(std::filesystem::path(id_or_path));
}

std::string instrument_to_json(const Instrument& in) {
    json doc;
    doc["id"] = in.id;
    doc["question"] = in.question;
    if (in.prefix) {
        doc["prefix"] = *in.prefix;
    }
    doc["options"] = in.options;
    if (in.scoring == Scoring::direct) {
        doc["scoring"] = {{"type", "direct"}};
    } else {
        json scales = json::array();
        for (const auto& s : in.scales) {
            scales.push_back({{"emotion", s.emotion}, {"adjectives", s.adjectives}});
        }
        doc["scoring"] = {{"type", "likert_scale"}, {"option_values", in.option_values}, {"scales", scales}};
    }
    return doc.dump(2) + "\n";
}

OptionCasing parse_casing(std::string_view name) {
    if (name == "as_is") {
        return OptionCasing::as_is;
    }
    if (name == "lower") {
        return OptionCasing::lower;
    }
    if (name == "capitalized") {
        return OptionCasing::capitalized;
    }
    fail(ErrorCategory::invalid_argument, "unknown casing '" + std::string(name) + "' (as_is, lower, capitalized)");
}

std::string_view casing_name(OptionCasing casing) noexcept {
    switch (casing) {
    case OptionCasing::as_is:
        return "as_is";
    case OptionCasing::lower:
        return "lower";
    case OptionCasing::capitalized:
        return "capitalized";
    }
    return "as_is";
}

Instrument with_casing(Instrument instrument, OptionCasing casing) {
    for (auto& o : instrument.options) {
        o = recase(std::move(o), casing);
    }
    instrument.validate();
    return instrument;
}

Instrument without_prefix(Instrument instrument) {
    instrument.prefix.reset();
    return instrument;
}

std::vector<Prompt> build_prompts(const Instrument& instrument) {
    instrument.validate();
    std::vector<Prompt> out;
    if (instrument.scoring == Scoring::direct) {
        for (const auto& o : instrument.options) {
            out.push_back(make_prompt(instrument.question, instrument.prefix, "", o));
        }
        return out;
    }
    for (const auto& scale : instrument.scales) {
        for (const auto& adj : scale.adjectives) {
            const std::string q = fill_adjective(instrument.question, adj);
            for (const auto& o : instrument.options) {
                out.push_back(make_prompt(q, instrument.prefix, adj, o));
            }
        }
    }
    return out;
}

OptionScore score_option(const ModelSession& session, const Prompt& prompt, double temperature) {
    require(temperature > 0.0 && std::isfinite(temperature), ErrorCategory::invalid_argument,
            "temperature must be positive");
    require(prompt.span_begin >= 1 && prompt.span_begin < prompt.span_end && prompt.span_end <= prompt.tokens.size(),
            ErrorCategory::invalid_argument, "option span outside the prompt");
    const std::span<const TokenId> context(prompt.tokens.data(), prompt.span_end);
    const Matrix logits = session.forward(context);
    double logp = 0.0;
    for (std::size_t t = prompt.span_begin; t < prompt.span_end; ++t) {
        logp += log_softmax_at(std::span<const real>(logits.row(static_cast<int>(t - 1)), static_cast<std::size_t>(logits.cols())), temperature, prompt.tokens[t]);
    }
    require(std::isfinite(logp), ErrorCategory::numeric, "non-finite option log probability");
    OptionScore s;
    s.item = prompt.item;
    s.option = prompt.option;
    s.log_probability = logp;
    s.probability = std::exp(static_cast<long double>(logp));
    s.temperature = temperature;
    if (const LoraAdapter* a = session.active()) {
        s.slice_id = a->meta.slice_id;
        s.seed = a->meta.seed;
    }
    return s;
}

double panasx_combine(std::span<const std::vector<double>> probabilities, std::span<const int> option_values) {
    check_combine_shape(probabilities.size(), option_values);
    double sum = 0.0;
    for (const auto& p : probabilities) {
        require(p.size() == option_values.size(), ErrorCategory::invalid_argument,
                "every adjective needs one probability per option");
        for (const double v : p) {
            require(v >= 0.0 && std::isfinite(v), ErrorCategory::invalid_argument, "probabilities must be finite and >= 0");
        }
        sum += expected_value(p, option_values);
    }
    return sum / static_cast<double>(probabilities.size());
}

double panasx_combine_log(std::span<const std::vector<double>> log_probabilities, std::span<const int> option_values) {
    check_combine_shape(log_probabilities.size(), option_values);
    double sum = 0.0;
    std::vector<double> w;
    for (const auto& lp : log_probabilities) {
        require(lp.size() == option_values.size(), ErrorCategory::invalid_argument,
                "every adjective needs one probability per option");
        const double top = *std::max_element(lp.begin(), lp.end());
        require(std::isfinite(top), ErrorCategory::degenerate, "adjective has all-zero option probabilities");
        w.resize(lp.size());
        for (std::size_t k = 0; k < lp.size(); ++k) {
            w[k] = std::exp(lp[k] - top);
        }
        sum += expected_value(w, option_values);
    }
    return sum / static_cast<double>(log_probabilities.size());
}

std::vector<ScoreRow> score_instrument(const ModelSession& session, const Instrument& instrument,
                                       double temperature) {
    const auto prompts = build_prompts(instrument);
    std::vector<OptionScore> scores;
    scores.reserve(prompts.size());
    for (const auto& p : prompts) {
        scores.push_back(score_option(session, p, temperature));
    }
    int slice_id = -1;
    std::uint64_t seed = 0;
    if (const LoraAdapter* a = session.active()) {
        slice_id = a->meta.slice_id;
        seed = a->meta.seed;
    }
    std::vector<ScoreRow> rows;
    if (instrument.scoring == Scoring::direct) {
        for (const auto& s : scores) {
            rows.push_back({instrument.id, slice_id, seed, s.option, temperature, s.probability, s.log_probability});
        }
        return rows;
    }
    const std::size_t n_opt = instrument.options.size();
    std::size_t next = 0;
    for (const auto& scale : instrument.scales) {
        std::vector<std::vector<double>> lps;
        for (std::size_t a = 0; a < scale.adjectives.size(); ++a) {
            std::vector<double> lp(n_opt);
            for (std::size_t k = 0; k < n_opt; ++k) {
                lp[k] = scores[next++].log_probability;
            }
            lps.push_back(std::move(lp));
        }
        const double v = panasx_combine_log(lps, instrument.option_values);
        rows.push_back({instrument.id, slice_id, seed, scale.emotion, temperature, static_cast<long double>(v),
                        std::nullopt});
    }
    return rows;
}

void write_scores(std::ostream& out, std::span<const ScoreRow> rows) {
    write_csv_preamble(out);
    out << "instrument,slice_id,seed,option_or_emotion,temperature,probability_or_score,log_probability\n";
    for (const auto& r : rows) {
        out << csv_field(r.instrument) << ',' << r.slice_id << ',' << r.seed << ',' << csv_field(r.label) << ','
            << format_number(r.temperature) << ',' << format_number(r.value) << ','
            << (r.log_probability ? format_number(*r.log_probability) : std::string()) << '\n';
    }
}

std::vector<ScoreRow> read_scores(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    const auto ci = t.column("instrument"), cs = t.column("slice_id"), cd = t.column("seed"),
               co = t.column("option_or_emotion"), ct = t.column("temperature"), cv = t.column("probability_or_score"),
               cl = t.column("log_probability");
    std::vector<ScoreRow> rows;
    for (const auto& r : t.rows) {
        ScoreRow s;
        s.instrument = r[ci];
        s.slice_id = static_cast<int>(parse_int(r[cs], "slice_id"));
        s.seed = parse_uint(r[cd], "seed");
        s.label = r[co];
        s.temperature = parse_double(r[ct], "temperature");
        s.value = parse_long_double(r[cv], "probability_or_score");
        if (!r[cl].empty()) {
            s.log_probability = parse_double(r[cl], "log_probability");
        }
        rows.push_back(std::move(s));
    }
    return rows;
}

}  // namespace tempad
