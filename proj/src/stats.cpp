// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#include "tempad/stats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <thread>

#include "tempad/error.hpp"
#include "tempad/io.hpp"
#include "tempad/rng.hpp"

namespace tempad {

namespace {

// Permuted |r| within this of the observed |r| counts as a tie; reorderings
// that are exact mirrors would otherwise miss by an ulp.
constexpr double tie_tolerance = 1e-12;

struct Centered {
    std::vector<double> values;
    double ss = 0.0;
};

Centered center(std::span<const double> v, const char* name) {
    Centered c;
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    c.values.resize(v.size());
    double ss = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        c.values[i] = v[i] - mean;
        ss += c.values[i] * c.values[i];
    }
    require(std::isfinite(ss), ErrorCategory::numeric, std::string(name) + " has non-finite values");
    require(ss > 0.0, ErrorCategory::degenerate, std::string(name) + " has zero variance");
    c.ss = ss;
    return c;
}

void check_pair(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), ErrorCategory::invalid_argument, "correlation inputs differ in length");
    require(x.size() >= 2, ErrorCategory::insufficient_data, "correlation needs at least two points");
}

double correlate(const Centered& x, const Centered& y, std::span<const std::size_t> order) {
    double s = 0.0;
    for (std::size_t i = 0; i < order.size(); ++i) {
        s += x.values[order[i]] * y.values[i];
    }
    // One square root keeps r(x, x) at exactly 1.
    return std::clamp(s / std::sqrt(x.ss * y.ss), -1.0, 1.0);
}

bool at_least_as_extreme(double r_perm, double r_obs) {
    return std::abs(r_perm) >= std::abs(r_obs) - tie_tolerance;
}

}  // namespace

void ReferenceSeries::validate() const {
    for (std::size_t i = 0; i < points.size(); ++i) {
        require(std::isfinite(points[i].second), ErrorCategory::schema, source + ": non-finite value for " + option);
        if (i > 0) {
            require(points[i - 1].first < points[i].first, ErrorCategory::schema,
                    source + ": dates for " + option + " must increase strictly");
        }
    }
}

std::vector<ReferenceSeries> read_reference(std::istream& in, const std::string& source) {
    const CsvTable t = read_csv(in, source);
    const auto cd = t.column("wave_date"), co = t.column("option"), cv = t.column("value");
    std::vector<ReferenceSeries> out;
    for (const auto& r : t.rows) {
        auto it = std::find_if(out.begin(), out.end(), [&](const ReferenceSeries& s) { return s.option == r[co]; });
        if (it == out.end()) {
            out.push_back({source, r[co], {}});
            it = std::prev(out.end());
        }
        it->points.emplace_back(parse_date(r[cd]), parse_double(r[cv], "value"));
    }
    require(!out.empty(), ErrorCategory::empty_input, source + ": no reference rows");
    for (const auto& s : out) {
        s.validate();
    }
    return out;
}

std::vector<ReferenceSeries> load_reference(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.is_open(), ErrorCategory::io, "cannot open reference " + path.string());
    return read_reference(in, path.string());
}

Alignment align(std::span<const DatedValue> series, std::span<const DatedValue> reference) {
    Alignment a;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < series.size() && j < reference.size()) {
        if (series[i].first < reference[j].first) {
            ++a.dropped_series;
            ++i;
        } else if (reference[j].first < series[i].first) {
            ++a.dropped_reference;
            ++j;
        } else {
            a.dates.push_back(series[i].first);
            a.series.push_back(series[i].second);
            a.reference.push_back(reference[j].second);
            ++i;
            ++j;
        }
    }
    a.dropped_series += series.size() - i;
    a.dropped_reference += reference.size() - j;
    require(a.dates.size() >= 2, ErrorCategory::insufficient_data,
            "only " + std::to_string(a.dates.size()) + " common dates between series and reference");
    return a;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    const Centered cx = center(x, "x");
    const Centered cy = center(y, "y");
    std::vector<std::size_t> identity(x.size());
    std::iota(identity.begin(), identity.end(), 0);
    return correlate(cx, cy, identity);
}

double permutation_test(std::span<const double> x, std::span<const double> y, int n_perm, std::uint64_t seed,
                        int jobs) {
    check_pair(x, y);
    require(n_perm >= 1, ErrorCategory::invalid_argument, "need at least one permutation");
    const Centered cx = center(x, "x");
    const Centered cy = center(y, "y");
    std::vector<std::size_t> identity(x.size());
    std::iota(identity.begin(), identity.end(), 0);
    const double r_obs = correlate(cx, cy, identity);

    auto count_range = [&](int begin, int end) {
        std::vector<std::size_t> order(identity.size());
        long hits = 0;
        for (int i = begin; i < end; ++i) {
            std::copy(identity.begin(), identity.end(), order.begin());
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
            rng.shuffle(std::span(order));
            hits += at_least_as_extreme(correlate(cx, cy, order), r_obs) ? 1 : 0;
        }
        return hits;
    };

    const int workers = std::clamp(jobs, 1, n_perm);
    long hits = 0;
    if (workers == 1) {
        hits = count_range(0, n_perm);
    } else {
        std::vector<long> partial(static_cast<std::size_t>(workers), 0);
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) {
            const int b = static_cast<int>(static_cast<long>(n_perm) * w / workers);
            const int e = static_cast<int>(static_cast<long>(n_perm) * (w + 1) / workers);
            pool.emplace_back([&, w, b, e] { partial[static_cast<std::size_t>(w)] = count_range(b, e); });
        }
        pool.clear();
        hits = std::accumulate(partial.begin(), partial.end(), 0L);
    }
    return static_cast<double>(1 + hits) / static_cast<double>(1 + n_perm);
}

double exact_permutation_test(std::span<const double> x, std::span<const double> y) {
    check_pair(x, y);
    require(x.size() <= 10, ErrorCategory::invalid_argument, "exhaustive permutation test is limited to n <= 10");
    const Centered cx = center(x, "x");
    const Centered cy = center(y, "y");
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    const double r_obs = correlate(cx, cy, order);
    long hits = 0;
    long total = 0;
    do {
        hits += at_least_as_extreme(correlate(cx, cy, order), r_obs) ? 1 : 0;
        ++total;
    } while (std::next_permutation(order.begin(), order.end()));
    return static_cast<double>(hits) / static_cast<double>(total);
}

std::string significance_stars(double p) {
    if (p < 0.001) {
        return "***";
    }
    if (p < 0.01) {
        return "**";
    }
    if (p < 0.05) {
        return "*";
    }
    return "";
}

CorrelationSummary summarize(std::span<const CorrelationResult> results) {
    require(!results.empty(), ErrorCategory::empty_input, "no correlation results to summarise");
    CorrelationSummary s;
    s.option = results.front().option;
    s.r_min = results.front().r;
    s.r_max = results.front().r;
    s.worst_p = results.front().p;
    for (const auto& r : results) {
        s.r_min = std::min(s.r_min, r.r);
        s.r_max = std::max(s.r_max, r.r);
        s.worst_p = std::max(s.worst_p, r.p);
    }
    s.n_seeds = static_cast<int>(results.size());
    s.stars = significance_stars(s.worst_p);
    return s;
}

ValidationTable validate(std::span<const AffectSeries> series, std::span<const ReferenceSeries> references,
                         const ValidationConfig& config) {
    ValidationTable table;
    for (const auto& s : series) {
        s.validate();
        const auto mapped = config.option_map.find(s.label);
        const std::string& ref_name = mapped == config.option_map.end() ? s.label : mapped->second;
        const auto ref = std::find_if(references.begin(), references.end(),
                                      [&](const ReferenceSeries& r) { return r.option == ref_name; });
        if (ref == references.end()) {
            continue;
        }
        std::map<std::uint64_t, std::vector<const SeriesPoint*>> by_seed;
        for (const auto& p : s.points) {
            by_seed[p.seed].push_back(&p);
        }
        std::vector<CorrelationResult> rows;
        for (const auto& [seed, pts] : by_seed) {
            std::vector<double> raw;
            for (const auto* p : pts) {
                raw.push_back(p->value);
            }
            const auto track = transform_track(raw, config.pipeline);
            std::vector<DatedValue> dated;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                dated.emplace_back(pts[i]->end_date, track[i]);
            }
            const Alignment a = align(dated, ref->points);
            CorrelationResult r;
            r.option = s.label;
            r.seed = seed;
            r.r = pearson(a.series, a.reference);
            r.p = permutation_test(a.series, a.reference, config.permutations, config.seed, config.jobs);
            r.n = a.dates.size();
            r.permutations = config.permutations;
            r.permutation_seed = config.seed;
            rows.push_back(r);
        }
        if (rows.empty()) {
            continue;
        }
        table.summaries.push_back(summarize(rows));
        table.results.insert(table.results.end(), rows.begin(), rows.end());
    }
    require(!table.results.empty(), ErrorCategory::empty_input, "no series matched a reference option");
    return table;
}

void write_validation(std::ostream& out, const ValidationTable& table) {
    write_csv_preamble(out);
    out << "option,seed,r,p,n,r_min,r_max,stars\n";
    for (const auto& s : table.summaries) {
        std::size_t n = 0;
        for (const auto& r : table.results) {
            if (r.option != s.option) {
                continue;
            }
            n = r.n;
            out << csv_field(r.option) << ',' << r.seed << ',' << format_number(r.r) << ',' << format_number(r.p)
                << ',' << r.n << ",,," << significance_stars(r.p) << '\n';
        }
        out << csv_field(s.option) << ",summary,," << format_number(s.worst_p) << ',' << n << ','
            << format_number(s.r_min) << ',' << format_number(s.r_max) << ',' << s.stars << '\n';
    }
}

}  // namespace tempad
