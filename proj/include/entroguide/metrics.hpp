#pragma once

// Benchmark metrics, report rendering and difficulty-stratified sampling.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "entroguide/engine.hpp"
#include "entroguide/store.hpp"
#include "entroguide/task.hpp"

namespace entroguide {

struct CellKey {
    std::string pair;
    Mode mode = Mode::NoGuidance;
    std::string dataset;
};

struct BenchCell {
    CellKey key;
    std::size_t n = 0;
    std::size_t skipped = 0;
    std::size_t successes = 0;
    std::size_t aborted = 0;
    double accuracy_pct = 0.0;
    double pass_rate_pct = 0.0;
    double improvement_rate_pct = 0.0;
    std::optional<double> mean_accuracy_pct;  // routing datasets only
    double avg_rounds = 0.0;
    double rag_usage_pct = 0.0;
};

struct BenchReport {
    std::vector<BenchCell> cells;
};

inline BenchCell compute_metrics(const CellKey& key, const std::vector<SessionTranscript>& transcripts) {
    if (transcripts.empty()) throw Error("compute_metrics needs at least one transcript");
    BenchCell c;
    c.key = key;
    c.n = transcripts.size();
    std::size_t initially_wrong = 0;
    std::size_t recovered = 0;
    std::size_t rag = 0;
    double rounds = 0.0;
    bool routing = false;
    double routing_acc = 0.0;
    for (const auto& t : transcripts) {
        if (t.check_skipped) ++c.skipped;
        if (t.aborted) ++c.aborted;
        if (t.success) ++c.successes;
        if (t.rag_used) ++rag;
        rounds += t.rounds_used;
        if (!t.check_skipped) {
            auto first = t.first_verdict();
            if (first && *first != Verdict::Correct) {
                ++initially_wrong;
                if (t.success) ++recovered;
            }
        }
        if (t.task.kind == TaskKind::Routing) {
            routing = true;
            routing_acc += t.routing_accuracy_pct.value_or(0.0);
        }
    }
    const double n = static_cast<double>(c.n);
    const std::size_t graded = c.n - c.skipped;
    c.accuracy_pct = graded == 0 ? 0.0 : 100.0 * static_cast<double>(c.successes) / static_cast<double>(graded);
    c.pass_rate_pct = c.accuracy_pct;
    c.improvement_rate_pct =
        initially_wrong == 0 ? 0.0 : 100.0 * static_cast<double>(recovered) / static_cast<double>(initially_wrong);
    if (routing) c.mean_accuracy_pct = routing_acc / n;
    c.avg_rounds = rounds / n;
    c.rag_usage_pct = 100.0 * static_cast<double>(rag) / n;
    return c;
}

// ---------------------------------------------------------------------------
// Rendering

enum class ReportFormat { Csv, Markdown };

namespace detail {

inline std::string shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string fixed2(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2) << v;
    return os.str();
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    return out + "\"";
}

inline int mode_rank(Mode m) { return static_cast<int>(m); }

// Headline metric for a dataset column: mean accuracy for routing, else accuracy.
inline double headline(const BenchCell& c) {
    if (c.mean_accuracy_pct) return *c.mean_accuracy_pct;
    return c.accuracy_pct;
}

}  // namespace detail

inline std::string render_report(const BenchReport& report, ReportFormat format) {
    std::vector<BenchCell> cells = report.cells;
    std::sort(cells.begin(), cells.end(), [](const BenchCell& a, const BenchCell& b) {
        if (a.key.dataset != b.key.dataset) return a.key.dataset < b.key.dataset;
        if (a.key.mode != b.key.mode) return detail::mode_rank(a.key.mode) < detail::mode_rank(b.key.mode);
        return a.key.pair < b.key.pair;
    });
    std::ostringstream os;
    if (format == ReportFormat::Csv) {
        os << "dataset,mode,pair,n,skipped,successes,accuracy_pct,pass_rate_pct,improvement_rate_pct,"
              "mean_accuracy_pct,avg_rounds,rag_usage_pct\r\n";
        for (const auto& c : cells) {
            os << detail::csv_field(c.key.dataset) << ',' << to_string(c.key.mode) << ',' << detail::csv_field(c.key.pair)
               << ',' << c.n << ',' << c.skipped << ',' << c.successes << ',' << detail::shortest(c.accuracy_pct) << ','
               << detail::shortest(c.pass_rate_pct) << ',' << detail::shortest(c.improvement_rate_pct) << ','
               << (c.mean_accuracy_pct ? detail::shortest(*c.mean_accuracy_pct) : std::string{}) << ','
               << detail::shortest(c.avg_rounds) << ',' << detail::shortest(c.rag_usage_pct) << "\r\n";
        }
        return os.str();
    }

    std::map<std::string, std::vector<const BenchCell*>> by_dataset;
    for (const auto& c : cells) by_dataset[c.key.dataset].push_back(&c);
    bool first = true;
    for (const auto& [dataset, group] : by_dataset) {
        if (!first) os << "\n";
        first = false;
        std::set<std::string> pairs;
        std::vector<Mode> modes;
        for (const auto* c : group) {
            pairs.insert(c->key.pair);
            if (std::find(modes.begin(), modes.end(), c->key.mode) == modes.end()) modes.push_back(c->key.mode);
        }
        const bool routing = std::any_of(group.begin(), group.end(), [](const BenchCell* c) { return c->mean_accuracy_pct.has_value(); });
        os << "### " << dataset << " (" << (routing ? "Mean Accuracy %" : "Accuracy %") << ")\n\n";
        os << "| Method |";
        for (const auto& p : pairs) os << ' ' << p << " |";
        os << " Avg. |\n|---|";
        for (std::size_t i = 0; i < pairs.size(); ++i) os << "---:|";
        os << "---:|\n";
        for (Mode m : modes) {
            os << "| " << to_string(m) << " |";
            double sum = 0.0;
            int count = 0;
            for (const auto& p : pairs) {
                auto it = std::find_if(group.begin(), group.end(),
                                       [&](const BenchCell* c) { return c->key.mode == m && c->key.pair == p; });
                if (it == group.end()) {
                    os << " - |";
                    continue;
                }
                const double v = detail::headline(**it);
                sum += v;
                ++count;
                os << ' ' << detail::fixed2(v) << " |";
            }
            os << ' ' << (count ? detail::fixed2(sum / count) : std::string("-")) << " |\n";
        }
        os << "\n| Method | Pair | n | Skipped | Accuracy % | Improvement % | Avg. rounds | RAG usage % |\n"
              "|---|---|---:|---:|---:|---:|---:|---:|\n";
        for (const auto* c : group) {
            os << "| " << to_string(c->key.mode) << " | " << c->key.pair << " | " << c->n << " | " << c->skipped << " | "
               << detail::fixed2(c->accuracy_pct) << " | " << detail::fixed2(c->improvement_rate_pct) << " | "
               << detail::fixed2(c->avg_rounds) << " | " << detail::fixed2(c->rag_usage_pct) << " |\n";
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Stratified sampling

struct StratumFractions {
    double easy = 0.30;
    double medium = 0.50;
    double hard = 0.20;
};

// Largest-remainder apportionment of n across the three strata.
inline std::array<std::size_t, 3> stratum_counts(std::size_t n, const StratumFractions& f = {}) {
    const std::array<double, 3> fr = {f.easy, f.medium, f.hard};
    const double total = fr[0] + fr[1] + fr[2];
    if (!(total > 0.0)) throw ConfigError("stratum fractions must sum to a positive value");
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> rem{};
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < 3; ++i) {
        // Round before flooring so exact products like 0.3 * 50 are not lost to representation error.
        const double quota = static_cast<double>(n) * fr[i] / total;
        const double snapped = std::round(quota * 1e9) / 1e9;
        counts[i] = static_cast<std::size_t>(std::floor(snapped));
        rem[i] = snapped - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    std::array<std::size_t, 3> order = {0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
    for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[order[i % 3]];
    return counts;
}

inline std::vector<TaskInstance> stratified_sample(const std::vector<TaskInstance>& instances, std::size_t n,
                                                   std::uint64_t seed, const StratumFractions& fractions = {}) {
    if (n < 1) throw ConfigError("sample size must be >= 1");
    const auto counts = stratum_counts(n, fractions);
    std::array<std::vector<const TaskInstance*>, 3> strata;
    for (const auto& t : instances) strata[static_cast<std::size_t>(classify_difficulty(t))].push_back(&t);

    std::mt19937_64 rng(seed);
    std::vector<TaskInstance> out;
    out.reserve(n);
    for (std::size_t s = 0; s < 3; ++s) {
        auto& pool = strata[s];
        if (pool.size() < counts[s]) {
            throw DataError("stratum '" + std::string(to_string(static_cast<Difficulty>(s))) + "' has " +
                            std::to_string(pool.size()) + " instances, " + std::to_string(counts[s]) + " requested");
        }
        // Partial Fisher-Yates.
        for (std::size_t i = 0; i < counts[s]; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
            std::swap(pool[i], pool[pick(rng)]);
            out.push_back(*pool[i]);
        }
    }
    return out;
}

}  // namespace entroguide
