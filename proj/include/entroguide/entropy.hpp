#pragma once

// Understanding entropy of a weak-agent response: five text-derived
// components combined by a task-dependent signed weighted sum.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "entroguide/text.hpp"
#include "entroguide/types.hpp"

namespace entroguide {

struct LexiconEntry {
    TextPattern pattern;
    double weight = 0.0;
};

struct UncertaintyLexicon {
    std::vector<LexiconEntry> entries;
    TaskKind task_kind = TaskKind::Math;
    double cap = 3.0;

    void add(std::string_view pattern, double weight) {
        if (pattern.empty()) throw ConfigError("lexicon pattern must be non-empty");
        if (!(weight >= 0.0)) throw ConfigError("lexicon weight must be >= 0");
        entries.push_back({TextPattern(pattern), weight});
    }
};

struct WeightMatrix {
    double expression = 1.0;
    double uncertainty = 1.0;
    double structure = 1.0;
    double coherence = 1.0;
    double relevance = 1.0;
    TaskKind task_kind = TaskKind::Math;

    void validate() const {
        for (double w : {expression, uncertainty, structure, coherence, relevance}) {
            if (!(w >= 0.0)) throw ConfigError("entropy weights must be >= 0");
        }
    }
};

struct EntropyReport {
    double h_expression = 0.0;
    double h_uncertainty = 0.0;
    double h_structure = 0.0;
    double h_coherence = 0.0;
    double h_relevance = 0.0;
    double h_total = 0.0;
    double understanding_hint = 1.0;
};

namespace entropy_constants {
inline constexpr double kStructureLengthScale = 40.0;
inline constexpr double kStructureMarkerCredit = 0.3;
inline constexpr double kStructureMarkerCap = 1.5;
inline constexpr double kCoherenceCredit = 0.25;
inline constexpr double kCoherenceCap = 1.5;
inline constexpr double kRelevanceScale = 1.5;
inline constexpr double kRelevanceMinRatio = 0.2;
inline constexpr double kRelevanceMaxRatio = 5.0;
inline constexpr double kRelevanceLengthPenalty = 0.5;
inline constexpr double kDefaultLexiconCap = 3.0;
}  // namespace entropy_constants

// ---------------------------------------------------------------------------
// Shipped defaults (mirrored by data/default_config.json).

inline const std::vector<std::pair<std::string, double>>& default_common_lexicon() {
    static const std::vector<std::pair<std::string, double>> kEntries = {
        {"maybe", 0.5},  {"possibly", 0.5}, {"might", 0.4}, {"i think", 0.3}, {"not sure", 0.8},
        {"unclear", 0.6}, {"guess", 0.7},   {"um", 0.6},    {"uh", 0.6},      {"?", 0.5},
    };
    return kEntries;
}

inline std::vector<std::pair<std::string, double>> default_task_lexicon(TaskKind kind) {
    switch (kind) {
        case TaskKind::Math: return {};
        case TaskKind::Code: return {{"todo", 0.6}, {"not implemented", 0.8}};
        case TaskKind::Routing: return {{"infeasible", 0.6}, {"over capacity", 0.6}};
    }
    return {};
}

inline UncertaintyLexicon default_lexicon(TaskKind kind) {
    UncertaintyLexicon lex;
    lex.task_kind = kind;
    lex.cap = entropy_constants::kDefaultLexiconCap;
    for (const auto& [p, w] : default_common_lexicon()) lex.add(p, w);
    for (const auto& [p, w] : default_task_lexicon(kind)) lex.add(p, w);
    return lex;
}

inline std::vector<std::string> default_structure_markers(TaskKind kind) {
    switch (kind) {
        case TaskKind::Math: return {"first", "then", "because", "therefore", "step", "thus", "finally"};
        case TaskKind::Code: return {"def", "return", "if", "for", "while", "function", "class", "```"};
        case TaskKind::Routing: return {"route", "vehicle", "capacity", "depot", "then", "next"};
    }
    return {};
}

inline WeightMatrix default_weights(TaskKind kind) {
    WeightMatrix w;
    w.task_kind = kind;
    return w;
}

// Everything needed to score responses for one task kind.
struct TaskEntropyProfile {
    UncertaintyLexicon lexicon;
    WeightMatrix weights;
    std::vector<TextPattern> structure_markers;
};

inline TaskEntropyProfile default_entropy_profile(TaskKind kind) {
    TaskEntropyProfile p;
    p.lexicon = default_lexicon(kind);
    p.weights = default_weights(kind);
    for (const auto& m : default_structure_markers(kind)) p.structure_markers.emplace_back(m);
    return p;
}

struct EntropyConfig {
    std::map<TaskKind, TaskEntropyProfile> profiles = {
        {TaskKind::Math, default_entropy_profile(TaskKind::Math)},
        {TaskKind::Code, default_entropy_profile(TaskKind::Code)},
        {TaskKind::Routing, default_entropy_profile(TaskKind::Routing)},
    };

    const TaskEntropyProfile& profile(TaskKind kind) const { return profiles.at(kind); }
    TaskEntropyProfile& profile(TaskKind kind) { return profiles.at(kind); }
};

// ---------------------------------------------------------------------------
// Components.

inline double expression_entropy(const TokenDistribution& dist) {
    if (dist.total <= 1) return 0.0;
    const double total = static_cast<double>(dist.total);
    double h = 0.0;
    for (const auto& [token, count] : dist.counts) {
        const double p = static_cast<double>(count) / total;
        h -= p * std::log2(p);
    }
    return h < 0.0 ? 0.0 : h;
}

inline double uncertainty_entropy(std::string_view response, const UncertaintyLexicon& lexicon) {
    const auto tokens = tokenize_words(response);
    const auto lowered = to_lower(response);
    double sum = 0.0;
    for (const auto& entry : lexicon.entries) {
        sum += entry.weight * static_cast<double>(entry.pattern.count_in(tokens, lowered));
    }
    return std::min(sum, lexicon.cap);
}

inline std::size_t count_distinct_markers(std::string_view response, const std::vector<TextPattern>& markers) {
    const auto tokens = tokenize_words(response);
    const auto lowered = to_lower(response);
    std::size_t n = 0;
    for (const auto& m : markers) {
        if (m.count_in(tokens, lowered) > 0) ++n;
    }
    return n;
}

inline double structure_entropy(std::string_view response, const std::vector<TextPattern>& markers) {
    using namespace entropy_constants;
    const auto token_count = static_cast<double>(tokenize_words(response).size());
    const double length_term = std::log2(1.0 + token_count / kStructureLengthScale);
    const double marker_term =
        std::min(kStructureMarkerCredit * static_cast<double>(count_distinct_markers(response, markers)),
                 kStructureMarkerCap);
    return std::max(0.0, length_term - marker_term);
}

inline double structure_entropy(std::string_view response, TaskKind task) {
    return structure_entropy(response, default_entropy_profile(task).structure_markers);
}

namespace detail {

struct CoherencePattern {
    std::string_view name;
    bool (*matches)(const std::vector<std::string>& tokens, const std::string& lowered);
};

inline bool has_token(const std::vector<std::string>& tokens, std::initializer_list<std::string_view> words) {
    return std::any_of(tokens.begin(), tokens.end(), [&](const std::string& t) {
        return std::find(words.begin(), words.end(), t) != words.end();
    });
}

inline bool search(const std::string& lowered, const std::regex& re) {
    return std::regex_search(lowered, re);
}

inline const std::vector<CoherencePattern>& coherence_patterns(TaskKind kind) {
    static const std::vector<CoherencePattern> kMath = {
        {"equality_chain",
         [](const std::vector<std::string>&, const std::string& s) {
             static const std::regex re(R"([0-9]\s*=\s*-?[0-9])");
             return search(s, re);
         }},
        {"therefore", [](const std::vector<std::string>& t, const std::string&) { return has_token(t, {"therefore"}); }},
        {"so", [](const std::vector<std::string>& t, const std::string&) { return has_token(t, {"so"}); }},
        {"hence", [](const std::vector<std::string>& t, const std::string&) { return has_token(t, {"hence"}); }},
        {"substitute",
         [](const std::vector<std::string>& t, const std::string&) {
             return std::any_of(t.begin(), t.end(), [](const std::string& w) { return w.rfind("substitut", 0) == 0; });
         }},
    };
    static const std::vector<CoherencePattern> kCode = {
        {"function_definition",
         [](const std::vector<std::string>& t, const std::string&) {
             return has_token(t, {"def", "function", "fn", "lambda"});
         }},
        {"control_flow",
         [](const std::vector<std::string>& t, const std::string&) {
             return has_token(t, {"if", "elif", "else", "for", "while", "switch", "case", "try"});
         }},
        {"return_statement",
         [](const std::vector<std::string>& t, const std::string&) { return has_token(t, {"return", "yield"}); }},
    };
    static const std::vector<CoherencePattern> kRouting = {
        {"ordered_route",
         [](const std::vector<std::string>&, const std::string& s) {
             static const std::regex re(R"((->|→)|\broute\s*[0-9]+\s*:|\b[0-9]+\s*,\s*[0-9]+\s*,\s*[0-9]+\b)");
             return search(s, re);
         }},
        {"capacity_check",
         [](const std::vector<std::string>&, const std::string& s) {
             static const std::regex re(R"((load|demand)[^.\n]{0,60}(capacity|<=|≤)|within\s+(the\s+)?capacity)");
             return search(s, re);
         }},
        {"distance_total",
         [](const std::vector<std::string>&, const std::string& s) {
             static const std::regex re(R"(total\s+(distance|length|cost)|distance\s+total)");
             return search(s, re);
         }},
    };
    switch (kind) {
        case TaskKind::Math: return kMath;
        case TaskKind::Code: return kCode;
        case TaskKind::Routing: return kRouting;
    }
    return kMath;
}

}  // namespace detail

// Names of the coherence patterns the response matches, in table order.
inline std::vector<std::string> matched_coherence_patterns(std::string_view response, TaskKind task) {
    const auto tokens = tokenize_words(response);
    const auto lowered = to_lower(response);
    std::vector<std::string> out;
    for (const auto& p : detail::coherence_patterns(task)) {
        if (p.matches(tokens, lowered)) out.emplace_back(p.name);
    }
    return out;
}

inline double coherence_score(std::size_t distinct_matches) {
    using namespace entropy_constants;
    return std::min(kCoherenceCredit * static_cast<double>(distinct_matches), kCoherenceCap);
}

inline double coherence_entropy(std::string_view response, TaskKind task) {
    return coherence_score(matched_coherence_patterns(response, task).size());
}

// Jaccard overlap of the vocabularies scaled by a length-fit factor.
inline double relevance_entropy(std::string_view response, std::string_view problem, TaskKind /*task*/) {
    using namespace entropy_constants;
    const auto r = tokenize(response);
    const auto p = tokenize(problem);
    std::size_t inter = 0;
    for (const auto& [tok, _] : r.counts) {
        if (p.counts.count(tok)) ++inter;
    }
    const std::size_t uni = r.counts.size() + p.counts.size() - inter;
    const double overlap = uni == 0 ? 0.0 : kRelevanceScale * static_cast<double>(inter) / static_cast<double>(uni);
    const double rl = static_cast<double>(r.total);
    const double pl = static_cast<double>(p.total);
    const bool fits = rl >= kRelevanceMinRatio * pl && rl <= kRelevanceMaxRatio * pl;
    return overlap * (fits ? 1.0 : kRelevanceLengthPenalty);
}

inline double understanding_hint(double h_total) { return 1.0 / (1.0 + h_total); }

// Signed weighted aggregate, clamped at zero.
inline double aggregate_entropy(const EntropyReport& c, const WeightMatrix& w) {
    const double sum = w.expression * c.h_expression + w.uncertainty * c.h_uncertainty +
                       w.structure * c.h_structure - w.coherence * c.h_coherence - w.relevance * c.h_relevance;
    return std::max(0.0, sum);
}

inline EntropyReport finish_report(EntropyReport report, const WeightMatrix& weights) {
    report.h_total = aggregate_entropy(report, weights);
    report.understanding_hint = understanding_hint(report.h_total);
    return report;
}

inline EntropyReport understanding_entropy(std::string_view problem, std::string_view response, TaskKind task,
                                           const TaskEntropyProfile& profile) {
    if (profile.weights.task_kind != task || profile.lexicon.task_kind != task) {
        throw ConfigError("entropy profile task kind does not match the scored task");
    }
    EntropyReport r;
    r.h_expression = expression_entropy(tokenize(response));
    r.h_uncertainty = uncertainty_entropy(response, profile.lexicon);
    r.h_structure = structure_entropy(response, profile.structure_markers);
    r.h_coherence = coherence_entropy(response, task);
    r.h_relevance = relevance_entropy(response, problem, task);
    return finish_report(r, profile.weights);
}

inline EntropyReport understanding_entropy(std::string_view problem, std::string_view response, TaskKind task,
                                           const EntropyConfig& config = {}) {
    return understanding_entropy(problem, response, task, config.profile(task));
}

}  // namespace entroguide
