#pragma once

// Guidance level selection under the round-dependent threshold schedule,
// and composition/parsing of the strong agent's guidance exchange.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "entroguide/text.hpp"
#include "entroguide/types.hpp"

namespace entroguide {

enum class GuidanceLevel { Light = 0, Moderate = 1, Intensive = 2 };

inline std::string_view to_string(GuidanceLevel level) {
    switch (level) {
        case GuidanceLevel::Light: return "light";
        case GuidanceLevel::Moderate: return "moderate";
        case GuidanceLevel::Intensive: return "intensive";
    }
    return "light";
}

inline GuidanceLevel parse_guidance_level(std::string_view s) {
    if (s == "light") return GuidanceLevel::Light;
    if (s == "moderate") return GuidanceLevel::Moderate;
    if (s == "intensive") return GuidanceLevel::Intensive;
    throw DataError("unknown guidance level '" + std::string(s) + "'");
}

struct PolicyConstants {
    double tau1_base = 2.0;
    double tau2_base = 3.5;
    double tau1_min = 1.0;
    double tau2_min = 2.0;
    double lambda = 0.2;
    double a_max = 0.6;

    void validate() const {
        if (!(lambda >= 0.0) || !(a_max >= 0.0)) throw ConfigError("policy.lambda and policy.a_max must be >= 0");
        if (!(tau1_min <= tau1_base) || !(tau2_min <= tau2_base)) {
            throw ConfigError("policy minimum thresholds must not exceed their bases");
        }
        if (!(tau1_base < tau2_base) || !(tau1_min < tau2_min)) {
            throw ConfigError("policy requires tau1 < tau2 for both bases and minimums");
        }
    }
};

class InvalidRound : public Error {
public:
    InvalidRound() : Error("round index must be >= 1") {}
};

struct ThresholdState {
    PolicyConstants constants;
    int round = 1;
    double tau1 = 2.0;
    double tau2 = 3.5;

    static ThresholdState initial(const PolicyConstants& c = {}) {
        return ThresholdState{c, 1, c.tau1_base, c.tau2_base};
    }
};

// Saturating threshold reduction after `round - 1` completed rounds.
inline double adjustment(int round, double lambda, double a_max) {
    if (round < 1) throw InvalidRound();
    return std::min(lambda * static_cast<double>(round - 1), a_max);
}

inline ThresholdState update_thresholds(const ThresholdState& state, int round) {
    const auto& c = state.constants;
    const double a = adjustment(round, c.lambda, c.a_max);
    ThresholdState next = state;
    next.round = round;
    next.tau1 = std::max(c.tau1_base - a, c.tau1_min);
    next.tau2 = std::max(c.tau2_base - a, c.tau2_min);
    return next;
}

inline GuidanceLevel select_level(double h_total, const ThresholdState& state) {
    if (h_total <= state.tau1) return GuidanceLevel::Light;
    if (h_total <= state.tau2) return GuidanceLevel::Moderate;
    return GuidanceLevel::Intensive;
}

// ---------------------------------------------------------------------------
// Guidance sections.

enum class SectionTag {
    Verification,
    Correction,
    Encouragement,
    Diagnosis,
    Framework,
    Suggestion,
    Analysis,
    Reconstruction,
    StepGuidance,
};

inline std::string_view to_string(SectionTag tag) {
    switch (tag) {
        case SectionTag::Verification: return "verification";
        case SectionTag::Correction: return "correction";
        case SectionTag::Encouragement: return "encouragement";
        case SectionTag::Diagnosis: return "diagnosis";
        case SectionTag::Framework: return "framework";
        case SectionTag::Suggestion: return "suggestion";
        case SectionTag::Analysis: return "analysis";
        case SectionTag::Reconstruction: return "reconstruction";
        case SectionTag::StepGuidance: return "step_guidance";
    }
    return "verification";
}

// Markdown header the strong agent is asked to put above each section.
inline std::string_view section_header(SectionTag tag) {
    switch (tag) {
        case SectionTag::Verification: return "## Verification";
        case SectionTag::Correction: return "## Correction";
        case SectionTag::Encouragement: return "## Encouragement";
        case SectionTag::Diagnosis: return "## Diagnosis";
        case SectionTag::Framework: return "## Framework";
        case SectionTag::Suggestion: return "## Suggestions";
        case SectionTag::Analysis: return "## Error Analysis";
        case SectionTag::Reconstruction: return "## Reconstruction";
        case SectionTag::StepGuidance: return "## Step Guidance";
    }
    return "";
}

inline std::array<SectionTag, 3> level_sections(GuidanceLevel level) {
    switch (level) {
        case GuidanceLevel::Light:
            return {SectionTag::Verification, SectionTag::Correction, SectionTag::Encouragement};
        case GuidanceLevel::Moderate:
            return {SectionTag::Diagnosis, SectionTag::Framework, SectionTag::Suggestion};
        case GuidanceLevel::Intensive:
            return {SectionTag::Analysis, SectionTag::Reconstruction, SectionTag::StepGuidance};
    }
    return {};
}

struct GuidanceSection {
    SectionTag tag;
    std::string text;
};

struct GuidanceMessage {
    GuidanceLevel level = GuidanceLevel::Light;
    std::vector<GuidanceSection> sections;
    std::string rendered;
};

// ---------------------------------------------------------------------------
// Request templates. Placeholders: {problem}, {response}, {task}.

inline std::string_view default_template(GuidanceLevel level) {
    switch (level) {
        case GuidanceLevel::Light:
            return R"(You are guiding a less capable agent on a {task} task. Its answer looks mostly sound.
Give light guidance only: verify the answer, point out at most one minimal correction, and encourage it to finish on its own. Do not solve the problem for it.

Problem:
{problem}

Agent response:
{response}

Reply using exactly these sections:
## Verification
(check whether the reasoning and final answer hold)
## Correction
(the smallest fix needed, or "none")
## Encouragement
(one short sentence)
)";
        case GuidanceLevel::Moderate:
            return R"(You are guiding a less capable agent on a {task} task. It understands part of the problem but is uncertain.
Give conceptual guidance: diagnose the error, outline a solution framework suited to {task} tasks, and suggest what to try next. Do not give the full solution; the agent must carry out the work.

Problem:
{problem}

Agent response:
{response}

Reply using exactly these sections:
## Diagnosis
(what is wrong or missing in the response)
## Framework
(the general approach for this kind of problem)
## Suggestions
(concrete next actions for the agent)
)";
        case GuidanceLevel::Intensive:
            return R"(You are guiding a less capable agent on a {task} task. It is confused and needs step-by-step help.
Analyze its errors, then reconstruct the problem by decomposing it into small ordered sub-steps. For each sub-step give explicit guidance and a concrete example so the agent can follow along.

Problem:
{problem}

Agent response:
{response}

Reply using exactly these sections:
## Error Analysis
(what the agent misunderstood)
## Reconstruction
(the problem decomposed into numbered sub-steps)
## Step Guidance
(guidance for each sub-step, with a concrete example)
)";
    }
    return "";
}

// Single-pass placeholder substitution, so substituted text is never rescanned.
inline std::string render_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            auto close = tmpl.find('}', i);
            if (close != std::string_view::npos) {
                auto it = values.find(std::string(tmpl.substr(i + 1, close - i - 1)));
                if (it != values.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

class GuidanceTemplates {
public:
    GuidanceTemplates() {
        for (auto level : {GuidanceLevel::Light, GuidanceLevel::Moderate, GuidanceLevel::Intensive}) {
            templates_[level] = std::string(default_template(level));
        }
    }

    // Loads light.txt / moderate.txt / intensive.txt; missing files keep the defaults.
    static GuidanceTemplates from_directory(const std::filesystem::path& dir) {
        GuidanceTemplates t;
        if (!std::filesystem::is_directory(dir)) throw ConfigError("template directory not found: " + dir.string());
        for (auto level : {GuidanceLevel::Light, GuidanceLevel::Moderate, GuidanceLevel::Intensive}) {
            auto path = dir / (std::string(to_string(level)) + ".txt");
            std::ifstream in(path);
            if (!in) continue;
            std::stringstream ss;
            ss << in.rdbuf();
            t.templates_[level] = ss.str();
        }
        return t;
    }

    const std::string& get(GuidanceLevel level) const { return templates_.at(level); }
    void set(GuidanceLevel level, std::string text) { templates_[level] = std::move(text); }

private:
    std::map<GuidanceLevel, std::string> templates_;
};

inline std::string compose_guidance_request(GuidanceLevel level, std::string_view problem, std::string_view response,
                                            TaskKind task, const GuidanceTemplates& templates = {}) {
    return render_template(templates.get(level), {{"problem", std::string(problem)},
                                                  {"response", std::string(response)},
                                                  {"task", std::string(to_string(task))}});
}

namespace detail {

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// Matches a header line case-insensitively, ignoring surrounding whitespace
// and any number of leading '#'.
inline bool is_header_line(std::string_view line, SectionTag tag) {
    auto norm = [](std::string_view s) {
        std::string t = to_lower(trim(s));
        auto pos = t.find_first_not_of('#');
        return pos == std::string::npos ? std::string{} : trim(std::string_view(t).substr(pos));
    };
    auto line_norm = norm(line);
    if (line.find('#') == std::string_view::npos) return false;
    if (!line_norm.empty() && line_norm.back() == ':') line_norm.pop_back();
    return line_norm == norm(section_header(tag));
}

}  // namespace detail

// Splits the reply on the level's headers. Headerless replies are stored
// whole under the level's first section; when at least one header is found,
// every section of the level is present (missing ones empty).
inline GuidanceMessage parse_guidance_reply(std::string_view raw, GuidanceLevel level) {
    GuidanceMessage msg;
    msg.level = level;
    msg.rendered = std::string(raw);
    const auto tags = level_sections(level);

    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= raw.size()) {
        auto nl = raw.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.push_back(raw.substr(start));
            break;
        }
        lines.push_back(raw.substr(start, nl - start));
        start = nl + 1;
    }

    std::map<SectionTag, std::string> bodies;
    std::string preamble;
    const SectionTag* current = nullptr;
    bool any_header = false;
    for (auto line : lines) {
        const SectionTag* hit = nullptr;
        for (const auto& tag : tags) {
            if (detail::is_header_line(line, tag)) hit = &tag;
        }
        if (hit) {
            any_header = true;
            current = hit;
            bodies.try_emplace(*hit);
            continue;
        }
        std::string& target = current ? bodies[*current] : preamble;
        target.append(line);
        target.push_back('\n');
    }

    if (!any_header) {
        msg.sections.push_back({tags[0], std::string(raw)});
        return msg;
    }
    for (const auto& tag : tags) {
        std::string body = detail::trim(bodies[tag]);
        if (tag == tags[0] && !detail::trim(preamble).empty()) {
            body = detail::trim(preamble) + (body.empty() ? "" : "\n" + body);
        }
        msg.sections.push_back({tag, std::move(body)});
    }
    return msg;
}

}  // namespace entroguide
