#pragma once

// One collaboration session: optional experience retrieval, the adaptive
// guidance loop (generate, score, verify, guide) and success-path storage.

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "entroguide/agent.hpp"
#include "entroguide/checkers.hpp"
#include "entroguide/entropy.hpp"
#include "entroguide/policy.hpp"
#include "entroguide/store.hpp"
#include "entroguide/task.hpp"

namespace entroguide {

enum class Mode { NoGuidance, ChainOfThought, Guided, GuidedRag };

inline constexpr Mode kAllModes[] = {Mode::NoGuidance, Mode::ChainOfThought, Mode::Guided, Mode::GuidedRag};

inline std::string_view to_string(Mode m) {
    switch (m) {
        case Mode::NoGuidance: return "no_guidance";
        case Mode::ChainOfThought: return "cot";
        case Mode::Guided: return "guided";
        case Mode::GuidedRag: return "guided_rag";
    }
    return "no_guidance";
}

inline Mode parse_mode(std::string_view s) {
    if (s == "no_guidance") return Mode::NoGuidance;
    if (s == "cot") return Mode::ChainOfThought;
    if (s == "guided") return Mode::Guided;
    if (s == "guided_rag") return Mode::GuidedRag;
    throw ConfigError("unknown mode '" + std::string(s) + "'");
}

inline bool is_guided(Mode m) { return m == Mode::Guided || m == Mode::GuidedRag; }

// Milliseconds since the Unix epoch.
using Clock = std::function<std::int64_t()>;

inline Clock system_clock() {
    return [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(
                   std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
}

struct SessionConfig {
    Mode mode = Mode::GuidedRag;
    int t_max = 3;
    std::size_t k = 3;
    double s_min = 0.1;
    PolicyConstants policy;
    EntropyConfig entropy;
    GuidanceTemplates templates;
    SandboxConfig sandbox;
    std::uint64_t seed = 0;
    Clock clock = system_clock();

    void validate() const {
        if (t_max < 1) throw ConfigError("t_max must be >= 1");
        if (k < 1) throw ConfigError("k must be >= 1");
        policy.validate();
    }
};

struct RoundRecord {
    int round = 1;
    std::string weak_response;
    EntropyReport entropy;
    ThresholdState thresholds;
    std::optional<GuidanceLevel> level;
    std::optional<GuidanceMessage> guidance;
    Verdict verdict = Verdict::Unknown;
    std::string verdict_rationale;
};

struct SessionTranscript {
    TaskInstance task;
    Mode mode = Mode::NoGuidance;
    nlohmann::json config_summary;
    std::vector<RetrievalHit> retrieval;
    std::vector<RoundRecord> rounds;
    std::string final_answer;
    bool success = false;
    int rounds_used = 0;
    bool rag_used = false;
    std::vector<double> entropy_trace;
    bool aborted = false;
    std::string abort_reason;
    bool check_skipped = false;
    std::optional<double> routing_accuracy_pct;
    std::optional<std::uint64_t> stored_record_id;
    std::int64_t started_at_ms = 0;
    std::int64_t finished_at_ms = 0;

    std::optional<Verdict> first_verdict() const {
        if (rounds.empty()) return std::nullopt;
        return rounds.front().verdict;
    }
};

inline std::string format_number(double v) {
    std::ostringstream os;
    os.precision(15);
    os << v;
    return os.str();
}

inline std::vector<std::string> split_steps(std::string_view text) {
    std::vector<std::string> steps;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        steps.push_back(line.substr(b, e - b + 1));
    }
    return steps;
}

class ContractViolation : public Error {
public:
    using Error::Error;
};

inline ExperienceRecord build_record(const SessionTranscript& t) {
    if (!t.success || t.entropy_trace.empty()) {
        throw ContractViolation("build_record requires a successful transcript");
    }
    ExperienceRecord r;
    r.problem_text = t.task.problem;
    r.solution_steps = split_steps(t.final_answer);
    r.final_answer = t.final_answer;
    if (t.task.kind == TaskKind::Math) {
        if (auto n = extract_math_answer(t.final_answer)) r.final_answer = format_number(*n);
    }
    r.difficulty = classify_difficulty(t.task);
    r.success_entropy = t.entropy_trace.back();
    r.usage_count = 0;
    return r;
}

inline constexpr std::string_view kSolveInstruction = "Solve the problem.";
inline constexpr std::string_view kSelfRetryCue =
    "Review your previous answer step by step, fix any mistakes, and state the final answer again.";
inline constexpr std::string_view kGuidancePreamble = "Guidance from your collaborator:\n\n";

inline nlohmann::json session_config_summary(const SessionConfig& c, const Agent& strong, const Agent& weak) {
    return {
        {"mode", to_string(c.mode)},
        {"t_max", c.t_max},
        {"k", c.k},
        {"s_min", c.s_min},
        {"seed", c.seed},
        {"strong", strong.profile().name},
        {"weak", weak.profile().name},
        {"policy",
         {{"tau1_base", c.policy.tau1_base},
          {"tau2_base", c.policy.tau2_base},
          {"tau1_min", c.policy.tau1_min},
          {"tau2_min", c.policy.tau2_min},
          {"lambda", c.policy.lambda},
          {"a_max", c.policy.a_max}}},
    };
}

// Runs one session. `repo` is required in GuidedRag mode only; agents are
// expected to be session-local.
inline SessionTranscript run_session(const TaskInstance& task, const SessionConfig& config, Agent& strong, Agent& weak,
                                     ExperienceStore* repo = nullptr) {
    config.validate();
    if (config.mode == Mode::GuidedRag && !repo) throw ConfigError("guided_rag mode needs an experience repository");

    SessionTranscript t;
    t.task = task;
    t.mode = config.mode;
    t.config_summary = session_config_summary(config, strong, weak);
    t.started_at_ms = config.clock ? config.clock() : 0;

    std::vector<ExperienceRecord> injected;
    if (config.mode == Mode::GuidedRag && repo) {
        t.retrieval = repo->retrieve_top_k(task.problem, config.k, config.s_min);
        for (const auto& hit : t.retrieval) {
            if (hit.injected) injected.push_back(hit.record);
        }
        t.rag_used = !injected.empty();
    }

    const RoleBinding binding = role_binding(task.kind);
    std::string weak_system = build_role_prompt(binding, Strength::Weak, task, injected, weak.profile().role_template);
    if (config.mode == Mode::ChainOfThought) weak_system = std::string(kChainOfThoughtCue) + "\n\n" + weak_system;
    const std::string strong_system =
        build_role_prompt(binding, Strength::Strong, task, {}, strong.profile().role_template);

    std::vector<ChatTurn> history = {{ChatRole::System, weak_system}, {ChatRole::User, std::string(kSolveInstruction)}};
    const ThresholdState base = ThresholdState::initial(config.policy);
    const int max_rounds = config.mode == Mode::NoGuidance ? 1 : config.t_max;
    const auto& entropy_profile = config.entropy.profile(task.kind);

    try {
        for (int round = 1; round <= max_rounds; ++round) {
            RoundRecord rec;
            rec.round = round;
            rec.weak_response = weak.generate(history, {round, Strength::Weak});
            history.push_back({ChatRole::Assistant, rec.weak_response});

            rec.entropy = understanding_entropy(task.problem, rec.weak_response, task.kind, entropy_profile);
            rec.thresholds = update_thresholds(base, round);

            auto vr = verify(&strong, {round, Strength::Strong}, task, rec.weak_response, config.sandbox);
            rec.verdict = vr.verdict;
            rec.verdict_rationale = vr.rationale;
            t.check_skipped = vr.skipped;
            t.routing_accuracy_pct = vr.routing_accuracy_pct;

            const bool terminal = rec.verdict == Verdict::Correct || round == max_rounds;
            t.entropy_trace.push_back(rec.entropy.h_total);
            t.rounds.push_back(std::move(rec));
            if (terminal) break;

            RoundRecord& cur = t.rounds.back();
            if (is_guided(config.mode)) {
                const GuidanceLevel level = select_level(cur.entropy.h_total, cur.thresholds);
                const std::string request =
                    compose_guidance_request(level, task.problem, cur.weak_response, task.kind, config.templates);
                const std::string reply = strong.generate({{ChatRole::System, strong_system}, {ChatRole::User, request}},
                                                          {round, Strength::Strong});
                cur.level = level;
                cur.guidance = parse_guidance_reply(reply, level);
                history.push_back({ChatRole::User, std::string(kGuidancePreamble) + reply});
            } else if (config.mode == Mode::ChainOfThought) {
                history.push_back({ChatRole::User, std::string(kSelfRetryCue)});
            }
        }
    } catch (const AgentError& e) {
        t.aborted = true;
        t.abort_reason = e.what();
    }

    t.rounds_used = static_cast<int>(t.rounds.size());
    if (!t.rounds.empty()) t.final_answer = t.rounds.back().weak_response;
    t.success = !t.aborted && !t.rounds.empty() && t.rounds.back().verdict == Verdict::Correct;

    if (t.success && config.mode == Mode::GuidedRag && repo) t.stored_record_id = repo->insert(build_record(t));
    t.finished_at_ms = config.clock ? config.clock() : 0;
    return t;
}

// ---------------------------------------------------------------------------
// Transcript serialization

inline nlohmann::json entropy_to_json(const EntropyReport& r) {
    return {{"h_expression", r.h_expression}, {"h_uncertainty", r.h_uncertainty}, {"h_structure", r.h_structure},
            {"h_coherence", r.h_coherence},   {"h_relevance", r.h_relevance},     {"h_total", r.h_total},
            {"understanding_hint", r.understanding_hint}};
}

inline nlohmann::json transcript_to_json(const SessionTranscript& t) {
    nlohmann::json retrieval = nlohmann::json::array();
    for (const auto& h : t.retrieval) {
        retrieval.push_back({{"record_id", h.record.id},
                             {"problem_text", h.record.problem_text},
                             {"similarity", h.similarity},
                             {"injected", h.injected}});
    }
    nlohmann::json rounds = nlohmann::json::array();
    for (const auto& r : t.rounds) {
        nlohmann::json jr = {{"round", r.round},
                             {"weak_response", r.weak_response},
                             {"entropy", entropy_to_json(r.entropy)},
                             {"thresholds", {{"round", r.thresholds.round}, {"tau1", r.thresholds.tau1}, {"tau2", r.thresholds.tau2}}},
                             {"verdict", to_string(r.verdict)},
                             {"verdict_rationale", r.verdict_rationale}};
        jr["level"] = r.level ? nlohmann::json(to_string(*r.level)) : nlohmann::json(nullptr);
        if (r.guidance) {
            nlohmann::json sections = nlohmann::json::array();
            for (const auto& s : r.guidance->sections) sections.push_back({{"tag", to_string(s.tag)}, {"text", s.text}});
            jr["guidance"] = {{"level", to_string(r.guidance->level)}, {"sections", sections}, {"rendered", r.guidance->rendered}};
        } else {
            jr["guidance"] = nullptr;
        }
        rounds.push_back(std::move(jr));
    }
    nlohmann::json j = {
        {"task", task_to_json(t.task)},
        {"mode", to_string(t.mode)},
        {"config", t.config_summary},
        {"retrieval", retrieval},
        {"rounds", rounds},
        {"final_answer", t.final_answer},
        {"success", t.success},
        {"rounds_used", t.rounds_used},
        {"rag_used", t.rag_used},
        {"entropy_trace", t.entropy_trace},
        {"aborted", t.aborted},
        {"abort_reason", t.abort_reason},
        {"check_skipped", t.check_skipped},
        {"started_at_ms", t.started_at_ms},
        {"finished_at_ms", t.finished_at_ms},
    };
    j["routing_accuracy_pct"] = t.routing_accuracy_pct ? nlohmann::json(*t.routing_accuracy_pct) : nlohmann::json(nullptr);
    j["stored_record_id"] = t.stored_record_id ? nlohmann::json(*t.stored_record_id) : nlohmann::json(nullptr);
    return j;
}

inline std::string transcript_filename(const SessionTranscript& t) {
    return t.task.id + "." + std::string(to_string(t.mode)) + ".json";
}

}  // namespace entroguide
