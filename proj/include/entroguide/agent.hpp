#pragma once

// Agent abstraction shared by remote chat-completion backends and scripted
// replay agents, plus role prompts and answer verification.

#include <chrono>
#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

#include "entroguide/checkers.hpp"
#include "entroguide/routing.hpp"
#include "entroguide/store.hpp"
#include "entroguide/task.hpp"
#include "entroguide/types.hpp"

namespace entroguide {

class AgentError : public Error {
public:
    using Error::Error;
};

// Transport failed on every attempt.
class BackendUnavailable : public AgentError {
public:
    using AgentError::AgentError;
};

class RemoteError : public AgentError {
public:
    RemoteError(int status, std::string body_excerpt)
        : AgentError("remote returned HTTP " + std::to_string(status) + ": " + body_excerpt),
          status_(status),
          excerpt_(std::move(body_excerpt)) {}
    int status() const { return status_; }
    const std::string& body_excerpt() const { return excerpt_; }

private:
    int status_;
    std::string excerpt_;
};

class ScriptError : public AgentError {
public:
    using AgentError::AgentError;
};

enum class Strength { Strong, Weak };
enum class ChatRole { System, User, Assistant };

inline std::string_view to_string(Strength s) { return s == Strength::Strong ? "strong" : "weak"; }

inline Strength parse_strength(std::string_view s) {
    if (s == "strong") return Strength::Strong;
    if (s == "weak") return Strength::Weak;
    throw ConfigError("unknown agent role '" + std::string(s) + "'");
}

inline std::string_view to_string(ChatRole r) {
    switch (r) {
        case ChatRole::System: return "system";
        case ChatRole::User: return "user";
        case ChatRole::Assistant: return "assistant";
    }
    return "user";
}

inline ChatRole parse_chat_role(std::string_view s) {
    if (s == "system") return ChatRole::System;
    if (s == "user") return ChatRole::User;
    if (s == "assistant") return ChatRole::Assistant;
    throw DataError("unknown chat role '" + std::string(s) + "'");
}

struct ChatTurn {
    ChatRole role = ChatRole::User;
    std::string content;

    bool operator==(const ChatTurn&) const = default;
};

struct RemoteEndpoint {
    std::string base_url;
    std::string model;
    std::string auth_env = "ENTROGUIDE_API_KEY";
};

struct ScriptedSource {
    std::string script_path;
};

struct AgentProfile {
    std::string name;
    Strength strength = Strength::Weak;
    std::variant<RemoteEndpoint, ScriptedSource> backend = ScriptedSource{};
    std::string role_template;  // optional override of the built-in role prompt
    double temperature = 0.0;
    int max_reply_tokens = 1024;
    std::chrono::milliseconds timeout{60'000};
    int retries = 2;

    bool is_remote() const { return std::holds_alternative<RemoteEndpoint>(backend); }

    void validate() const {
        if (name.empty()) throw ConfigError("agent profile needs a name");
        if (auto* r = std::get_if<RemoteEndpoint>(&backend)) {
            if (r->base_url.empty() || r->model.empty()) {
                throw ConfigError("remote profile '" + name + "' needs base_url and model");
            }
        }
        if (temperature < 0.0) throw ConfigError("profile '" + name + "': temperature must be >= 0");
        if (max_reply_tokens < 1) throw ConfigError("profile '" + name + "': max_reply_tokens must be >= 1");
        if (retries < 0) throw ConfigError("profile '" + name + "': retries must be >= 0");
    }
};

// Which session round and side a generate call belongs to.
struct CallContext {
    int round = 1;
    Strength side = Strength::Weak;
};

class Agent {
public:
    virtual ~Agent() = default;

    std::string generate(const std::vector<ChatTurn>& history, const CallContext& ctx) {
        if (history.empty() || history.front().role != ChatRole::System) {
            throw Error("agent history must start with the system role prompt");
        }
        return do_generate(history, ctx);
    }

    virtual const AgentProfile& profile() const = 0;

protected:
    virtual std::string do_generate(const std::vector<ChatTurn>& history, const CallContext& ctx) = 0;
};

// ---------------------------------------------------------------------------
// Scripted replay

struct ScriptEntry {
    int round = 1;
    Strength role = Strength::Weak;
    std::string reply;
    std::optional<std::string> task_id;  // unscoped entries apply to every task
};

inline std::vector<ScriptEntry> load_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open script " + path);
    std::vector<ScriptEntry> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = nlohmann::json::parse(line);
            ScriptEntry e;
            e.round = j.at("round").get<int>();
            e.role = parse_strength(j.at("role").get<std::string>());
            e.reply = j.at("reply").get<std::string>();
            if (j.contains("task_id")) e.task_id = j["task_id"].get<std::string>();
            out.push_back(std::move(e));
        } catch (const std::exception& ex) {
            throw ConfigError(path + ":" + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return out;
}

// Replies are keyed by (round, role) and consumed in file order.
class ScriptedAgent : public Agent {
public:
    ScriptedAgent(AgentProfile profile, const std::vector<ScriptEntry>& entries,
                  const std::optional<std::string>& task_id = std::nullopt)
        : profile_(std::move(profile)) {
        for (const auto& e : entries) {
            if (e.task_id && (!task_id || *e.task_id != *task_id)) continue;
            queues_[{e.round, e.role}].push_back(e.reply);
        }
    }

    // Reply i answers round i + 1 for the profile's side.
    static ScriptedAgent from_replies(AgentProfile profile, const std::vector<std::string>& replies) {
        std::vector<ScriptEntry> entries;
        for (std::size_t i = 0; i < replies.size(); ++i) {
            entries.push_back({static_cast<int>(i) + 1, profile.strength, replies[i], std::nullopt});
        }
        return ScriptedAgent(std::move(profile), entries);
    }

    const AgentProfile& profile() const override { return profile_; }

protected:
    std::string do_generate(const std::vector<ChatTurn>&, const CallContext& ctx) override {
        auto it = queues_.find({ctx.round, ctx.side});
        if (it == queues_.end() || it->second.empty()) {
            throw ScriptError("script for '" + profile_.name + "' exhausted at round " + std::to_string(ctx.round) +
                              " (" + std::string(to_string(ctx.side)) + ")");
        }
        std::string reply = std::move(it->second.front());
        it->second.pop_front();
        return reply;
    }

private:
    AgentProfile profile_;
    std::map<std::pair<int, Strength>, std::deque<std::string>> queues_;
};

// ---------------------------------------------------------------------------
// Role prompts

enum class Strategy { FrameworkSolver, FrameworkProviderImplementer, ProposerValidator };

inline std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::FrameworkSolver: return "framework_solver";
        case Strategy::FrameworkProviderImplementer: return "framework_provider_implementer";
        case Strategy::ProposerValidator: return "proposer_validator";
    }
    return "framework_solver";
}

struct RoleBinding {
    Strategy strategy;
    std::string strong_role;
    std::string weak_role;
};

inline RoleBinding role_binding(TaskKind kind) {
    switch (kind) {
        case TaskKind::Math:
            return {Strategy::FrameworkSolver,
                    "You are the Framework Agent in a framework-solver team. Produce a structured reasoning "
                    "outline for the problem: the quantities involved, the relations between them and the order "
                    "of computations. Guide the solver; leave the arithmetic to it unless asked otherwise.",
                    "You are the Solver Agent in a framework-solver team. Fill in every logical step of the "
                    "reasoning and carry out the computations carefully. End with a line of the form "
                    "\"Answer: <number>\"."};
        case TaskKind::Code:
            return {Strategy::FrameworkProviderImplementer,
                    "You are the Framework Provider in a provider-implementer team. Describe the high-level "
                    "program structure and give annotated pseudocode. Do not write the final implementation.",
                    "You are the Implementer in a provider-implementer team. Write a complete, working Python "
                    "implementation and debug it. Put the final code in a single ```python fenced block."};
        case TaskKind::Routing:
            return {Strategy::ProposerValidator,
                    "You are the Validator Agent in a proposer-validator team. Check candidate routes against "
                    "the task constraints (every customer exactly once, vehicle capacity, routes start and end "
                    "at the depot) and give feedback that improves feasibility and total distance.",
                    "You are the Proposer Agent in a proposer-validator team. Propose a complete candidate routing "
                    "solution, or refine the previous candidate using the feedback you receive. Write one line per "
                    "route, e.g. \"Route 1: depot -> c2 -> c1 -> depot\"."};
    }
    return {};
}

inline constexpr std::string_view kChainOfThoughtCue =
    "Let's think step by step. Work through the problem one step at a time before giving the final answer.";

inline std::string build_role_prompt(const RoleBinding& binding, Strength side, const TaskInstance& task,
                                     const std::vector<ExperienceRecord>& experiences = {},
                                     std::string_view role_override = {}) {
    std::ostringstream os;
    os << (role_override.empty() ? (side == Strength::Strong ? binding.strong_role : binding.weak_role)
                                 : std::string(role_override))
       << "\n\nTask type: " << to_string(task.kind) << "\nProblem:\n" << task.problem << "\n";
    if (side == Strength::Weak && !experiences.empty()) {
        os << "\nSolved similar problems you can learn from:\n";
        for (std::size_t i = 0; i < experiences.size(); ++i) {
            const auto& e = experiences[i];
            os << "\n### Example " << i + 1 << "\nProblem: " << e.problem_text << "\nSteps:\n";
            for (const auto& step : e.solution_steps) os << "- " << step << "\n";
            os << "Answer: " << e.final_answer << "\n";
        }
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Verification

enum class Verdict { Correct, Incorrect, Unknown };

inline std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Correct: return "correct";
        case Verdict::Incorrect: return "incorrect";
        case Verdict::Unknown: return "unknown";
    }
    return "unknown";
}

inline Verdict parse_verdict(std::string_view s) {
    if (s == "correct") return Verdict::Correct;
    if (s == "incorrect") return Verdict::Incorrect;
    if (s == "unknown") return Verdict::Unknown;
    throw DataError("unknown verdict '" + std::string(s) + "'");
}

struct VerifyResult {
    Verdict verdict = Verdict::Unknown;
    std::string rationale;
    bool skipped = false;                        // code check without a sandbox
    std::optional<double> routing_accuracy_pct;  // routing tasks only
};

// Leading yes/no token decides; anything else is unknown.
inline Verdict parse_yes_no(std::string_view reply) {
    const auto tokens = tokenize_words(reply);
    if (tokens.empty()) return Verdict::Unknown;
    if (tokens.front() == "yes" || tokens.front() == "correct") return Verdict::Correct;
    if (tokens.front() == "no" || tokens.front() == "incorrect") return Verdict::Incorrect;
    return Verdict::Unknown;
}

inline std::string verification_prompt(const TaskInstance& task, std::string_view response) {
    std::ostringstream os;
    os << "Decide whether the following response correctly solves the " << to_string(task.kind)
       << " problem. Start your reply with \"Yes\" or \"No\", then give a one-sentence rationale.\n\nProblem:\n"
       << task.problem << "\n\nResponse:\n" << response << "\n";
    return os.str();
}

// Deterministic checkers win whenever the task carries ground truth; the
// strong agent is consulted only for label-free tasks.
inline VerifyResult verify(Agent* strong, const CallContext& ctx, const TaskInstance& task, std::string_view response,
                           const SandboxConfig& sandbox = {}) {
    VerifyResult out;
    if (task.reference) {
        std::visit(
            [&](const auto& ref) {
                using R = std::decay_t<decltype(ref)>;
                if constexpr (std::is_same_v<R, MathReference>) {
                    const bool ok = check_math(response, ref.answer);
                    out.verdict = ok ? Verdict::Correct : Verdict::Incorrect;
                    auto got = extract_math_answer(response);
                    std::ostringstream os;
                    os << "math checker: expected " << ref.answer << ", got "
                       << (got ? std::to_string(*got) : std::string("no number"));
                    out.rationale = os.str();
                } else if constexpr (std::is_same_v<R, CodeReference>) {
                    auto check = check_code(response, ref, sandbox);
                    out.skipped = check.verdict == CodeVerdict::Skipped;
                    out.verdict = check.verdict == CodeVerdict::Pass   ? Verdict::Correct
                                  : check.verdict == CodeVerdict::Fail ? Verdict::Incorrect
                                                                       : Verdict::Unknown;
                    out.rationale = "code checker: " + std::string(to_string(check.verdict)) +
                                    (check.note.empty() ? "" : " (" + check.note + ")");
                } else {
                    auto routes = parse_route(response);
                    auto ev = evaluate_route(routes, ref.instance);
                    out.verdict = ev.feasible ? Verdict::Correct : Verdict::Incorrect;
                    out.routing_accuracy_pct = ev.accuracy_pct;
                    std::ostringstream os;
                    os << "routing checker: " << (ev.feasible ? "feasible" : "infeasible") << ", distance "
                       << ev.distance << ", accuracy " << ev.accuracy_pct;
                    if (!ev.diagnostic.empty()) os << " (" << ev.diagnostic << ")";
                    out.rationale = os.str();
                }
            },
            *task.reference);
        return out;
    }
    if (!strong) {
        out.rationale = "no ground truth and no strong agent";
        return out;
    }
    try {
        const std::vector<ChatTurn> history = {
            {ChatRole::System, build_role_prompt(role_binding(task.kind), Strength::Strong, task, {},
                                                 strong->profile().role_template)},
            {ChatRole::User, verification_prompt(task, response)},
        };
        const std::string reply = strong->generate(history, {ctx.round, Strength::Strong});
        out.verdict = parse_yes_no(reply);
        out.rationale = "strong agent: " + reply;
    } catch (const AgentError& e) {
        out.verdict = Verdict::Unknown;
        out.rationale = std::string("verification failed: ") + e.what();
    }
    return out;
}

}  // namespace entroguide
