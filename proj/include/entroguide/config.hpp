#pragma once

// JSON configuration tree: profiles.*, policy.*, store.*, sandbox.*,
// session.*, entropy.*, templates_dir. Missing sections keep defaults.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"

#include "entroguide/agent.hpp"
#include "entroguide/checkers.hpp"
#include "entroguide/engine.hpp"
#include "entroguide/entropy.hpp"
#include "entroguide/policy.hpp"

namespace entroguide {

struct AppConfig {
    std::map<std::string, AgentProfile> profiles;
    PolicyConstants policy;
    EntropyConfig entropy;
    SandboxConfig sandbox;
    std::size_t k = 3;
    double s_min = 0.1;
    int t_max = 3;
    std::optional<std::filesystem::path> templates_dir;

    const AgentProfile& profile(const std::string& name) const {
        auto it = profiles.find(name);
        if (it == profiles.end()) throw ConfigError("unknown profile '" + name + "'");
        return it->second;
    }

    SessionConfig session(Mode mode) const {
        SessionConfig c;
        c.mode = mode;
        c.t_max = t_max;
        c.k = k;
        c.s_min = s_min;
        c.policy = policy;
        c.entropy = entropy;
        c.sandbox = sandbox;
        if (templates_dir) c.templates = GuidanceTemplates::from_directory(*templates_dir);
        return c;
    }
};

namespace detail {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key) || j[key].is_null()) return;
    try {
        out = j[key].get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config key '") + key + "': " + e.what());
    }
}

inline std::vector<std::pair<std::string, double>> read_lexicon_section(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("lexicon sections must be objects of pattern -> weight");
    std::vector<std::pair<std::string, double>> out;
    for (const auto& [pattern, weight] : j.items()) {
        if (!weight.is_number()) throw ConfigError("lexicon weight for '" + pattern + "' must be a number");
        out.emplace_back(pattern, weight.get<double>());
    }
    return out;
}

inline AgentProfile read_profile(const std::string& name, const nlohmann::json& j, const std::filesystem::path& base) {
    AgentProfile p;
    p.name = name;
    p.strength = parse_strength(j.value("strength", std::string("weak")));
    const std::string backend = j.value("backend", std::string(j.contains("script") ? "scripted" : "remote"));
    if (backend == "remote") {
        RemoteEndpoint ep;
        read_opt(j, "base_url", ep.base_url);
        read_opt(j, "model", ep.model);
        read_opt(j, "auth_env", ep.auth_env);
        p.backend = ep;
    } else if (backend == "scripted") {
        std::filesystem::path script = j.value("script", std::string{});
        if (script.empty()) throw ConfigError("scripted profile '" + name + "' needs a script path");
        if (script.is_relative()) script = base / script;
        p.backend = ScriptedSource{script.string()};
    } else {
        throw ConfigError("profile '" + name + "': unknown backend '" + backend + "'");
    }
    read_opt(j, "role_template", p.role_template);
    read_opt(j, "temperature", p.temperature);
    read_opt(j, "max_reply_tokens", p.max_reply_tokens);
    read_opt(j, "retries", p.retries);
    double timeout_s = static_cast<double>(p.timeout.count()) / 1000.0;
    read_opt(j, "timeout_s", timeout_s);
    p.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000.0));
    p.validate();
    return p;
}

}  // namespace detail

inline void apply_entropy_config(const nlohmann::json& j, EntropyConfig& cfg) {
    if (!j.is_object()) throw ConfigError("entropy section must be an object");
    std::optional<std::vector<std::pair<std::string, double>>> common;
    double cap = entropy_constants::kDefaultLexiconCap;
    if (j.contains("lexicon")) {
        const auto& lex = j["lexicon"];
        if (lex.contains("common")) common = detail::read_lexicon_section(lex["common"]);
        detail::read_opt(lex, "cap", cap);
        if (!(cap > 0.0)) throw ConfigError("entropy.lexicon.cap must be > 0");
    }
    for (TaskKind kind : kAllTaskKinds) {
        const std::string key(to_string(kind));
        auto& profile = cfg.profile(kind);
        if (j.contains("lexicon")) {
            const auto& lex = j["lexicon"];
            UncertaintyLexicon rebuilt;
            rebuilt.task_kind = kind;
            rebuilt.cap = cap;
            for (const auto& [p, w] : common ? *common : default_common_lexicon()) rebuilt.add(p, w);
            auto task_entries = lex.contains(key) ? detail::read_lexicon_section(lex[key]) : default_task_lexicon(kind);
            for (const auto& [p, w] : task_entries) rebuilt.add(p, w);
            profile.lexicon = std::move(rebuilt);
        }
        if (j.contains("weights") && j["weights"].contains(key)) {
            const auto& w = j["weights"][key];
            detail::read_opt(w, "expression", profile.weights.expression);
            detail::read_opt(w, "uncertainty", profile.weights.uncertainty);
            detail::read_opt(w, "structure", profile.weights.structure);
            detail::read_opt(w, "coherence", profile.weights.coherence);
            detail::read_opt(w, "relevance", profile.weights.relevance);
            profile.weights.validate();
        }
        if (j.contains("markers") && j["markers"].contains(key)) {
            profile.structure_markers.clear();
            for (const auto& m : j["markers"][key]) profile.structure_markers.emplace_back(m.get<std::string>());
        }
    }
}

inline AppConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base = ".") {
    AppConfig cfg;
    if (!j.is_object()) throw ConfigError("config root must be an object");
    if (j.contains("profiles")) {
        for (const auto& [name, pj] : j["profiles"].items()) cfg.profiles.emplace(name, detail::read_profile(name, pj, base));
    }
    if (j.contains("policy")) {
        const auto& p = j["policy"];
        detail::read_opt(p, "tau1_base", cfg.policy.tau1_base);
        detail::read_opt(p, "tau2_base", cfg.policy.tau2_base);
        detail::read_opt(p, "tau1_min", cfg.policy.tau1_min);
        detail::read_opt(p, "tau2_min", cfg.policy.tau2_min);
        detail::read_opt(p, "lambda", cfg.policy.lambda);
        detail::read_opt(p, "a_max", cfg.policy.a_max);
        cfg.policy.validate();
    }
    if (j.contains("store")) {
        detail::read_opt(j["store"], "k", cfg.k);
        detail::read_opt(j["store"], "s_min", cfg.s_min);
        if (cfg.k < 1) throw ConfigError("store.k must be >= 1");
    }
    if (j.contains("sandbox")) {
        detail::read_opt(j["sandbox"], "command", cfg.sandbox.command);
        detail::read_opt(j["sandbox"], "timeout_s", cfg.sandbox.timeout_s);
    }
    if (j.contains("session")) {
        detail::read_opt(j["session"], "t_max", cfg.t_max);
        if (cfg.t_max < 1) throw ConfigError("session.t_max must be >= 1");
    }
    if (j.contains("entropy")) apply_entropy_config(j["entropy"], cfg.entropy);
    if (j.contains("templates_dir")) {
        std::filesystem::path dir = j["templates_dir"].get<std::string>();
        cfg.templates_dir = dir.is_relative() ? base / dir : dir;
    }
    return cfg;
}

inline AppConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config " + path + " is not valid JSON");
    return parse_config(j, std::filesystem::path(path).parent_path());
}

}  // namespace entroguide
