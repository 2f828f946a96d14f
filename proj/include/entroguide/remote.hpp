#pragma once

// Chat-completions wire format and the HTTP-backed agent.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "entroguide/agent.hpp"

namespace entroguide {

struct ChatRequest {
    std::string model;
    std::vector<ChatTurn> messages;
    double temperature = 0.0;
    int max_tokens = 1024;

    bool operator==(const ChatRequest&) const = default;
};

inline nlohmann::json chat_request_to_json(const ChatRequest& req) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : req.messages) messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    return {{"model", req.model}, {"messages", messages}, {"temperature", req.temperature}, {"max_tokens", req.max_tokens}};
}

inline ChatRequest chat_request_from_json(const nlohmann::json& j) {
    ChatRequest req;
    req.model = j.at("model").get<std::string>();
    for (const auto& m : j.at("messages")) {
        req.messages.push_back({parse_chat_role(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
    }
    req.temperature = j.at("temperature").get<double>();
    req.max_tokens = j.at("max_tokens").get<int>();
    return req;
}

// Reads choices[0].message.content.
inline std::optional<std::string> parse_chat_reply(std::string_view body) {
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    try {
        const auto& content = j.at("choices").at(0).at("message").at("content");
        if (content.is_null()) return std::string{};
        return content.get<std::string>();
    } catch (const nlohmann::json::exception&) {
        return std::nullopt;
    }
}

struct HttpRequest {
    std::string base_url;
    std::string path;
    httplib::Headers headers;
    std::string body;
    std::chrono::milliseconds timeout{60'000};
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

class Transport {
public:
    virtual ~Transport() = default;
    // nullopt means the request never produced an HTTP response.
    virtual std::optional<HttpResponse> post(const HttpRequest& request) = 0;
};

class HttplibTransport : public Transport {
public:
    std::optional<HttpResponse> post(const HttpRequest& request) override {
        // base_url may carry a path prefix after scheme://host[:port].
        std::string origin = request.base_url;
        std::string prefix;
        if (auto scheme = origin.find("://"); scheme != std::string::npos) {
            if (auto slash = origin.find('/', scheme + 3); slash != std::string::npos) {
                prefix = origin.substr(slash);
                origin.erase(slash);
            }
        }
        while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

        httplib::Client client(origin);
        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());
        auto res = client.Post(prefix + request.path, request.headers, request.body, "application/json");
        if (!res) return std::nullopt;
        return HttpResponse{res->status, res->body};
    }
};

// Delay before retry attempt `attempt` (1-based).
using BackoffFn = std::function<void(int attempt)>;

inline BackoffFn exponential_backoff(std::chrono::milliseconds base = std::chrono::milliseconds(500)) {
    return [base](int attempt) { std::this_thread::sleep_for(base * (1 << std::min(attempt - 1, 6))); };
}

class RemoteAgent : public Agent {
public:
    RemoteAgent(AgentProfile profile, std::shared_ptr<Transport> transport = std::make_shared<HttplibTransport>(),
                BackoffFn backoff = exponential_backoff())
        : profile_(std::move(profile)), transport_(std::move(transport)), backoff_(std::move(backoff)) {
        profile_.validate();
        if (!profile_.is_remote()) throw ConfigError("profile '" + profile_.name + "' is not a remote profile");
    }

    const AgentProfile& profile() const override { return profile_; }

    ChatRequest build_request(const std::vector<ChatTurn>& history) const {
        const auto& ep = std::get<RemoteEndpoint>(profile_.backend);
        return {ep.model, history, profile_.temperature, profile_.max_reply_tokens};
    }

protected:
    std::string do_generate(const std::vector<ChatTurn>& history, const CallContext&) override {
        const auto& ep = std::get<RemoteEndpoint>(profile_.backend);
        HttpRequest req;
        req.base_url = ep.base_url;
        req.path = "/v1/chat/completions";
        req.body = chat_request_to_json(build_request(history)).dump();
        req.timeout = profile_.timeout;
        if (!ep.auth_env.empty()) {
            if (const char* key = std::getenv(ep.auth_env.c_str()); key && *key) {
                req.headers.emplace("Authorization", std::string("Bearer ") + key);
            }
        }

        std::optional<HttpResponse> last;
        for (int attempt = 0; attempt <= profile_.retries; ++attempt) {
            if (attempt > 0 && backoff_) backoff_(attempt);
            last = transport_->post(req);
            if (!last) continue;
            if (last->status >= 200 && last->status < 300) {
                auto content = parse_chat_reply(last->body);
                if (!content) throw RemoteError(last->status, "reply has no choices[0].message.content");
                return *content;
            }
            if (last->status != 429 && last->status < 500) break;
        }
        if (!last) {
            throw BackendUnavailable("endpoint " + ep.base_url + " unreachable after " +
                                     std::to_string(profile_.retries + 1) + " attempt(s)");
        }
        throw RemoteError(last->status, last->body.substr(0, 200));
    }

private:
    AgentProfile profile_;
    std::shared_ptr<Transport> transport_;
    BackoffFn backoff_;
};

// Builds the backend a profile names. Scripted agents are scoped to one task.
inline std::unique_ptr<Agent> make_agent(const AgentProfile& profile, const std::optional<std::string>& task_id,
                                         std::shared_ptr<Transport> transport = nullptr) {
    profile.validate();
    if (profile.is_remote()) {
        return std::make_unique<RemoteAgent>(profile, transport ? transport : std::make_shared<HttplibTransport>());
    }
    const auto& src = std::get<ScriptedSource>(profile.backend);
    return std::make_unique<ScriptedAgent>(profile, load_script(src.script_path), task_id);
}

}  // namespace entroguide
