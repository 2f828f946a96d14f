#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "entroguide/remote.hpp"
#include "mock_server.hpp"
#include "support.hpp"

using namespace entroguide;

namespace {

const std::vector<ChatTurn> kHistory = {{ChatRole::System, "role"}, {ChatRole::User, "Solve the problem."}};

// Transport double that counts calls and replays a fixed sequence.
class CountingTransport : public Transport {
public:
    explicit CountingTransport(std::vector<std::optional<HttpResponse>> replies) : replies_(std::move(replies)) {}

    std::optional<HttpResponse> post(const HttpRequest& request) override {
        last_body = request.body;
        last_headers = request.headers;
        const auto i = std::min(calls++, replies_.size() - 1);
        return replies_[i];
    }

    std::size_t calls = 0;
    std::string last_body;
    httplib::Headers last_headers;

private:
    std::vector<std::optional<HttpResponse>> replies_;
};

AgentProfile remote_profile(const std::string& base_url, int retries = 2) {
    AgentProfile p;
    p.name = "remote";
    p.strength = Strength::Strong;
    p.backend = RemoteEndpoint{base_url, "test-model", "ENTROGUIDE_TEST_KEY"};
    p.retries = retries;
    p.timeout = std::chrono::milliseconds(5000);
    return p;
}

BackoffFn no_wait(std::vector<int>* attempts = nullptr) {
    return [attempts](int a) {
        if (attempts) attempts->push_back(a);
    };
}

}  // namespace

TEST(ScriptedAgent, ReturnsScriptedReply) {
    auto agent = ScriptedAgent::from_replies(test_support::scripted_profile("weak", Strength::Weak), {"um, 8+3=11?"});
    EXPECT_EQ(agent.generate(kHistory, {1, Strength::Weak}), "um, 8+3=11?");
}

TEST(ScriptedAgent, ExhaustedScriptThrows) {
    auto agent = ScriptedAgent::from_replies(test_support::scripted_profile("weak", Strength::Weak), {"only"});
    agent.generate(kHistory, {1, Strength::Weak});
    EXPECT_THROW(agent.generate(kHistory, {1, Strength::Weak}), ScriptError);
    EXPECT_THROW(agent.generate(kHistory, {2, Strength::Weak}), ScriptError);
}

TEST(ScriptedAgent, KeyedByRoundAndRole) {
    std::vector<ScriptEntry> entries = {
        {1, Strength::Weak, "w1a", std::nullopt},
        {1, Strength::Strong, "s1", std::nullopt},
        {1, Strength::Weak, "w1b", std::nullopt},
        {2, Strength::Weak, "w2", std::nullopt},
    };
    ScriptedAgent agent(test_support::scripted_profile("x", Strength::Weak), entries);
    EXPECT_EQ(agent.generate(kHistory, {2, Strength::Weak}), "w2");
    EXPECT_EQ(agent.generate(kHistory, {1, Strength::Strong}), "s1");
    EXPECT_EQ(agent.generate(kHistory, {1, Strength::Weak}), "w1a");
    EXPECT_EQ(agent.generate(kHistory, {1, Strength::Weak}), "w1b");
}

TEST(ScriptedAgent, TaskScopedEntries) {
    std::vector<ScriptEntry> entries = {
        {1, Strength::Weak, "for a", std::string("a")},
        {1, Strength::Weak, "for b", std::string("b")},
        {2, Strength::Weak, "shared", std::nullopt},
    };
    ScriptedAgent a(test_support::scripted_profile("x", Strength::Weak), entries, std::string("b"));
    EXPECT_EQ(a.generate(kHistory, {1, Strength::Weak}), "for b");
    EXPECT_EQ(a.generate(kHistory, {2, Strength::Weak}), "shared");
    ScriptedAgent unscoped(test_support::scripted_profile("x", Strength::Weak), entries);
    EXPECT_THROW(unscoped.generate(kHistory, {1, Strength::Weak}), ScriptError);
}

TEST(ScriptedAgent, DeterministicAcrossInstances) {
    const auto entries = load_script(test_support::fixture("rectangle/script.jsonl").string());
    ScriptedAgent a(test_support::scripted_profile("x", Strength::Weak), entries);
    ScriptedAgent b(test_support::scripted_profile("x", Strength::Weak), entries);
    for (int r = 1; r <= 2; ++r) {
        EXPECT_EQ(a.generate(kHistory, {r, Strength::Weak}), b.generate(kHistory, {r, Strength::Weak}));
    }
}

TEST(ScriptedAgent, HistoryMustStartWithSystemPrompt) {
    auto agent = ScriptedAgent::from_replies(test_support::scripted_profile("weak", Strength::Weak), {"x"});
    EXPECT_THROW(agent.generate({}, {1, Strength::Weak}), Error);
    EXPECT_THROW(agent.generate({{ChatRole::User, "hi"}}, {1, Strength::Weak}), Error);
}

TEST(ScriptedAgent, LoadScriptErrorsNameTheLine) {
    test_support::TempDir dir;
    std::ofstream(dir.file("s.jsonl")) << R"({"round": 1, "role": "weak", "reply": "ok"})" << "\n"
                                       << R"({"round": 1, "role": "sideways", "reply": "bad"})" << "\n";
    try {
        load_script(dir.file("s.jsonl"));
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
    }
    EXPECT_THROW(load_script(dir.file("missing.jsonl")), ConfigError);
}

TEST(WireFormat, RequestRoundTrips) {
    ChatRequest req{"m", {{ChatRole::System, "sys"}, {ChatRole::User, ""}, {ChatRole::Assistant, "a \"quoted\"\n"}}, 0.7,
                    256};
    const auto j = chat_request_to_json(req);
    EXPECT_EQ(j["messages"][0]["role"], "system");
    EXPECT_EQ(j["max_tokens"], 256);
    EXPECT_EQ(chat_request_from_json(nlohmann::json::parse(j.dump())), req);
}

TEST(WireFormat, ReplyExtraction) {
    EXPECT_EQ(parse_chat_reply(test_support::chat_body("hello")), "hello");
    EXPECT_FALSE(parse_chat_reply("not json").has_value());
    EXPECT_FALSE(parse_chat_reply(R"({"choices": []})").has_value());
    EXPECT_EQ(parse_chat_reply(R"({"choices": [{"message": {"content": null}}]})"), "");
}

TEST(RemoteAgent, ExtractsCannedContentFromMockServer) {
    test_support::MockChatServer server("Area = 40");
    ::setenv("ENTROGUIDE_TEST_KEY", "sekret", 1);
    RemoteAgent agent(remote_profile(server.base_url()), std::make_shared<HttplibTransport>(), no_wait());
    EXPECT_EQ(agent.generate(kHistory, {1, Strength::Strong}), "Area = 40");
    ::unsetenv("ENTROGUIDE_TEST_KEY");
    const auto reqs = server.requests();
    ASSERT_EQ(reqs.size(), 1u);
    const auto body = chat_request_from_json(nlohmann::json::parse(reqs[0]));
    EXPECT_EQ(body.model, "test-model");
    EXPECT_EQ(body.messages, kHistory);
    EXPECT_EQ(body.temperature, 0.0);
    EXPECT_EQ(body.max_tokens, 1024);
    EXPECT_EQ(server.auth_headers()[0], "Bearer sekret");
}

TEST(RemoteAgent, BaseUrlPathPrefixIsKept) {
    test_support::MockChatServer server("x");
    RemoteAgent agent(remote_profile(server.base_url() + "/"), std::make_shared<HttplibTransport>(), no_wait());
    EXPECT_EQ(agent.generate(kHistory, {1, Strength::Strong}), "x");
}

TEST(RemoteAgent, RetriesServerErrorsThenSucceeds) {
    test_support::MockChatServer server("finally");
    server.enqueue(503, "busy");
    server.enqueue(429, "slow down");
    std::vector<int> attempts;
    RemoteAgent agent(remote_profile(server.base_url(), 2), std::make_shared<HttplibTransport>(), no_wait(&attempts));
    EXPECT_EQ(agent.generate(kHistory, {1, Strength::Strong}), "finally");
    EXPECT_EQ(server.requests().size(), 3u);
    EXPECT_EQ(attempts, (std::vector<int>{1, 2}));
}

TEST(RemoteAgent, NonRetryableStatusIsRemoteError) {
    auto transport = std::make_shared<CountingTransport>(
        std::vector<std::optional<HttpResponse>>{HttpResponse{401, std::string(500, 'x')}});
    RemoteAgent agent(remote_profile("http://unused"), transport, no_wait());
    try {
        agent.generate(kHistory, {1, Strength::Strong});
        FAIL() << "expected RemoteError";
    } catch (const RemoteError& e) {
        EXPECT_EQ(e.status(), 401);
        EXPECT_LE(e.body_excerpt().size(), 200u);
    }
    EXPECT_EQ(transport->calls, 1u);
}

TEST(RemoteAgent, TransportFailureBecomesUnavailableAfterRetries) {
    for (int retries : {0, 1, 3}) {
        auto transport = std::make_shared<CountingTransport>(std::vector<std::optional<HttpResponse>>{std::nullopt});
        RemoteAgent agent(remote_profile("http://unused", retries), transport, no_wait());
        EXPECT_THROW(agent.generate(kHistory, {1, Strength::Strong}), BackendUnavailable);
        EXPECT_EQ(transport->calls, static_cast<std::size_t>(retries) + 1);
    }
}

TEST(RemoteAgent, PersistentServerErrorStopsAtRetryLimit) {
    auto transport =
        std::make_shared<CountingTransport>(std::vector<std::optional<HttpResponse>>{HttpResponse{500, "boom"}});
    RemoteAgent agent(remote_profile("http://unused", 2), transport, no_wait());
    EXPECT_THROW(agent.generate(kHistory, {1, Strength::Strong}), RemoteError);
    EXPECT_EQ(transport->calls, 3u);
}

TEST(RemoteAgent, UnreachableEndpoint) {
    auto p = remote_profile("http://127.0.0.1:1", 1);
    p.timeout = std::chrono::milliseconds(500);
    RemoteAgent agent(p, std::make_shared<HttplibTransport>(), no_wait());
    EXPECT_THROW(agent.generate(kHistory, {1, Strength::Strong}), BackendUnavailable);
}

TEST(RemoteAgent, ProfileValidation) {
    AgentProfile p = remote_profile("");
    EXPECT_THROW(RemoteAgent(p, nullptr, no_wait()), ConfigError);
    p = remote_profile("http://x");
    p.retries = -1;
    EXPECT_THROW(p.validate(), ConfigError);
}

TEST(Verify, MathCheckerVerdicts) {
    const auto task = test_support::math_task("t", "rectangle", 40);
    EXPECT_EQ(verify(nullptr, {}, task, "so Area = 8 x 5 = 40").verdict, Verdict::Correct);
    EXPECT_EQ(verify(nullptr, {}, task, "Area = 25").verdict, Verdict::Incorrect);
}

TEST(Verify, CheckerNeverTouchesTheNetwork) {
    auto transport = std::make_shared<CountingTransport>(
        std::vector<std::optional<HttpResponse>>{HttpResponse{200, test_support::chat_body("No")}});
    RemoteAgent strong(remote_profile("http://unused"), transport, no_wait());
    const auto task = test_support::math_task("t", "rectangle", 40);
    EXPECT_EQ(verify(&strong, {}, task, "Answer: 40").verdict, Verdict::Correct);
    TaskInstance routing;
    routing.id = "r";
    routing.kind = TaskKind::Routing;
    routing.reference = RoutingReference{generate_routing_instance(3, 5)};
    verify(&strong, {}, routing, "Route 1: depot -> c1 -> c2 -> c3 -> depot");
    EXPECT_EQ(transport->calls, 0u);
}

TEST(Verify, LabelFreeTaskAsksTheStrongAgent) {
    TaskInstance task;
    task.id = "open";
    task.kind = TaskKind::Math;
    task.problem = "Explain why 2 + 2 = 4.";
    auto yes = ScriptedAgent::from_replies(test_support::scripted_profile("s", Strength::Strong),
                                           {"Yes, the reasoning holds"});
    auto r = verify(&yes, {1, Strength::Strong}, task, "because");
    EXPECT_EQ(r.verdict, Verdict::Correct);
    auto no = ScriptedAgent::from_replies(test_support::scripted_profile("s", Strength::Strong), {"no: wrong"});
    EXPECT_EQ(verify(&no, {1, Strength::Strong}, task, "x").verdict, Verdict::Incorrect);
    auto empty = ScriptedAgent::from_replies(test_support::scripted_profile("s", Strength::Strong), {});
    auto failed = verify(&empty, {1, Strength::Strong}, task, "x");
    EXPECT_EQ(failed.verdict, Verdict::Unknown);
    EXPECT_NE(failed.rationale.find("verification failed"), std::string::npos);
    EXPECT_EQ(verify(nullptr, {}, task, "x").verdict, Verdict::Unknown);
}

TEST(Verify, YesNoParsing) {
    EXPECT_EQ(parse_yes_no("Yes, the reasoning holds"), Verdict::Correct);
    EXPECT_EQ(parse_yes_no("  **No**. Wrong width."), Verdict::Incorrect);
    EXPECT_EQ(parse_yes_no("Correct."), Verdict::Correct);
    EXPECT_EQ(parse_yes_no("I believe yes"), Verdict::Unknown);
    EXPECT_EQ(parse_yes_no(""), Verdict::Unknown);
}

TEST(RolePrompts, StrategyFollowsTaskKind) {
    EXPECT_EQ(role_binding(TaskKind::Math).strategy, Strategy::FrameworkSolver);
    EXPECT_EQ(role_binding(TaskKind::Code).strategy, Strategy::FrameworkProviderImplementer);
    EXPECT_EQ(role_binding(TaskKind::Routing).strategy, Strategy::ProposerValidator);
}

TEST(RolePrompts, Contents) {
    auto task = test_support::math_task("t", "A rectangle problem.", 40);
    const auto strong = build_role_prompt(role_binding(TaskKind::Math), Strength::Strong, task);
    EXPECT_NE(strong.find("structured reasoning outline"), std::string::npos);
    EXPECT_NE(strong.find("A rectangle problem."), std::string::npos);

    TaskInstance routing;
    routing.kind = TaskKind::Routing;
    routing.problem = "Visit c1 and c2.";
    const auto weak = build_role_prompt(role_binding(TaskKind::Routing), Strength::Weak, routing);
    EXPECT_NE(weak.find("candidate routing solution"), std::string::npos);
    EXPECT_NE(weak.find("refine"), std::string::npos);
}

TEST(RolePrompts, WeakPromptEmbedsExperiences) {
    auto task = test_support::math_task("t", "New problem.", 1);
    ExperienceRecord a;
    a.problem_text = "Old problem one";
    a.solution_steps = {"s1"};
    a.final_answer = "3";
    ExperienceRecord b = a;
    b.problem_text = "Old problem two";
    const auto binding = role_binding(TaskKind::Math);
    const auto weak = build_role_prompt(binding, Strength::Weak, task, {a, b});
    EXPECT_NE(weak.find("Old problem one"), std::string::npos);
    EXPECT_NE(weak.find("Old problem two"), std::string::npos);
    const auto strong = build_role_prompt(binding, Strength::Strong, task, {a, b});
    EXPECT_EQ(strong.find("Old problem one"), std::string::npos);
}

TEST(MakeAgent, BuildsScriptedAgentsFromFiles) {
    AgentProfile p = test_support::scripted_profile("w", Strength::Weak);
    p.backend = ScriptedSource{test_support::fixture("rectangle/script.jsonl").string()};
    auto agent = make_agent(p, std::string("rectangle-area"));
    EXPECT_EQ(agent->generate(kHistory, {1, Strength::Weak}), "um, 8+3=11?");
}
