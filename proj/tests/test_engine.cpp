#include <gtest/gtest.h>

#include "entroguide/bench.hpp"
#include "entroguide/config.hpp"
#include "support.hpp"

using namespace entroguide;

namespace {

const std::string kProblem =
    "A rectangle has a length of 8 cm and a width that is 3 cm less than its length. What is the area?";

// Scripted agent that also records every history it was handed.
class RecordingAgent : public Agent {
public:
    RecordingAgent(AgentProfile profile, std::vector<ScriptEntry> entries)
        : inner_(profile, entries), profile_(std::move(profile)) {}

    const AgentProfile& profile() const override { return profile_; }

    std::vector<std::vector<ChatTurn>> histories;
    std::vector<CallContext> calls;

protected:
    std::string do_generate(const std::vector<ChatTurn>& history, const CallContext& ctx) override {
        histories.push_back(history);
        calls.push_back(ctx);
        return inner_.generate(history, ctx);
    }

private:
    ScriptedAgent inner_;
    AgentProfile profile_;
};

std::vector<ScriptEntry> weak_replies(const std::vector<std::string>& replies) {
    std::vector<ScriptEntry> out;
    for (std::size_t i = 0; i < replies.size(); ++i) out.push_back({static_cast<int>(i) + 1, Strength::Weak, replies[i], {}});
    return out;
}

struct Rectangle {
    AppConfig config = load_config(test_support::fixture("rectangle/config.json").string());
    TaskInstance task = load_dataset(test_support::fixture("rectangle/task.jsonl").string()).front();

    SessionConfig session(Mode mode) const {
        auto s = config.session(mode);
        s.clock = test_support::fixed_clock();
        return s;
    }
    std::unique_ptr<Agent> agent(const std::string& name) const { return make_agent(config.profile(name), task.id); }
};

SessionConfig plain_session(Mode mode, int t_max = 3) {
    SessionConfig s;
    s.mode = mode;
    s.t_max = t_max;
    s.clock = test_support::fixed_clock();
    return s;
}

}  // namespace

TEST(RunSession, RectangleWalkthrough) {
    Rectangle f;
    ExperienceStore repo;
    auto strong = f.agent("tutor");
    auto weak = f.agent("student");
    const auto t = run_session(f.task, f.session(Mode::GuidedRag), *strong, *weak, &repo);

    ASSERT_EQ(t.rounds.size(), 2u);
    EXPECT_TRUE(t.success);
    EXPECT_FALSE(t.aborted);
    EXPECT_EQ(t.rounds_used, 2);
    const auto& r1 = t.rounds[0];
    EXPECT_EQ(r1.weak_response, "um, 8+3=11?");
    EXPECT_EQ(r1.verdict, Verdict::Incorrect);
    EXPECT_GT(r1.entropy.h_total, r1.thresholds.tau2);
    ASSERT_TRUE(r1.level.has_value());
    EXPECT_EQ(*r1.level, GuidanceLevel::Intensive);
    ASSERT_TRUE(r1.guidance.has_value());
    ASSERT_EQ(r1.guidance->sections.size(), 3u);
    EXPECT_EQ(r1.guidance->sections[0].tag, SectionTag::Analysis);

    const auto& r2 = t.rounds[1];
    EXPECT_EQ(r2.verdict, Verdict::Correct);
    EXPECT_LE(r2.entropy.h_total, r2.thresholds.tau1);
    EXPECT_EQ(r2.thresholds.tau1, 1.8);
    EXPECT_FALSE(r2.level.has_value());
    EXPECT_FALSE(r2.guidance.has_value());

    ASSERT_EQ(repo.size(), 1u);
    const auto rec = repo.records()[0];
    EXPECT_EQ(rec.usage_count, 0u);
    EXPECT_NE(rec.final_answer.find("40"), std::string::npos);
    EXPECT_EQ(rec.success_entropy, t.entropy_trace.back());
    EXPECT_EQ(rec.problem_text, f.task.problem);
    EXPECT_EQ(rec.solution_steps.size(), 4u);
    EXPECT_EQ(t.stored_record_id, std::optional<std::uint64_t>(0));
}

TEST(RunSession, GuidanceReachesTheWeakAgentAsUserTurn) {
    auto weak = RecordingAgent(test_support::scripted_profile("w", Strength::Weak),
                               weak_replies({"um, 8+3=11?", "Answer: 40"}));
    auto strong = ScriptedAgent::from_replies(test_support::scripted_profile("s", Strength::Strong), {"GUIDE-TEXT"});
    const auto t = run_session(test_support::math_task("t", kProblem, 40), plain_session(Mode::Guided), strong, weak);
    ASSERT_EQ(weak.histories.size(), 2u);
    const auto& h2 = weak.histories[1];
    EXPECT_EQ(h2.front().role, ChatRole::System);
    EXPECT_EQ(h2[h2.size() - 2].role, ChatRole::Assistant);
    EXPECT_EQ(h2[h2.size() - 2].content, "um, 8+3=11?");
    EXPECT_EQ(h2.back().role, ChatRole::User);
    EXPECT_NE(h2.back().content.find("GUIDE-TEXT"), std::string::npos);
    EXPECT_TRUE(t.success);
}

TEST(RunSession, AlwaysWrongExhaustsRoundsAndStoresNothing) {
    ExperienceStore repo;
    auto weak = ScriptedAgent::from_replies(test_support::scripted_profile("w", Strength::Weak),
                                            {"Area = 25", "Area = 24", "Area = 11"});
    auto strong = ScriptedAgent::from_replies(test_support::scripted_profile("s", Strength::Strong), {"hint", "hint"});
    const auto t = run_session(test_support::math_task("t", kProblem, 40), plain_session(Mode::GuidedRag), strong, weak,
                               &repo);
    EXPECT_EQ(t.rounds_used, 3);
    EXPECT_FALSE(t.success);
    EXPECT_EQ(repo.size(), 0u);
    EXPECT_EQ(t.final_answer, "Area = 11");
    EXPECT_TRUE(t.rounds[0].level.has_value());
    EXPECT_TRUE(t.rounds[1].level.has_value());
    EXPECT_FALSE(t.rounds[2].level.has_value());
    for (int i = 0; i < 3; ++i) {
        const auto expected = update_thresholds(ThresholdState::initial(), i + 1);
        EXPECT_EQ(t.rounds[static_cast<std::size_t>(i)].thresholds.tau1, expected.tau1);
        EXPECT_EQ(t.rounds[static_cast<std::size_t>(i)].thresholds.tau2, expected.tau2);
        EXPECT_EQ(t.entropy_trace[static_cast<std::size_t>(i)], t.rounds[static_cast<std::size_t>(i)].entropy.h_total);
    }
}

TEST(RunSession, NoGuidanceIsSingleShot) {
    auto weak = ScriptedAgent::from_replies(test_support::scripted_profile("w", Strength::Weak), {"Answer: 40"});
    auto strong = RecordingAgent(test_support::scripted_profile("s", Strength::Strong), {});
    const auto t = run_session(test_support::math_task("t", kProblem, 40), plain_session(Mode::NoGuidance), strong, weak);
    EXPECT_EQ(t.rounds_used, 1);
    EXPECT_TRUE(t.success);
    EXPECT_FALSE(t.rounds[0].level.has_value());
    EXPECT_FALSE(t.rounds[0].guidance.has_value());
    EXPECT_TRUE(strong.calls.empty());
    EXPECT_TRUE(t.retrieval.empty());
}

TEST(RunSession, NoGuidanceStopsAfterOneWrongRound) {
    auto weak = ScriptedAgent::from_replies(test_support::scripted_profile("w", Strength::Weak), {"Area = 25"});
    auto strong = ScriptedAgent::from_replies(test_support::scripted_profile("s", Strength::Strong), {});
    const auto t = run_session(test_support::math_task("t", kProblem, 40), plain_session(Mode::NoGuidance), strong, weak);
    EXPECT_EQ(t.rounds_used, 1);
    EXPECT_FALSE(t.success);
    EXPECT_FALSE(t.aborted);
}

TEST(RunSession, ChainOfThoughtSelfRetries) {
    auto weak = RecordingAgent(test_support::scripted_profile("w", Strength::Weak),
                               weak_replies({"Area = 25", "Answer: 40"}));
    auto strong = RecordingAgent(test_support::scripted_profile("s", Strength::Strong), {});
    const auto t = run_session(test_support::math_task("t", kProblem, 40), plain_session(Mode::ChainOfThought), strong,
                               weak);
    EXPECT_EQ(t.rounds_used, 2);
    EXPECT_TRUE(t.success);
    EXPECT_TRUE(strong.calls.empty());
    EXPECT_EQ(weak.histories[0].front().content.rfind(std::string(kChainOfThoughtCue), 0), 0u);
    EXPECT_EQ(weak.histories[1].back().content, std::string(kSelfRetryCue));
    for (const auto& r : t.rounds) {
        EXPECT_FALSE(r.level.has_value());
        EXPECT_FALSE(r.guidance.has_value());
    }
}

TEST(RunSession, GuidedRagInjectsRetrievedExperience) {
    ExperienceStore repo;
    ExperienceRecord prior;
    prior.problem_text = "A rectangle has a length of 6 cm and a width of 2 cm. What is the area?";
    prior.solution_steps = {"area = 6 x 2 = 12"};
    prior.final_answer = "12";
    repo.insert(prior);
    ExperienceRecord other;
    other.problem_text = "Trains leave at noon.";
    repo.insert(other);

    auto weak = RecordingAgent(test_support::scripted_profile("w", Strength::Weak), weak_replies({"Answer: 40"}));
    auto strong = ScriptedAgent::from_replies(test_support::scripted_profile("s", Strength::Strong), {});
    const auto t = run_session(test_support::math_task("t", kProblem, 40), plain_session(Mode::GuidedRag), strong, weak,
                               &repo);
    ASSERT_EQ(t.retrieval.size(), 2u);
    EXPECT_TRUE(t.retrieval[0].injected);
    EXPECT_TRUE(t.rag_used);
    EXPECT_NE(weak.histories[0].front().content.find(prior.problem_text), std::string::npos);
    EXPECT_EQ(repo.records()[0].usage_count, 1u);
    EXPECT_EQ(repo.size(), 3u);
}

TEST(RunSession, RagUsedOnlyWhenSomethingIsInjected) {
    ExperienceStore repo;
    ExperienceRecord unrelated;
    unrelated.problem_text = "Trains leave at noon.";
    repo.insert(unrelated);
    auto weak = ScriptedAgent::from_replies(test_support::scripted_profile("w", Strength::Weak), {"Answer: 40"});
    auto strong = ScriptedAgent::from_replies(test_support::scripted_profile("s", Strength::Strong), {});
    const auto t = run_session(test_support::math_task("t", kProblem, 40), plain_session(Mode::GuidedRag), strong, weak,
                               &repo);
    ASSERT_EQ(t.retrieval.size(), 1u);
    EXPECT_FALSE(t.retrieval[0].injected);
    EXPECT_FALSE(t.rag_used);
}

TEST(RunSession, GuidedModeNeverTouchesTheRepository) {
    ExperienceStore repo;
    repo.insert([] {
        ExperienceRecord r;
        r.problem_text = kProblem;
        return r;
    }());
    auto weak = ScriptedAgent::from_replies(test_support::scripted_profile("w", Strength::Weak), {"Answer: 40"});
    auto strong = ScriptedAgent::from_replies(test_support::scripted_profile("s", Strength::Strong), {});
    const auto t = run_session(test_support::math_task("t", kProblem, 40), plain_session(Mode::Guided), strong, weak, &repo);
    EXPECT_TRUE(t.success);
    EXPECT_TRUE(t.retrieval.empty());
    EXPECT_EQ(repo.size(), 1u);
    EXPECT_EQ(repo.records()[0].usage_count, 0u);
}

TEST(RunSession, GuidedRagNeedsRepository) {
    auto weak = ScriptedAgent::from_replies(test_support::scripted_profile("w", Strength::Weak), {"Answer: 40"});
    auto strong = ScriptedAgent::from_replies(test_support::scripted_profile("s", Strength::Strong), {});
    EXPECT_THROW(run_session(test_support::math_task("t", kProblem, 40), plain_session(Mode::GuidedRag), strong, weak),
                 ConfigError);
}

TEST(RunSession, AgentFailureAbortsWithTranscript) {
    auto weak = ScriptedAgent::from_replies(test_support::scripted_profile("w", Strength::Weak), {"Area = 25"});
    auto strong = ScriptedAgent::from_replies(test_support::scripted_profile("s", Strength::Strong), {});
    const auto t = run_session(test_support::math_task("t", kProblem, 40), plain_session(Mode::Guided), strong, weak);
    EXPECT_TRUE(t.aborted);
    EXPECT_FALSE(t.success);
    EXPECT_FALSE(t.abort_reason.empty());
    ASSERT_EQ(t.rounds.size(), 1u);
    EXPECT_EQ(t.rounds_used, 1);
    EXPECT_EQ(t.entropy_trace.size(), 1u);
}

TEST(RunSession, UnreachableRemoteAborts) {
    AgentProfile p;
    p.name = "down";
    p.strength = Strength::Weak;
    p.backend = RemoteEndpoint{"http://127.0.0.1:1", "m", ""};
    p.retries = 0;
    p.timeout = std::chrono::milliseconds(300);
    RemoteAgent weak(p, std::make_shared<HttplibTransport>(), [](int) {});
    auto strong = ScriptedAgent::from_replies(test_support::scripted_profile("s", Strength::Strong), {});
    const auto t = run_session(test_support::math_task("t", kProblem, 40), plain_session(Mode::Guided), strong, weak);
    EXPECT_TRUE(t.aborted);
    EXPECT_TRUE(t.rounds.empty());
    EXPECT_EQ(t.rounds_used, 0);
    EXPECT_NO_THROW(transcript_to_json(t).dump());
}

TEST(RunSession, TranscriptsAreByteIdentical) {
    Rectangle f;
    auto run_once = [&] {
        ExperienceStore repo;
        auto strong = f.agent("tutor");
        auto weak = f.agent("student");
        return transcript_to_json(run_session(f.task, f.session(Mode::GuidedRag), *strong, *weak, &repo)).dump(2);
    };
    EXPECT_EQ(run_once(), run_once());
}

TEST(RunSession, TerminationOnRandomScripts) {
    std::mt19937_64 rng(41);
    const std::vector<std::string> pool = {"Answer: 40", "Area = 25", "um?", "I think 40", "no idea", ""};
    for (int i = 0; i < 200; ++i) {
        const int t_max = 1 + static_cast<int>(rng() % 5);
        std::vector<std::string> weak_lines, strong_lines;
        for (int r = 0; r < t_max; ++r) {
            weak_lines.push_back(pool[rng() % pool.size()]);
            strong_lines.push_back("## Diagnosis\nx");
        }
        for (Mode mode : kAllModes) {
            ExperienceStore repo;
            auto weak = ScriptedAgent::from_replies(test_support::scripted_profile("w", Strength::Weak), weak_lines);
            auto strong = ScriptedAgent::from_replies(test_support::scripted_profile("s", Strength::Strong), strong_lines);
            const auto t = run_session(test_support::math_task("t", kProblem, 40), plain_session(mode, t_max), strong,
                                       weak, &repo);
            EXPECT_LE(t.rounds_used, t_max);
            EXPECT_EQ(t.rounds_used, static_cast<int>(t.rounds.size()));
            EXPECT_FALSE(t.aborted);
            if (t.success) {
                EXPECT_EQ(t.rounds.back().verdict, Verdict::Correct);
            }
            EXPECT_EQ(repo.size(), (mode == Mode::GuidedRag && t.success) ? 1u : 0u);
            ASSERT_FALSE(t.rounds.empty());
            EXPECT_FALSE(t.rounds.back().level.has_value());
            for (std::size_t r = 0; r + 1 < t.rounds.size(); ++r) {
                EXPECT_EQ(t.rounds[r].level.has_value(), is_guided(mode));
            }
        }
    }
}

TEST(RunSession, CodeWithoutSandboxIsSkipped) {
    TaskInstance task;
    task.id = "c";
    task.kind = TaskKind::Code;
    task.problem = "Write add(a, b).";
    task.reference = CodeReference{"add", {"assert add(1, 2) == 3"}};
    auto weak = ScriptedAgent::from_replies(test_support::scripted_profile("w", Strength::Weak),
                                            {"```python\ndef add(a, b):\n    return a + b\n```"});
    auto strong = ScriptedAgent::from_replies(test_support::scripted_profile("s", Strength::Strong), {});
    const auto t = run_session(task, plain_session(Mode::NoGuidance), strong, weak);
    EXPECT_TRUE(t.check_skipped);
    EXPECT_EQ(t.rounds[0].verdict, Verdict::Unknown);
    EXPECT_FALSE(t.success);
}

TEST(RunSession, RoutingAccuracyIsRecorded) {
    TaskInstance task;
    task.id = "r";
    task.kind = TaskKind::Routing;
    RoutingInstance inst;
    inst.depot = {0, 0};
    inst.vehicle_capacity = 10;
    inst.customers = {{{3, 0}, 1}, {{3, 4}, 1}};
    inst.optimal_distance = exact_optimal_distance(inst);
    task.reference = RoutingReference{inst};
    task.problem = describe_routing_instance(inst);
    auto weak = ScriptedAgent::from_replies(test_support::scripted_profile("w", Strength::Weak),
                                            {"Route 1: depot -> c1 -> c2 -> depot"});
    auto strong = ScriptedAgent::from_replies(test_support::scripted_profile("s", Strength::Strong), {});
    const auto t = run_session(task, plain_session(Mode::NoGuidance), strong, weak);
    EXPECT_TRUE(t.success);
    ASSERT_TRUE(t.routing_accuracy_pct.has_value());
    EXPECT_DOUBLE_EQ(*t.routing_accuracy_pct, 100.0);
}

TEST(BuildRecord, RequiresSuccess) {
    SessionTranscript t;
    t.success = false;
    EXPECT_THROW(build_record(t), ContractViolation);
}

TEST(BuildRecord, MapsTranscriptFields) {
    SessionTranscript t;
    t.task = test_support::math_task("t", "1 plus 2", 3);
    t.success = true;
    t.final_answer = "First add.\n\n  1 + 2 = 3  \nAnswer: 3";
    t.entropy_trace = {2.5, 0.75};
    const auto r = build_record(t);
    EXPECT_EQ(r.usage_count, 0u);
    EXPECT_EQ(r.success_entropy, 0.75);
    EXPECT_EQ(r.solution_steps, (std::vector<std::string>{"First add.", "1 + 2 = 3", "Answer: 3"}));
    EXPECT_EQ(r.final_answer, "3");
    EXPECT_EQ(r.difficulty, Difficulty::Easy);
}

TEST(Transcript, JsonShapeAndFilename) {
    Rectangle f;
    ExperienceStore repo;
    auto strong = f.agent("tutor");
    auto weak = f.agent("student");
    const auto t = run_session(f.task, f.session(Mode::GuidedRag), *strong, *weak, &repo);
    const auto j = transcript_to_json(t);
    EXPECT_EQ(transcript_filename(t), "rectangle-area.guided_rag.json");
    EXPECT_EQ(j["rounds"].size(), 2u);
    EXPECT_EQ(j["rounds"][0]["level"], "intensive");
    EXPECT_TRUE(j["rounds"][1]["level"].is_null());
    EXPECT_EQ(j["entropy_trace"].size(), 2u);
    EXPECT_EQ(j["started_at_ms"], 1700000000000);
    EXPECT_EQ(j["config"]["strong"], "tutor");
}

TEST(Modes, NamesRoundTrip) {
    for (Mode m : kAllModes) EXPECT_EQ(parse_mode(to_string(m)), m);
    EXPECT_THROW(parse_mode("telepathy"), ConfigError);
}
