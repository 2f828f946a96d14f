#pragma once

// Batch execution of sessions across modes with a bounded worker pool,
// plus dataset ingestion from common public layouts.

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <regex>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "entroguide/agent.hpp"
#include "entroguide/engine.hpp"
#include "entroguide/metrics.hpp"
#include "entroguide/remote.hpp"
#include "entroguide/store.hpp"

namespace entroguide {

using AgentFactory = std::function<std::unique_ptr<Agent>(const AgentProfile&, const TaskInstance&)>;

inline AgentFactory default_agent_factory() {
    return [](const AgentProfile& p, const TaskInstance& t) { return make_agent(p, t.id); };
}

struct BatchSpec {
    std::vector<TaskInstance> tasks;
    std::vector<Mode> modes;
    AgentProfile strong;
    AgentProfile weak;
    SessionConfig session;  // mode is overridden per batch mode
    std::string dataset;
    std::size_t workers = 0;  // 0 = hardware concurrency
};

struct BatchResult {
    std::map<Mode, std::vector<SessionTranscript>> transcripts;
    BenchReport report;
};

inline std::string pair_name(const AgentProfile& strong, const AgentProfile& weak) {
    return strong.name + "+" + weak.name;
}

// Runs `count` jobs on up to `workers` threads; job i writes slot i.
inline void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& job) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, std::max<std::size_t>(count, 1));
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        job(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

// Modes run one after another; sessions within a mode run in parallel and
// share `repo` through its writer gate.
inline BatchResult run_batch(const BatchSpec& spec, ExperienceStore& repo,
                             const AgentFactory& factory = default_agent_factory()) {
    BatchResult result;
    for (Mode mode : spec.modes) {
        SessionConfig cfg = spec.session;
        cfg.mode = mode;
        std::vector<SessionTranscript> out(spec.tasks.size());
        parallel_for(spec.tasks.size(), spec.workers, [&](std::size_t i) {
            const auto& task = spec.tasks[i];
            auto strong = factory(spec.strong, task);
            auto weak = factory(spec.weak, task);
            out[i] = run_session(task, cfg, *strong, *weak, mode == Mode::GuidedRag ? &repo : nullptr);
        });
        if (!out.empty()) {
            result.report.cells.push_back(compute_metrics({pair_name(spec.strong, spec.weak), mode, spec.dataset}, out));
        }
        result.transcripts[mode] = std::move(out);
    }
    return result;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

inline void write_transcript(const std::filesystem::path& out_dir, const SessionTranscript& t) {
    std::filesystem::create_directories(out_dir);
    write_text(out_dir / transcript_filename(t), transcript_to_json(t).dump(2) + "\n");
}

inline void write_batch_outputs(const std::filesystem::path& out_dir, const BatchResult& result) {
    std::filesystem::create_directories(out_dir);
    for (const auto& [mode, list] : result.transcripts) {
        for (const auto& t : list) write_transcript(out_dir, t);
    }
    write_text(out_dir / "summary.csv", render_report(result.report, ReportFormat::Csv));
    write_text(out_dir / "summary.md", render_report(result.report, ReportFormat::Markdown));
}

// ---------------------------------------------------------------------------
// Ingestion

// GSM8K layout: {"question": ..., "answer": "... #### 72"}.
inline TaskInstance ingest_gsm8k_record(const nlohmann::json& j, std::size_t index) {
    TaskInstance t;
    t.kind = TaskKind::Math;
    t.id = j.contains("id") ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump())
                            : "gsm8k-" + std::to_string(index);
    t.problem = j.at("question").get<std::string>();
    const std::string answer = j.at("answer").get<std::string>();
    auto pos = answer.rfind("####");
    if (pos == std::string::npos) throw DataError("gsm8k answer lacks a '####' final answer");
    auto value = extract_math_answer(answer.substr(pos));
    if (!value) throw DataError("gsm8k final answer is not a number");
    t.reference = MathReference{*value};
    return t;
}

// MBPP layout: {"task_id": 11, "text": ..., "code": ..., "test_list": [...]}.
inline TaskInstance ingest_mbpp_record(const nlohmann::json& j, std::size_t index) {
    TaskInstance t;
    t.kind = TaskKind::Code;
    t.id = j.contains("task_id") ? "mbpp-" + (j["task_id"].is_string() ? j["task_id"].get<std::string>()
                                                                        : j["task_id"].dump())
                                 : "mbpp-" + std::to_string(index);
    CodeReference ref;
    ref.tests = j.at("test_list").get<std::vector<std::string>>();
    static const std::regex def_re(R"(def\s+([A-Za-z_][A-Za-z0-9_]*)\s*\()");
    static const std::regex assert_re(R"(assert\s+\(?\s*([A-Za-z_][A-Za-z0-9_]*)\s*\()");
    std::smatch m;
    const std::string code = j.value("code", std::string{});
    if (std::regex_search(code, m, def_re)) {
        ref.entry_point = m[1];
    } else if (!ref.tests.empty() && std::regex_search(ref.tests.front(), m, assert_re)) {
        ref.entry_point = m[1];
    }
    t.problem = j.at("text").get<std::string>();
    if (!ref.entry_point.empty()) t.problem += "\nImplement it as a Python function named `" + ref.entry_point + "`.";
    if (!ref.tests.empty()) t.problem += "\nYour code should pass this test:\n" + ref.tests.front();
    t.reference = std::move(ref);
    return t;
}

inline std::size_t ingest_file(const std::string& format, const std::string& in_path, const std::string& out_path) {
    std::ifstream in(in_path);
    if (!in) throw DataError("cannot open " + in_path);
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + out_path);
    std::string line;
    std::size_t line_no = 0;
    std::size_t written = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto j = nlohmann::json::parse(line);
            TaskInstance t;
            if (format == "gsm8k") t = ingest_gsm8k_record(j, line_no);
            else if (format == "mbpp") t = ingest_mbpp_record(j, line_no);
            else throw ConfigError("unknown ingest format '" + format + "'");
            out << task_to_json(t).dump() << '\n';
            ++written;
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw DataError(in_path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return written;
}

}  // namespace entroguide
