#pragma once

// Deterministic answer checkers for the three task kinds.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <regex>
#include <string>
#include <string_view>
#include <thread>

#include <fcntl.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "entroguide/routing.hpp"
#include "entroguide/task.hpp"
#include "entroguide/text.hpp"

namespace entroguide {

// ---------------------------------------------------------------------------
// Math

namespace detail {

inline const std::regex& number_regex() {
    static const std::regex re(R"(-?(?:[0-9]{1,3}(?:,[0-9]{3})+|[0-9]+)(?:\.[0-9]+)?)");
    return re;
}

inline double parse_number(std::string text) {
    text.erase(std::remove(text.begin(), text.end(), ','), text.end());
    return std::stod(text);
}

}  // namespace detail

// Number after the last "####", "answer:" or "=" marker, else the last number.
inline std::optional<double> extract_math_answer(std::string_view response) {
    const std::string lowered = to_lower(response);
    std::size_t marker_end = std::string::npos;
    for (std::string_view marker : {"####", "answer:", "="}) {
        auto pos = lowered.rfind(marker);
        if (pos == std::string::npos) continue;
        auto end = pos + marker.size();
        if (marker_end == std::string::npos || end > marker_end) marker_end = end;
    }
    const auto& re = detail::number_regex();
    if (marker_end != std::string::npos) {
        std::smatch m;
        std::string tail = lowered.substr(marker_end);
        if (std::regex_search(tail, m, re)) return detail::parse_number(m.str());
    }
    std::optional<double> last;
    for (auto it = std::sregex_iterator(lowered.begin(), lowered.end(), re); it != std::sregex_iterator(); ++it) {
        last = detail::parse_number(it->str());
    }
    return last;
}

inline bool numbers_match(double candidate, double reference) {
    return std::fabs(candidate - reference) <= std::max(1e-9, 1e-6 * std::fabs(reference));
}

inline bool check_math(std::string_view response, double reference) {
    auto got = extract_math_answer(response);
    return got && numbers_match(*got, reference);
}

// ---------------------------------------------------------------------------
// Code

enum class CodeVerdict { Pass, Fail, Skipped };

inline std::string_view to_string(CodeVerdict v) {
    switch (v) {
        case CodeVerdict::Pass: return "pass";
        case CodeVerdict::Fail: return "fail";
        case CodeVerdict::Skipped: return "skipped";
    }
    return "skipped";
}

struct CodeCheck {
    CodeVerdict verdict = CodeVerdict::Skipped;
    std::string note;
};

// External command that executes a candidate program. "{file}" in the
// command is replaced by the program path; otherwise the path is appended.
struct SandboxConfig {
    std::string command;
    double timeout_s = 10.0;

    bool enabled() const { return !command.empty(); }
};

// First fenced block (language tag dropped), or the whole response.
inline std::string extract_code_block(std::string_view response) {
    auto open = response.find("```");
    if (open == std::string_view::npos) return std::string(response);
    auto body_start = response.find('\n', open);
    if (body_start == std::string_view::npos) return std::string(response);
    ++body_start;
    auto close = response.find("```", body_start);
    if (close == std::string_view::npos) return std::string(response.substr(body_start));
    return std::string(response.substr(body_start, close - body_start));
}

namespace detail {

// Runs `/bin/sh -c command` in its own process group. Returns the exit
// status, or nullopt on timeout (the group is killed).
inline std::optional<int> run_with_timeout(const std::string& command, std::chrono::milliseconds timeout) {
    pid_t pid = fork();
    if (pid < 0) throw Error("fork failed");
    if (pid == 0) {
        setpgid(0, 0);
        int devnull = open("/dev/null", O_RDWR);
        if (devnull >= 0) {
            dup2(devnull, STDIN_FILENO);
            dup2(devnull, STDOUT_FILENO);
            dup2(devnull, STDERR_FILENO);
        }
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    setpgid(pid, pid);
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    int status = 0;
    while (true) {
        pid_t r = waitpid(pid, &status, WNOHANG);
        if (r == pid) break;
        if (r < 0) return 127;
        if (std::chrono::steady_clock::now() >= deadline) {
            kill(-pid, SIGKILL);
            waitpid(pid, &status, 0);
            return std::nullopt;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

}  // namespace detail

inline CodeCheck check_code(std::string_view response, const CodeReference& reference, const SandboxConfig& sandbox) {
    if (!sandbox.enabled()) return {CodeVerdict::Skipped, "no sandbox command configured"};

    std::string program = extract_code_block(response);
    program += "\n\n";
    for (const auto& t : reference.tests) program += t + "\n";

    namespace fs = std::filesystem;
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    const fs::path dir = fs::temp_directory_path() / ("entroguide-" + std::to_string(rng()));
    fs::create_directories(dir);
    const fs::path file = dir / "candidate.py";
    {
        std::ofstream out(file);
        out << program;
    }
    std::string command = sandbox.command;
    const std::string quoted = "'" + file.string() + "'";
    if (auto pos = command.find("{file}"); pos != std::string::npos) {
        command.replace(pos, 6, quoted);
    } else {
        command += " " + quoted;
    }
    auto timeout = std::chrono::milliseconds(static_cast<long long>(sandbox.timeout_s * 1000.0));
    auto status = detail::run_with_timeout(command, timeout);
    std::error_code ec;
    fs::remove_all(dir, ec);
    if (!status) return {CodeVerdict::Fail, "timeout after " + std::to_string(sandbox.timeout_s) + " s"};
    if (*status == 0) return {CodeVerdict::Pass, ""};
    return {CodeVerdict::Fail, "exit status " + std::to_string(*status)};
}

}  // namespace entroguide
