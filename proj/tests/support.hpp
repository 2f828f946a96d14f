#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "entroguide/entroguide.hpp"

namespace test_support {

inline std::filesystem::path fixture(const std::string& rel) { return std::filesystem::path(ENTROGUIDE_FIXTURE_DIR) / rel; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("entroguide-test-" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

inline const std::vector<std::string>& word_pool() {
    static const std::vector<std::string> kWords = {
        "route", "depot", "area", "width", "length", "first", "then", "therefore", "maybe", "so",
        "sum", "total", "apple", "train", "speed", "hour", "cost", "price", "value", "number",
        "list", "return", "if", "for", "vehicle", "capacity", "next", "guess", "step", "because",
        "7", "12", "40", "3", "5", "100", "i", "think", "not", "sure"};
    return kWords;
}

// Random short text over the shared pool with random punctuation.
inline std::string random_text(std::mt19937_64& rng, std::size_t min_words, std::size_t max_words) {
    static const std::vector<std::string> kSeps = {" ", " ", " ", ", ", ". ", " = ", "? ", "\n", " -> "};
    const auto& pool = word_pool();
    std::uniform_int_distribution<std::size_t> len(min_words, max_words);
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::uniform_int_distribution<std::size_t> sep(0, kSeps.size() - 1);
    std::uniform_int_distribution<int> upper(0, 5);
    std::string out;
    const std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += kSeps[sep(rng)];
        std::string w = pool[pick(rng)];
        if (upper(rng) == 0 && !w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
        out += w;
    }
    return out;
}

inline entroguide::AgentProfile scripted_profile(const std::string& name, entroguide::Strength s) {
    entroguide::AgentProfile p;
    p.name = name;
    p.strength = s;
    p.backend = entroguide::ScriptedSource{};
    return p;
}

inline entroguide::Clock fixed_clock() {
    return [] { return std::int64_t{1700000000000}; };
}

inline entroguide::TaskInstance math_task(const std::string& id, const std::string& problem, double answer) {
    entroguide::TaskInstance t;
    t.id = id;
    t.kind = entroguide::TaskKind::Math;
    t.problem = problem;
    t.reference = entroguide::MathReference{answer};
    return t;
}

}  // namespace test_support
