#pragma once

// Experience repository: successful collaborations kept as records and
// retrieved by TF-IDF cosine similarity.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "entroguide/task.hpp"
#include "entroguide/text.hpp"
#include "entroguide/types.hpp"

namespace entroguide {

struct ExperienceRecord {
    std::uint64_t id = 0;
    std::string problem_text;
    std::vector<std::string> solution_steps;
    std::string final_answer;
    Difficulty difficulty = Difficulty::Easy;
    double success_entropy = 0.0;
    std::uint64_t usage_count = 0;
};

inline nlohmann::json record_to_json(const ExperienceRecord& r) {
    return {{"problem_text", r.problem_text}, {"solution_steps", r.solution_steps},
            {"final_answer", r.final_answer},  {"difficulty", to_string(r.difficulty)},
            {"success_entropy", r.success_entropy}, {"usage_count", r.usage_count},
            {"id", r.id}};
}

inline std::string record_to_line(const ExperienceRecord& r) { return record_to_json(r).dump(); }

inline ExperienceRecord record_from_json(const nlohmann::json& j) {
    ExperienceRecord r;
    r.problem_text = j.at("problem_text").get<std::string>();
    r.solution_steps = j.at("solution_steps").get<std::vector<std::string>>();
    r.final_answer = j.at("final_answer").get<std::string>();
    r.difficulty = parse_difficulty(j.at("difficulty").get<std::string>());
    r.success_entropy = j.at("success_entropy").get<double>();
    if (j.at("usage_count").get<double>() < 0) throw DataError("usage_count must be non-negative");
    r.usage_count = j.at("usage_count").get<std::uint64_t>();
    if (j.at("id").get<double>() < 0) throw DataError("id must be non-negative");
    r.id = j.at("id").get<std::uint64_t>();
    if (!(r.success_entropy >= 0.0)) throw DataError("success_entropy must be non-negative");
    return r;
}

// term -> weight
using SparseVector = std::map<std::string, double>;

struct VectorizerState {
    std::map<std::string, std::size_t> vocabulary;
    std::map<std::string, std::size_t> document_frequency;
    std::size_t record_count = 0;

    void add_document(std::string_view text) {
        const auto dist = tokenize(text);
        for (const auto& [term, _] : dist.counts) {
            vocabulary.try_emplace(term, vocabulary.size());
            ++document_frequency[term];
        }
        ++record_count;
    }

    bool invariants_hold() const {
        if (vocabulary.size() != document_frequency.size()) return false;
        for (const auto& [term, df] : document_frequency) {
            if (!vocabulary.count(term) || df < 1 || df > record_count) return false;
        }
        return true;
    }
};

// tf * ln(N / df) over terms known to the vectorizer.
inline SparseVector encode(std::string_view problem, const VectorizerState& state) {
    SparseVector v;
    if (state.record_count == 0) return v;
    const double n = static_cast<double>(state.record_count);
    for (const auto& [term, tf] : tokenize(problem).counts) {
        auto it = state.document_frequency.find(term);
        if (it == state.document_frequency.end()) continue;
        v[term] = static_cast<double>(tf) * std::log(n / static_cast<double>(it->second));
    }
    return v;
}

inline double cosine_similarity(const SparseVector& a, const SparseVector& b) {
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (const auto& [term, w] : a) {
        na += w * w;
        auto it = b.find(term);
        if (it != b.end()) dot += w * it->second;
    }
    for (const auto& [term, w] : b) nb += w * w;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct RetrievalHit {
    ExperienceRecord record;  // snapshot, usage_count as of retrieval
    double similarity = 0.0;
    bool injected = false;
};

struct RepositoryStats {
    std::size_t records = 0;
    std::size_t vocabulary_size = 0;
    std::map<std::size_t, std::size_t> df_histogram;  // df -> number of terms
};

// Thread-safe repository: many readers or one writer. Retrieval that
// injects hits counts as a write because it bumps usage counts.
class ExperienceStore {
public:
    ExperienceStore() = default;
    ExperienceStore(const ExperienceStore& other) {
        std::shared_lock lock(other.mutex_);
        records_ = other.records_;
        state_ = other.state_;
        next_id_ = other.next_id_;
    }
    ExperienceStore& operator=(const ExperienceStore&) = delete;

    std::uint64_t insert(ExperienceRecord record) {
        if (!(record.success_entropy >= 0.0)) throw DataError("success_entropy must be non-negative");
        std::unique_lock lock(mutex_);
        record.id = next_id_++;
        state_.add_document(record.problem_text);
        records_.push_back(std::move(record));
        return records_.back().id;
    }

    std::vector<RetrievalHit> retrieve_top_k(std::string_view problem, std::size_t k, double s_min) {
        if (k == 0) throw ConfigError("retrieval k must be >= 1");
        std::unique_lock lock(mutex_);
        auto hits = rank_locked(problem, k, s_min);
        for (auto& hit : hits) {
            if (!hit.injected) continue;
            for (auto& r : records_) {
                if (r.id == hit.record.id) {
                    ++r.usage_count;
                    hit.record.usage_count = r.usage_count;
                    break;
                }
            }
        }
        return hits;
    }

    // Same ranking as retrieve_top_k without touching usage counts.
    std::vector<RetrievalHit> rank(std::string_view problem, std::size_t k, double s_min) const {
        if (k == 0) throw ConfigError("retrieval k must be >= 1");
        std::shared_lock lock(mutex_);
        return rank_locked(problem, k, s_min);
    }

    SparseVector encode(std::string_view problem) const {
        std::shared_lock lock(mutex_);
        return entroguide::encode(problem, state_);
    }

    std::vector<ExperienceRecord> records() const {
        std::shared_lock lock(mutex_);
        return records_;
    }

    VectorizerState vectorizer() const {
        std::shared_lock lock(mutex_);
        return state_;
    }

    std::size_t size() const {
        std::shared_lock lock(mutex_);
        return records_.size();
    }

    RepositoryStats stats() const {
        std::shared_lock lock(mutex_);
        RepositoryStats s;
        s.records = records_.size();
        s.vocabulary_size = state_.vocabulary.size();
        for (const auto& [term, df] : state_.document_frequency) ++s.df_histogram[df];
        return s;
    }

    void save(const std::string& path) const {
        std::shared_lock lock(mutex_);
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw DataError("cannot write repository " + path);
        for (const auto& r : records_) out << record_to_line(r) << '\n';
        if (!out) throw DataError("failed writing repository " + path);
    }

    static ExperienceStore load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot read repository " + path);
        ExperienceStore store;
        std::string line;
        std::size_t line_no = 0;
        bool have_last = false;
        std::uint64_t last_id = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            ExperienceRecord r;
            try {
                r = record_from_json(nlohmann::json::parse(line));
            } catch (const std::exception& e) {
                throw DataError(path + ": malformed record on line " + std::to_string(line_no) + ": " + e.what());
            }
            if (have_last && r.id <= last_id) {
                throw DataError(path + ": record ids must increase (line " + std::to_string(line_no) + ")");
            }
            have_last = true;
            last_id = r.id;
            store.state_.add_document(r.problem_text);
            store.records_.push_back(std::move(r));
        }
        store.next_id_ = have_last ? last_id + 1 : 0;
        if (store.state_.record_count != store.records_.size() || !store.state_.invariants_hold()) {
            throw DataError(path + ": vectorizer invariants violated after rebuild");
        }
        return store;
    }

private:
    std::vector<RetrievalHit> rank_locked(std::string_view problem, std::size_t k, double s_min) const {
        const SparseVector query = entroguide::encode(problem, state_);
        std::vector<RetrievalHit> all;
        all.reserve(records_.size());
        for (const auto& r : records_) {
            const double sim = cosine_similarity(query, entroguide::encode(r.problem_text, state_));
            all.push_back({r, sim, false});
        }
        auto before = [](const RetrievalHit& a, const RetrievalHit& b) {
            if (a.similarity != b.similarity) return a.similarity > b.similarity;
            if (a.record.usage_count != b.record.usage_count) return a.record.usage_count > b.record.usage_count;
            return a.record.id < b.record.id;
        };
        const std::size_t take = std::min(k, all.size());
        std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), before);
        all.resize(take);
        for (auto& hit : all) hit.injected = hit.similarity >= s_min;
        return all;
    }

    mutable std::shared_mutex mutex_;
    std::vector<ExperienceRecord> records_;
    VectorizerState state_;
    std::uint64_t next_id_ = 0;
};

// Labeled difficulty, else a per-kind size heuristic.
inline Difficulty classify_difficulty(const TaskInstance& task) {
    if (task.difficulty) return *task.difficulty;
    auto bucket = [](std::size_t n, std::size_t easy_max, std::size_t medium_max) {
        if (n <= easy_max) return Difficulty::Easy;
        if (n <= medium_max) return Difficulty::Medium;
        return Difficulty::Hard;
    };
    switch (task.kind) {
        case TaskKind::Math: {
            const auto tokens = tokenize_words(task.problem);
            auto numbers = static_cast<std::size_t>(std::count_if(tokens.begin(), tokens.end(),
                                                                  [](const std::string& t) { return is_numeric_token(t); }));
            return bucket(numbers, 2, 4);
        }
        case TaskKind::Code: {
            std::size_t tests = 0;
            if (task.reference) {
                if (auto* c = std::get_if<CodeReference>(&*task.reference)) tests = c->tests.size();
            }
            return bucket(tests, 3, 5);
        }
        case TaskKind::Routing: {
            const auto* inst = task.routing();
            return bucket(inst ? inst->customers.size() : 0, 5, 10);
        }
    }
    return Difficulty::Medium;
}

}  // namespace entroguide
