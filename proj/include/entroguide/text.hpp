#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace entroguide {

// Token stream of a piece of text plus its occurrence counts.
struct TokenDistribution {
    std::vector<std::string> tokens;
    std::map<std::string, std::size_t> counts;
    std::size_t total = 0;

    double probability(const std::string& token) const {
        auto it = counts.find(token);
        if (it == counts.end() || total == 0) return 0.0;
        return static_cast<double>(it->second) / static_cast<double>(total);
    }
    std::size_t distinct() const { return counts.size(); }
};

inline bool is_token_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 &&
           static_cast<unsigned char>(c) < 0x80;
}

// Lowercased ASCII alphanumeric runs; everything else separates tokens.
inline std::vector<std::string> tokenize_words(std::string_view text) {
    std::vector<std::string> out;
    std::string current;
    for (char c : text) {
        if (is_token_char(c)) {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

inline TokenDistribution tokenize(std::string_view text) {
    TokenDistribution dist;
    dist.tokens = tokenize_words(text);
    for (const auto& t : dist.tokens) ++dist.counts[t];
    dist.total = dist.tokens.size();
    return dist;
}

inline bool is_numeric_token(std::string_view token) {
    return !token.empty() && std::all_of(token.begin(), token.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c)) != 0;
    });
}

inline std::string to_lower(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Non-overlapping occurrences of `needle` in `haystack`.
inline std::size_t count_substring(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return 0;
    std::size_t n = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++n;
    }
    return n;
}

// A lexicon or marker pattern. Patterns with at least one alphanumeric
// character match as consecutive whole tokens; purely symbolic patterns
// ("?", "```") match as raw substrings of the lowercased text.
class TextPattern {
public:
    TextPattern() = default;
    explicit TextPattern(std::string_view pattern)
        : raw_(to_lower(pattern)), words_(tokenize_words(pattern)) {}

    const std::string& text() const { return raw_; }
    bool symbolic() const { return words_.empty(); }

    std::size_t count_in(const std::vector<std::string>& tokens, std::string_view lowered_text) const {
        if (symbolic()) return count_substring(lowered_text, raw_);
        if (tokens.size() < words_.size()) return 0;
        std::size_t n = 0;
        for (std::size_t i = 0; i + words_.size() <= tokens.size(); ++i) {
            if (std::equal(words_.begin(), words_.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
                ++n;
                i += words_.size() - 1;
            }
        }
        return n;
    }

private:
    std::string raw_;
    std::vector<std::string> words_;
};

}  // namespace entroguide
