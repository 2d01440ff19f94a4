#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "inpars/porter_stemmer.hpp"

namespace inpars {

struct AnalyzerConfig {
    bool stopwords = true;
    bool stemming = true;

    friend bool operator==(const AnalyzerConfig&, const AnalyzerConfig&) = default;
};

/// Lucene's default English stop set.
inline constexpr std::array<std::string_view, 33> kEnglishStopwords = {
    "a",    "an",    "and",  "are",  "as",    "at",   "be",    "but",   "by",  "for",  "if",
    "in",   "into",  "is",   "it",   "no",    "not",  "of",    "on",    "or",  "such", "that",
    "the",  "their", "then", "there", "these", "they", "this", "to",   "was", "will", "with"};

inline bool is_stopword(std::string_view term) {
    for (auto s : kEnglishStopwords)
        if (s == term) return true;
    return false;
}

/// Lowercases, splits on ASCII non-alphanumerics (bytes >= 0x80 stay inside
/// tokens so UTF-8 words survive), then optionally drops stopwords and
/// Porter-stems pure-ASCII tokens.
class Analyzer {
public:
    explicit Analyzer(AnalyzerConfig config = {}) : config_(config) {}

    std::vector<std::string> operator()(std::string_view s) const {
        std::vector<std::string> out;
        std::string cur;
        PorterStemmer stem;
        auto flush = [&] {
            if (cur.empty()) return;
            if (!(config_.stopwords && is_stopword(cur))) {
                bool ascii = true;
                for (unsigned char c : cur) ascii = ascii && c < 0x80;
                out.push_back(config_.stemming && ascii ? stem(cur) : cur);
            }
            cur.clear();
        };
        for (unsigned char c : s) {
            if (c >= 'A' && c <= 'Z') {
                cur.push_back(static_cast<char>(c - 'A' + 'a'));
            } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c >= 0x80) {
                cur.push_back(static_cast<char>(c));
            } else {
                flush();
            }
        }
        flush();
        return out;
    }

    const AnalyzerConfig& config() const { return config_; }

private:
    AnalyzerConfig config_;
};

}  // namespace inpars
