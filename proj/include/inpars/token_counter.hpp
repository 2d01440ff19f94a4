#pragma once

#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "inpars/error.hpp"
#include "inpars/text.hpp"

namespace inpars {

/// Counts tokens the way some model tokenizer would.
class TokenCounter {
public:
    virtual ~TokenCounter() = default;

    virtual std::size_t count(std::string_view text) const = 0;

    /// Longest prefix of `text` (cut at a token boundary) holding at most
    /// `max_tokens` tokens.
    virtual std::string_view truncate(std::string_view text, std::size_t max_tokens) const = 0;

    virtual std::string name() const = 0;
};

class WhitespaceTokenCounter final : public TokenCounter {
public:
    std::size_t count(std::string_view text) const override { return text::count_words(text); }

    std::string_view truncate(std::string_view text, std::size_t max_tokens) const override {
        if (max_tokens == 0) return text.substr(0, 0);
        std::size_t seen = 0;
        std::size_t i = 0;
        while (i < text.size()) {
            while (i < text.size() && text::is_space(text[i])) ++i;
            if (i == text.size()) break;
            while (i < text.size() && !text::is_space(text[i])) ++i;
            if (++seen == max_tokens) return text.substr(0, i);
        }
        return text;
    }

    std::string name() const override { return "whitespace"; }
};

/// Byte-level BPE counter driven by a GPT-2 style merges file ("a b" per line,
/// optional "#version" header). With the GPT-2/GPT-J merges this reproduces
/// the model's token counts for ASCII text; pre-tokenization of non-ASCII
/// letters is approximate.
class BpeTokenCounter final : public TokenCounter {
public:
    static BpeTokenCounter from_file(const std::string& merges_path) {
        std::ifstream in(merges_path);
        if (!in) throw Error("cannot open BPE merges file: " + merges_path);
        std::vector<std::pair<std::string, std::string>> merges;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            line = text::strip_cr(std::move(line));
            if (line.empty() || line.rfind("#version", 0) == 0) continue;
            auto sp = line.find(' ');
            if (sp == std::string::npos || sp == 0 || sp + 1 == line.size())
                throw ParseError(merges_path, lineno, line, "expected two space-separated symbols");
            merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
        }
        return BpeTokenCounter(std::move(merges));
    }

    explicit BpeTokenCounter(const std::vector<std::pair<std::string, std::string>>& merges)
        : byte_symbols_(make_byte_symbols()), cache_(std::make_unique<Cache>()) {
        for (std::size_t i = 0; i < merges.size(); ++i)
            ranks_.emplace(merges[i].first + '\x01' + merges[i].second, i);
    }

    std::size_t count(std::string_view text) const override {
        std::size_t n = 0;
        for (auto piece : pretokenize(text)) n += piece_tokens(piece);
        return n;
    }

    std::string_view truncate(std::string_view text, std::size_t max_tokens) const override {
        std::size_t used = 0;
        std::size_t end = 0;
        for (auto piece : pretokenize(text)) {
            std::size_t t = piece_tokens(piece);
            if (used + t > max_tokens) break;
            used += t;
            end = static_cast<std::size_t>(piece.data() - text.data()) + piece.size();
        }
        return text.substr(0, end);
    }

    std::string name() const override { return "bpe"; }

    std::size_t merge_count() const { return ranks_.size(); }

private:
    struct Cache {
        std::mutex mu;
        std::unordered_map<std::string, std::size_t> counts;
    };

    static bool is_letter(unsigned char c) { return std::isalpha(c) || c >= 0x80; }
    static bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

    /// Approximates the GPT-2 pre-tokenizer pattern:
    /// 's|'t|'re|'ve|'m|'ll|'d| ?L+| ?N+| ?[^\sLN]+|\s+(?!\S)|\s+
    static std::vector<std::string_view> pretokenize(std::string_view s) {
        auto cls = [](char ch) {
            auto c = static_cast<unsigned char>(ch);
            if (text::is_space(ch)) return 0;
            if (is_letter(c)) return 1;
            if (is_digit(c)) return 2;
            return 3;
        };
        static constexpr std::array<std::string_view, 7> contractions = {"'s", "'t", "'re", "'ve", "'m", "'ll", "'d"};

        std::vector<std::string_view> out;
        const std::size_t n = s.size();
        std::size_t i = 0;
        while (i < n) {
            if (s[i] == '\'') {
                bool matched = false;
                for (auto c : contractions) {
                    if (s.substr(i, c.size()) == c) {
                        out.push_back(s.substr(i, c.size()));
                        i += c.size();
                        matched = true;
                        break;
                    }
                }
                if (matched) continue;
            }
            std::size_t start = i;
            if (cls(s[i]) == 0) {
                std::size_t j = i;
                while (j < n && cls(s[j]) == 0) ++j;
                if (j == n) {
                    out.push_back(s.substr(i));
                    break;
                }
                if (j - i > 1) out.push_back(s.substr(i, j - 1 - i));
                if (s[j - 1] != ' ') {
                    out.push_back(s.substr(j - 1, 1));
                    i = j;
                    continue;
                }
                start = j - 1;
                i = j;
            }
            int k = cls(s[i]);
            while (i < n && cls(s[i]) == k) ++i;
            out.push_back(s.substr(start, i - start));
        }
        return out;
    }

    std::size_t piece_tokens(std::string_view piece) const {
        if (piece.empty()) return 0;
        {
            std::lock_guard lock(cache_->mu);
            auto it = cache_->counts.find(std::string(piece));
            if (it != cache_->counts.end()) return it->second;
        }
        std::vector<std::string> symbols;
        symbols.reserve(piece.size());
        for (unsigned char c : piece) symbols.push_back(byte_symbols_[c]);
        while (symbols.size() > 1) {
            std::size_t best = std::numeric_limits<std::size_t>::max();
            std::size_t best_at = 0;
            for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
                auto it = ranks_.find(symbols[i] + '\x01' + symbols[i + 1]);
                if (it != ranks_.end() && it->second < best) {
                    best = it->second;
                    best_at = i;
                }
            }
            if (best == std::numeric_limits<std::size_t>::max()) break;
            const std::string left = symbols[best_at];
            const std::string right = symbols[best_at + 1];
            std::vector<std::string> merged;
            merged.reserve(symbols.size());
            for (std::size_t i = 0; i < symbols.size(); ++i) {
                if (i + 1 < symbols.size() && symbols[i] == left && symbols[i + 1] == right) {
                    merged.push_back(left + right);
                    ++i;
                } else {
                    merged.push_back(symbols[i]);
                }
            }
            symbols = std::move(merged);
        }
        std::lock_guard lock(cache_->mu);
        cache_->counts.emplace(std::string(piece), symbols.size());
        return symbols.size();
    }

    // GPT-2's reversible byte -> printable code point table, UTF-8 encoded.
    static std::array<std::string, 256> make_byte_symbols() {
        std::array<std::string, 256> table;
        int extra = 0;
        for (int b = 0; b < 256; ++b) {
            bool printable = (b >= 33 && b <= 126) || (b >= 161 && b <= 172) || (b >= 174 && b <= 255);
            unsigned cp = printable ? static_cast<unsigned>(b) : static_cast<unsigned>(256 + extra++);
            std::string u;
            if (cp < 0x80) {
                u.push_back(static_cast<char>(cp));
            } else {
                u.push_back(static_cast<char>(0xC0 | (cp >> 6)));
                u.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
            }
            table[static_cast<std::size_t>(b)] = u;
        }
        return table;
    }

    std::array<std::string, 256> byte_symbols_;
    std::unordered_map<std::string, std::size_t> ranks_;
    std::unique_ptr<Cache> cache_;
};

}  // namespace inpars
