#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "inpars/error.hpp"
#include "inpars/generation.hpp"
#include "inpars/parallel.hpp"
#include "inpars/scorer.hpp"
#include "inpars/token_counter.hpp"

namespace inpars {

enum class FilterStrategy { scores, reranker };

inline std::string_view to_string(FilterStrategy s) { return s == FilterStrategy::scores ? "scores" : "reranker"; }

inline FilterStrategy parse_filter_strategy(std::string_view s) {
    if (s == "scores") return FilterStrategy::scores;
    if (s == "reranker") return FilterStrategy::reranker;
    throw ConfigError("unknown filter strategy '" + std::string(s) + "' (expected scores or reranker)");
}

struct FilterConfig {
    std::size_t min_tokens = 3;
    std::size_t max_tokens = 64;
    bool skip_copied = false;
    FilterStrategy strategy = FilterStrategy::scores;
    std::size_t keep_top_k = 10'000;

    void validate() const {
        if (min_tokens > max_tokens) throw ConfigError("min_tokens must not exceed max_tokens");
        if (keep_top_k == 0) throw ConfigError("keep_top_k must be >= 1");
    }
};

struct ScoredRecord {
    GeneratedRecord record;
    double score = 0;
    FilterStrategy strategy = FilterStrategy::scores;
};

struct DroppedRecord {
    GeneratedRecord record;
    /// too_short, too_long, copied, empty_logprobs, scorer_failed
    std::string reason;
};

namespace detail {

inline bool is_ascii_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

inline std::string collapse_lower(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : text::trim(s)) {
        if (text::is_space(c)) {
            pending_space = true;
            continue;
        }
        if (pending_space && !out.empty()) out += ' ';
        pending_space = false;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

}  // namespace detail

/// Lowercased, whitespace-collapsed query with leading and trailing
/// punctuation removed; the form used for copy detection.
inline std::string normalize_query_for_copy_check(std::string_view query) {
    std::string q = detail::collapse_lower(query);
    std::size_t b = 0, e = q.size();
    while (b < e && (detail::is_ascii_punct(q[b]) || q[b] == ' ')) ++b;
    while (e > b && (detail::is_ascii_punct(q[e - 1]) || q[e - 1] == ' ')) --e;
    return q.substr(b, e - b);
}

/// True when the normalized query occurs verbatim in the normalized document.
inline bool is_copied_from_document(std::string_view query, std::string_view document) {
    auto q = normalize_query_for_copy_check(query);
    if (q.empty()) return false;
    return detail::collapse_lower(document).find(q) != std::string::npos;
}

struct PrefilterResult {
    std::vector<GeneratedRecord> kept;
    std::vector<DroppedRecord> dropped;
};

/// Keeps records whose query token count lies in [min_tokens, max_tokens] and,
/// with skip_copied, whose query is not copied from the source document.
inline PrefilterResult prefilter(const std::vector<GeneratedRecord>& records, const FilterConfig& config,
                                 const TokenCounter& counter) {
    config.validate();
    PrefilterResult out;
    for (const auto& r : records) {
        const auto n = counter.count(r.query_text);
        if (n < config.min_tokens)
            out.dropped.push_back({r, "too_short"});
        else if (n > config.max_tokens)
            out.dropped.push_back({r, "too_long"});
        else if (config.skip_copied && is_copied_from_document(r.query_text, r.doc_text))
            out.dropped.push_back({r, "copied"});
        else
            out.kept.push_back(r);
    }
    return out;
}

/// Mean per-token log-probability of the generated query.
inline double score_by_logprob(std::span<const double> token_logprobs) {
    if (token_logprobs.empty()) throw Error("cannot score a query without token log-probabilities");
    // Neumaier summation keeps the mean within a few ulps for long lists.
    double sum = 0.0, comp = 0.0;
    for (double x : token_logprobs) {
        double t = sum + x;
        if (std::fabs(sum) >= std::fabs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    return (sum + comp) / static_cast<double>(token_logprobs.size());
}

inline double score_by_logprob(const GeneratedRecord& r) { return score_by_logprob(std::span<const double>(r.token_logprobs)); }

struct FilterResult {
    std::vector<ScoredRecord> kept;
    std::vector<DroppedRecord> dropped;
    std::vector<std::string> warnings;
};

/// Scores every record with the configured strategy and keeps the
/// keep_top_k best, ordered by descending score with ties in input order.
/// Records that cannot be scored are dropped with a reason; records that
/// merely fall below the cut are not reported as drops.
inline FilterResult filter_top_k(const std::vector<GeneratedRecord>& records, const FilterConfig& config,
                                 const RelevanceScorer* scorer = nullptr, std::size_t scorer_chunk = 256,
                                 std::size_t threads = default_thread_count()) {
    config.validate();
    if (config.strategy == FilterStrategy::reranker && !scorer)
        throw ConfigError("the reranker filter strategy needs a relevance scorer");

    FilterResult out;
    std::vector<std::optional<double>> scores(records.size());
    if (config.strategy == FilterStrategy::scores) {
        for (std::size_t i = 0; i < records.size(); ++i)
            if (!records[i].token_logprobs.empty()) scores[i] = score_by_logprob(records[i]);
    } else {
        const std::size_t chunk = std::max<std::size_t>(1, scorer_chunk);
        const std::size_t chunks = (records.size() + chunk - 1) / chunk;
        parallel_for(
            chunks,
            [&](std::size_t c) {
                const std::size_t begin = c * chunk, end = std::min(records.size(), begin + chunk);
                std::vector<ScorePair> pairs;
                for (std::size_t i = begin; i < end; ++i) pairs.push_back({records[i].query_text, records[i].doc_text});
                auto s = scorer->score_batch(pairs);
                for (std::size_t i = begin; i < end; ++i) {
                    auto v = i - begin < s.size() ? s[i - begin] : std::nullopt;
                    if (v && std::isfinite(*v)) scores[i] = v;
                }
            },
            threads);
    }

    std::vector<std::size_t> order;
    order.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (scores[i]) {
            order.push_back(i);
        } else {
            out.dropped.push_back(
                {records[i], config.strategy == FilterStrategy::scores ? "empty_logprobs" : "scorer_failed"});
        }
    }
    const std::size_t take = std::min(config.keep_top_k, order.size());
    if (order.size() < config.keep_top_k)
        out.warnings.push_back("only " + std::to_string(order.size()) + " scored records available; keep_top_k is " +
                               std::to_string(config.keep_top_k));
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (*scores[a] != *scores[b]) return *scores[a] > *scores[b];
                          return a < b;
                      });
    out.kept.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.kept.push_back({records[order[i]], *scores[order[i]], config.strategy});
    return out;
}

inline nlohmann::ordered_json to_json(const ScoredRecord& r) {
    auto j = to_json(r.record);
    j["score"] = r.score;
    j["strategy"] = to_string(r.strategy);
    return j;
}

inline nlohmann::ordered_json to_json(const DroppedRecord& r) {
    nlohmann::ordered_json j;
    j["doc_id"] = r.record.doc_id;
    j["sample_index"] = r.record.sample_index;
    j["query"] = r.record.query_text;
    j["reason"] = r.reason;
    return j;
}

}  // namespace inpars
