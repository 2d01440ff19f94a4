#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "inpars/endpoint.hpp"
#include "inpars/retrieval.hpp"

namespace inpars {

struct ScorePair {
    std::string_view query;
    std::string_view document;
};

/// Relevance of a query to a document; higher is more relevant. A nullopt
/// entry means the scorer failed on that pair.
class RelevanceScorer {
public:
    virtual ~RelevanceScorer() = default;

    virtual std::vector<std::optional<double>> score_batch(std::span<const ScorePair> pairs) const = 0;

    std::optional<double> score(std::string_view query, std::string_view document) const {
        ScorePair p{query, document};
        return score_batch(std::span<const ScorePair>(&p, 1)).front();
    }

    virtual std::string name() const = 0;
};

/// BM25 term-match score of the query against one document. With an index,
/// idf and average length come from the collection; without one the document
/// is scored as a collection of size one.
class LexicalScorer final : public RelevanceScorer {
public:
    explicit LexicalScorer(const Index* index = nullptr, AnalyzerConfig analyzer = {}, Bm25Params params = {})
        : index_(index),
          analyzer_(index ? index->analyzer_config() : analyzer),
          params_(index ? index->params() : params) {}

    std::vector<std::optional<double>> score_batch(std::span<const ScorePair> pairs) const override {
        std::vector<std::optional<double>> out;
        out.reserve(pairs.size());
        for (const auto& p : pairs) out.push_back(score_one(p.query, p.document));
        return out;
    }

    std::string name() const override { return "lexical"; }

private:
    double score_one(std::string_view query, std::string_view document) const {
        auto doc_tokens = analyzer_(document);
        std::unordered_map<std::string, std::uint32_t> tf;
        for (auto& t : doc_tokens) ++tf[t];
        const double len = static_cast<double>(doc_tokens.size());
        const double avg = index_ ? index_->avg_doc_length() : std::max(len, 1.0);
        const double n = index_ ? static_cast<double>(index_->doc_count()) : 1.0;
        double score = 0.0;
        for (const auto& term : analyzer_(query)) {
            auto it = tf.find(term);
            if (it == tf.end()) continue;
            double df = index_ ? static_cast<double>(index_->postings(term).size()) : 1.0;
            if (df < 1.0) df = 1.0;
            score += bm25_idf(n, df) * bm25_tf(it->second, len, avg, params_);
        }
        return score;
    }

    const Index* index_;
    Analyzer analyzer_;
    Bm25Params params_;
};

/// Scores pairs through an HTTP endpoint.
///   request:  POST <base>/score {"model": m, "pairs": [{"query": q, "document": d}, ...]}
///   response: {"scores": [s_1, ..., s_n]}   (null marks a failed pair)
/// A request that fails after retries marks its whole batch as failed.
class RemoteScorer final : public RelevanceScorer {
public:
    explicit RemoteScorer(EndpointConfig config, std::size_t batch_size = 32)
        : endpoint_(std::move(config)), batch_size_(batch_size == 0 ? 1 : batch_size) {}

    std::vector<std::optional<double>> score_batch(std::span<const ScorePair> pairs) const override {
        std::vector<std::optional<double>> out;
        out.reserve(pairs.size());
        for (std::size_t start = 0; start < pairs.size(); start += batch_size_) {
            auto chunk = pairs.subspan(start, std::min(batch_size_, pairs.size() - start));
            nlohmann::json body{{"model", endpoint_.config().model}, {"pairs", nlohmann::json::array()}};
            for (const auto& p : chunk)
                body["pairs"].push_back({{"query", std::string(p.query)}, {"document", std::string(p.document)}});
            std::vector<std::optional<double>> scores(chunk.size());
            try {
                auto res = endpoint_.post("/score", body);
                const auto& arr = res.at("scores");
                if (!arr.is_array() || arr.size() != chunk.size())
                    throw EndpointError("scorer returned " + std::to_string(arr.size()) + " scores for " +
                                        std::to_string(chunk.size()) + " pairs");
                for (std::size_t i = 0; i < chunk.size(); ++i)
                    if (arr[i].is_number() && std::isfinite(arr[i].get<double>())) scores[i] = arr[i].get<double>();
            } catch (const EndpointError&) {
            } catch (const nlohmann::json::exception&) {
            }
            out.insert(out.end(), scores.begin(), scores.end());
        }
        return out;
    }

    std::string name() const override { return "remote"; }

private:
    JsonEndpoint endpoint_;
    std::size_t batch_size_;
};

}  // namespace inpars
