#pragma once

// Independent reference implementations used to check the library.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "inpars/analyzer.hpp"
#include "inpars/dataset.hpp"
#include "inpars/retrieval.hpp"

namespace oracle {

/// Mean in long double with compensated summation.
inline long double extended_mean(const std::vector<double>& xs) {
    long double sum = 0, comp = 0;
    for (double d : xs) {
        long double x = d, t = sum + x;
        if (std::fabs(sum) >= std::fabs(x))
            comp += (sum - t) + x;
        else
            comp += (x - t) + sum;
        sum = t;
    }
    return (sum + comp) / static_cast<long double>(xs.size());
}

/// Scores every document directly: BM25 summed over query tokens in order
/// (repeats count), documents matching nothing dropped, ties by ascending
/// doc_id. Document frequencies come from a scan of all documents.
class Bm25Oracle {
public:
    Bm25Oracle(const inpars::Corpus& corpus, inpars::AnalyzerConfig ac = {}, inpars::Bm25Params p = {})
        : analyze_(ac), params_(p) {
        for (const auto& d : corpus.documents()) {
            ids_.push_back(d.doc_id);
            docs_.push_back(analyze_(d.flattened()));
        }
        double total = 0;
        for (const auto& d : docs_) total += static_cast<double>(d.size());
        avg_ = total / static_cast<double>(docs_.size());
        if (avg_ <= 0) avg_ = 1.0;
    }

    std::vector<std::pair<std::string, double>> rank(const std::string& query) const {
        const double n = static_cast<double>(docs_.size());
        const auto q = analyze_(query);
        std::map<std::string, double> df;
        for (const auto& term : q) {
            if (df.count(term)) continue;
            double c = 0;
            for (const auto& d : docs_) c += std::find(d.begin(), d.end(), term) != d.end();
            df[term] = c;
        }
        std::vector<std::pair<std::string, double>> scored;
        for (std::size_t i = 0; i < docs_.size(); ++i) {
            double score = 0;
            bool matched = false;
            for (const auto& term : q) {
                double tf = static_cast<double>(std::count(docs_[i].begin(), docs_[i].end(), term));
                if (tf == 0) continue;
                double idf = std::log(1.0 + (n - df[term] + 0.5) / (df[term] + 0.5));
                double len = static_cast<double>(docs_[i].size());
                score += idf * (tf * (params_.k1 + 1.0) /
                                (tf + params_.k1 * (1.0 - params_.b + params_.b * len / avg_)));
                matched = true;
            }
            if (matched) scored.emplace_back(ids_[i], score);
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        return scored;
    }

private:
    inpars::Analyzer analyze_;
    inpars::Bm25Params params_;
    std::vector<std::string> ids_;
    std::vector<std::vector<std::string>> docs_;
    double avg_ = 1.0;
};

/// Random corpus over a small vocabulary so that terms repeat, documents
/// collide (equal scores) and some documents are empty after analysis.
inline inpars::Corpus random_corpus(std::mt19937_64& rng, std::size_t n_docs) {
    static const std::vector<std::string> vocab = {
        "apple", "banana", "cherry", "grape", "lemon", "mango", "olive", "peach", "pear", "plum",
        "running", "runs", "runner", "the", "and", "of", "quick", "quickly", "brown", "fox",
        "jumps", "jumping", "lazy", "dog", "dogs", "42", "x1", "caf\xc3\xa9", "Apple", "PEACH"};
    std::uniform_int_distribution<std::size_t> len_dist(0, 12), word(0, vocab.size() - 1);
    std::uniform_int_distribution<int> coin(0, 9);
    inpars::Corpus corpus;
    std::vector<std::string> previous;
    while (corpus.size() < n_docs) {
        std::string id = "doc" + std::to_string(rng() % (n_docs * 20));
        std::string text;
        if (!previous.empty() && coin(rng) == 0) {
            text = previous[rng() % previous.size()];
        } else {
            auto len = len_dist(rng);
            for (std::size_t i = 0; i < len; ++i) text += (i ? " " : "") + vocab[word(rng)];
        }
        if (corpus.add({id, coin(rng) < 3 ? vocab[word(rng)] : "", text})) previous.push_back(text);
    }
    return corpus;
}

inline std::string random_query(std::mt19937_64& rng) {
    static const std::vector<std::string> words = {"apple", "peach", "runner", "dog", "the", "quick", "jumped",
                                                   "fox", "lemon", "zebra", "42", "pear", "Pears", "olive"};
    std::string q;
    auto len = 1 + rng() % 5;
    for (std::size_t i = 0; i < len; ++i) q += (i ? " " : "") + words[rng() % words.size()];
    return q;
}

/// trec_eval ordering: score descending, then doc_id descending.
inline std::vector<std::string> trec_order(std::vector<std::pair<std::string, double>> scored) {
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        return a.second > b.second || (a.second == b.second && a.first > b.first);
    });
    std::vector<std::string> out;
    for (auto& [d, s] : scored) out.push_back(d);
    return out;
}

struct Metrics {
    double ndcg = 0, recall = 0, mrr = 0;
};

/// Metrics for one ranking given judgments; ideal DCG found by trying every
/// ordering of the judged documents.
inline Metrics exhaustive_metrics(const std::vector<std::string>& ranking, const std::map<std::string, int>& rels,
                                  std::size_t k) {
    auto gain = [](int r) { return r > 0 ? std::pow(2.0, r) - 1.0 : 0.0; };
    auto rel_of = [&](const std::string& d) {
        auto it = rels.find(d);
        return it == rels.end() ? 0 : it->second;
    };
    Metrics m;
    double dcg = 0;
    for (std::size_t i = 0; i < ranking.size() && i < k; ++i)
        dcg += gain(rel_of(ranking[i])) / std::log2(static_cast<double>(i) + 2.0);

    std::vector<std::string> judged;
    for (const auto& [d, r] : rels) judged.push_back(d);
    std::sort(judged.begin(), judged.end());
    double best = 0;
    do {
        double v = 0;
        for (std::size_t i = 0; i < judged.size() && i < k; ++i)
            v += gain(rel_of(judged[i])) / std::log2(static_cast<double>(i) + 2.0);
        best = std::max(best, v);
    } while (std::next_permutation(judged.begin(), judged.end()));
    m.ndcg = best > 0 ? dcg / best : 0.0;

    std::size_t relevant = 0, found = 0;
    for (const auto& [d, r] : rels) relevant += r >= 1;
    for (std::size_t i = 0; i < ranking.size() && i < k; ++i) found += rel_of(ranking[i]) >= 1;
    m.recall = relevant ? static_cast<double>(found) / static_cast<double>(relevant) : 0.0;
    for (std::size_t i = 0; i < ranking.size() && i < k; ++i) {
        if (rel_of(ranking[i]) >= 1) {
            m.mrr = 1.0 / static_cast<double>(i + 1);
            break;
        }
    }
    return m;
}

}  // namespace oracle
