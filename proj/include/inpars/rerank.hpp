#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "inpars/dataset.hpp"
#include "inpars/parallel.hpp"
#include "inpars/run.hpp"
#include "inpars/scorer.hpp"

namespace inpars {

struct RerankResult {
    Run run;
    std::vector<std::string> warnings;
};

/// Rescores the top `depth` candidates (by prior rank) of every query with
/// `scorer` and sorts them by descending score, ties kept in prior rank
/// order. A pair the scorer fails on gets -inf and a warning. Queries keep
/// the order of their first appearance in the input run.
inline RerankResult rerank_run(const Run& initial, const std::vector<Query>& queries, const Corpus& corpus,
                               const RelevanceScorer& scorer, std::size_t depth = 1000, const std::string& tag = "rerank",
                               std::size_t threads = default_thread_count()) {
    if (depth == 0) throw ConfigError("rerank depth must be >= 1");
    std::unordered_map<std::string, const Query*> query_by_id;
    for (const auto& q : queries) query_by_id.emplace(q.query_id, &q);

    std::vector<std::string> order;
    std::unordered_map<std::string, std::vector<const RunEntry*>> groups;
    std::vector<std::string> missing_docs, missing_queries;
    for (const auto& e : initial.entries) {
        auto [it, inserted] = groups.try_emplace(e.query_id);
        if (inserted) {
            order.push_back(e.query_id);
            if (!query_by_id.count(e.query_id)) missing_queries.push_back(e.query_id);
        }
        it->second.push_back(&e);
        if (!corpus.contains(e.doc_id) &&
            std::find(missing_docs.begin(), missing_docs.end(), e.doc_id) == missing_docs.end())
            missing_docs.push_back(e.doc_id);
    }
    auto list_ids = [](const std::vector<std::string>& ids) {
        std::string s;
        for (std::size_t i = 0; i < ids.size() && i < 20; ++i) s += " " + ids[i];
        if (ids.size() > 20) s += " ...";
        return s;
    };
    if (!missing_queries.empty())
        throw Error("run references " + std::to_string(missing_queries.size()) + " unknown query id(s):" +
                    list_ids(missing_queries));
    if (!missing_docs.empty())
        throw Error("run references " + std::to_string(missing_docs.size()) + " document id(s) missing from the corpus:" +
                    list_ids(missing_docs));

    std::vector<std::vector<RunEntry>> ranked(order.size());
    std::vector<std::size_t> failures(order.size(), 0);
    parallel_for(
        order.size(),
        [&](std::size_t qi) {
            auto cands = groups.at(order[qi]);
            std::stable_sort(cands.begin(), cands.end(), [](auto* a, auto* b) { return a->rank < b->rank; });
            if (cands.size() > depth) cands.resize(depth);
            const auto& qtext = query_by_id.at(order[qi])->text;
            std::vector<std::string> texts;
            texts.reserve(cands.size());
            for (auto* c : cands) texts.push_back(corpus.find(c->doc_id)->flattened());
            std::vector<ScorePair> pairs;
            for (const auto& t : texts) pairs.push_back({qtext, t});
            auto scores = scorer.score_batch(pairs);
            std::vector<RunEntry> out;
            out.reserve(cands.size());
            for (std::size_t i = 0; i < cands.size(); ++i) {
                double s = -std::numeric_limits<double>::infinity();
                if (i < scores.size() && scores[i] && !std::isnan(*scores[i]))
                    s = *scores[i];
                else
                    ++failures[qi];
                out.push_back({order[qi], cands[i]->doc_id, 0, s, tag});
            }
            std::stable_sort(out.begin(), out.end(), [](const RunEntry& a, const RunEntry& b) { return a.score > b.score; });
            for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
            ranked[qi] = std::move(out);
        },
        threads);

    RerankResult result;
    for (std::size_t qi = 0; qi < order.size(); ++qi) {
        if (failures[qi])
            result.warnings.push_back("query " + order[qi] + ": scorer failed on " + std::to_string(failures[qi]) +
                                      " pair(s); they were ranked last");
        for (auto& e : ranked[qi]) result.run.entries.push_back(std::move(e));
    }
    validate_run(result.run);
    return result;
}

}  // namespace inpars
