#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "inpars/dataset.hpp"
#include "inpars/error.hpp"
#include "inpars/run.hpp"

namespace inpars {

enum class Metric { ndcg, recall, mrr };

inline std::string_view to_string(Metric m) {
    switch (m) {
        case Metric::ndcg: return "ndcg";
        case Metric::recall: return "recall";
        case Metric::mrr: return "mrr";
    }
    return "?";
}

inline Metric parse_metric(std::string_view s) {
    if (s == "ndcg") return Metric::ndcg;
    if (s == "recall") return Metric::recall;
    if (s == "mrr") return Metric::mrr;
    throw ConfigError("unknown metric '" + std::string(s) + "' (expected ndcg, recall or mrr)");
}

inline std::string metric_key(Metric m, std::size_t k) { return std::string(to_string(m)) + "@" + std::to_string(k); }

struct EvalReport {
    std::map<std::string, std::map<std::string, double>> per_query;
    std::map<std::string, double> means;
    std::size_t evaluated_query_count = 0;
    std::set<std::string> excluded_query_ids;
    /// Run queries without any judgment; ignored as trec_eval does.
    std::vector<std::string> skipped_query_ids;
};

/// 2^rel - 1
inline double ndcg_gain(int rel) { return rel > 0 ? std::exp2(static_cast<double>(rel)) - 1.0 : 0.0; }

/// 1 / log2(rank + 1), rank starting at 1
inline double ndcg_discount(std::size_t rank) { return 1.0 / std::log2(static_cast<double>(rank) + 1.0); }

/// Ranked doc ids for one query: score descending, then doc_id descending
/// (trec_eval's order; the rank column is ignored).
inline std::vector<std::string> evaluation_order(std::vector<const RunEntry*> entries) {
    std::sort(entries.begin(), entries.end(), [](const RunEntry* a, const RunEntry* b) {
        if (a->score != b->score) return a->score > b->score;
        return a->doc_id > b->doc_id;
    });
    std::vector<std::string> out;
    out.reserve(entries.size());
    for (auto* e : entries) out.push_back(e->doc_id);
    return out;
}

/// nDCG@k, Recall@k and MRR@k per judged query. Judged queries missing from
/// the run score 0; excluded queries are left out of per-query values and
/// means alike.
inline EvalReport evaluate(const Run& run, const std::vector<QrelEntry>& qrels, const std::vector<Metric>& metrics,
                           const std::vector<std::size_t>& k_values, const std::set<std::string>& excluded = {}) {
    if (metrics.empty() || k_values.empty()) throw ConfigError("need at least one metric and one cutoff");
    for (auto k : k_values)
        if (k == 0) throw ConfigError("metric cutoffs must be positive");

    std::map<std::string, std::unordered_map<std::string, int>> judged;
    for (const auto& e : qrels) judged[e.query_id][e.doc_id] = e.relevance;

    std::unordered_map<std::string, std::vector<const RunEntry*>> by_query;
    for (const auto& e : run.entries) by_query[e.query_id].push_back(&e);

    EvalReport report;
    for (const auto& [qid, entries] : by_query)
        if (!judged.count(qid)) report.skipped_query_ids.push_back(qid);
    std::sort(report.skipped_query_ids.begin(), report.skipped_query_ids.end());

    for (const auto& [qid, rels] : judged) {
        if (excluded.count(qid)) {
            report.excluded_query_ids.insert(qid);
            continue;
        }
        std::vector<std::string> ranking;
        if (auto it = by_query.find(qid); it != by_query.end()) ranking = evaluation_order(it->second);

        std::vector<int> ideal;
        std::size_t relevant = 0;
        for (const auto& [doc, rel] : rels) {
            ideal.push_back(rel);
            if (rel >= 1) ++relevant;
        }
        std::sort(ideal.begin(), ideal.end(), std::greater<>());
        auto rel_of = [&](const std::string& doc) {
            auto it = rels.find(doc);
            return it == rels.end() ? 0 : it->second;
        };

        auto& values = report.per_query[qid];
        for (auto k : k_values) {
            const std::size_t depth = std::min(k, ranking.size());
            for (auto m : metrics) {
                double v = 0.0;
                if (m == Metric::ndcg) {
                    double dcg = 0.0, idcg = 0.0;
                    for (std::size_t i = 0; i < depth; ++i) dcg += ndcg_gain(rel_of(ranking[i])) * ndcg_discount(i + 1);
                    for (std::size_t i = 0; i < std::min(k, ideal.size()); ++i)
                        idcg += ndcg_gain(ideal[i]) * ndcg_discount(i + 1);
                    v = idcg > 0 ? dcg / idcg : 0.0;
                } else if (m == Metric::recall) {
                    std::size_t hit = 0;
                    for (std::size_t i = 0; i < depth; ++i) hit += rel_of(ranking[i]) >= 1;
                    v = relevant ? static_cast<double>(hit) / static_cast<double>(relevant) : 0.0;
                } else {
                    for (std::size_t i = 0; i < depth; ++i) {
                        if (rel_of(ranking[i]) >= 1) {
                            v = 1.0 / static_cast<double>(i + 1);
                            break;
                        }
                    }
                }
                values[metric_key(m, k)] = v;
            }
        }
    }

    report.evaluated_query_count = report.per_query.size();
    for (auto k : k_values) {
        for (auto m : metrics) {
            const auto key = metric_key(m, k);
            double sum = 0.0;
            for (const auto& [qid, values] : report.per_query) sum += values.at(key);
            report.means[key] = report.evaluated_query_count ? sum / static_cast<double>(report.evaluated_query_count) : 0.0;
        }
    }
    return report;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["evaluated_query_count"] = r.evaluated_query_count;
    j["means"] = r.means;
    j["excluded_query_ids"] = r.excluded_query_ids;
    j["skipped_query_ids"] = r.skipped_query_ids;
    j["per_query"] = r.per_query;
    return j;
}

inline std::string format_table(const EvalReport& r) {
    std::ostringstream out;
    std::size_t width = 6;
    for (const auto& [key, v] : r.means) width = std::max(width, key.size());
    for (const auto& [key, v] : r.means)
        out << std::left << std::setw(static_cast<int>(width) + 2) << key << std::fixed << std::setprecision(4) << v
            << '\n';
    out << std::left << std::setw(static_cast<int>(width) + 2) << "queries" << r.evaluated_query_count << '\n';
    if (!r.excluded_query_ids.empty())
        out << std::left << std::setw(static_cast<int>(width) + 2) << "excluded" << r.excluded_query_ids.size() << '\n';
    return out.str();
}

}  // namespace inpars
