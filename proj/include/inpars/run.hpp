#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "inpars/error.hpp"
#include "inpars/retrieval.hpp"
#include "inpars/text.hpp"

namespace inpars {

struct RunEntry {
    std::string query_id;
    std::string doc_id;
    std::size_t rank = 0;
    double score = 0;
    std::string tag;

    friend bool operator==(const RunEntry& a, const RunEntry& b) {
        // Bitwise score comparison so that -0.0 and 0.0 differ and NaN never matches.
        return a.query_id == b.query_id && a.doc_id == b.doc_id && a.rank == b.rank && a.tag == b.tag &&
               std::signbit(a.score) == std::signbit(b.score) && a.score == b.score;
    }
};

/// A ranked result list in TREC format.
struct Run {
    std::vector<RunEntry> entries;

    friend bool operator==(const Run&, const Run&) = default;
};

class RunValidationError : public Error {
public:
    using Error::Error;
};

/// Shortest decimal that parses back to exactly `v`.
inline std::string format_score(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

/// Per query: ranks are exactly 1..n, scores do not increase with rank, and
/// no document appears twice. Ids and tags must be non-empty and free of
/// whitespace.
inline void validate_run(const Run& run) {
    std::map<std::string, std::vector<const RunEntry*>> by_query;
    std::set<std::pair<std::string_view, std::string_view>> pairs;
    auto bad_token = [](const std::string& s) {
        return s.empty() || std::any_of(s.begin(), s.end(), [](char c) { return text::is_space(c); });
    };
    for (const auto& e : run.entries) {
        if (bad_token(e.query_id) || bad_token(e.doc_id) || bad_token(e.tag))
            throw RunValidationError("run entry (" + e.query_id + ", " + e.doc_id +
                                     "): ids and tag must be non-empty without whitespace");
        if (e.rank == 0) throw RunValidationError("run entry (" + e.query_id + ", " + e.doc_id + ") has rank 0");
        if (std::isnan(e.score)) throw RunValidationError("run entry (" + e.query_id + ", " + e.doc_id + ") has NaN score");
        if (!pairs.emplace(e.query_id, e.doc_id).second)
            throw RunValidationError("duplicate run entry (" + e.query_id + ", " + e.doc_id + ")");
        by_query[e.query_id].push_back(&e);
    }
    for (auto& [qid, list] : by_query) {
        std::sort(list.begin(), list.end(), [](auto* a, auto* b) { return a->rank < b->rank; });
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (list[i]->rank != i + 1)
                throw RunValidationError("query " + qid + ": ranks are not 1.." + std::to_string(list.size()));
            if (i > 0 && list[i]->score > list[i - 1]->score)
                throw RunValidationError("query " + qid + ": score increases at rank " + std::to_string(i + 1));
        }
    }
}

/// Parses "query_id Q0 doc_id rank score tag" lines (any whitespace between
/// columns) and validates the result.
inline Run read_run(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open run file: " + path.string() + " (file not found)");
    Run run;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        raw = text::strip_cr(std::move(raw));
        if (text::trim(raw).empty()) continue;
        auto cols = text::split_whitespace(raw);
        if (cols.size() != 6) throw ParseError(path.string(), lineno, raw, "expected 6 columns, got " + std::to_string(cols.size()));
        RunEntry e;
        e.query_id = cols[0];
        e.doc_id = cols[2];
        auto r = cols[3];
        auto [rp, rec] = std::from_chars(r.data(), r.data() + r.size(), e.rank);
        if (rec != std::errc() || rp != r.data() + r.size()) throw ParseError(path.string(), lineno, raw, "bad rank");
        auto s = cols[4];
        auto [sp, sec] = std::from_chars(s.data(), s.data() + s.size(), e.score);
        if (sec != std::errc() || sp != s.data() + s.size()) throw ParseError(path.string(), lineno, raw, "bad score");
        e.tag = cols[5];
        if (e.rank == 0) throw ParseError(path.string(), lineno, raw, "rank must be >= 1");
        run.entries.push_back(std::move(e));
    }
    validate_run(run);
    return run;
}

inline void write_run(const Run& run, std::ostream& out) {
    validate_run(run);
    for (const auto& e : run.entries)
        out << e.query_id << " Q0 " << e.doc_id << ' ' << e.rank << ' ' << format_score(e.score) << ' ' << e.tag
            << '\n';
}

inline void write_run(const Run& run, const std::filesystem::path& path) {
    validate_run(run);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write run file: " + path.string());
    write_run(run, out);
}

/// Run built from per-query search results, queries in map order.
inline Run run_from_hits(const std::map<std::string, std::vector<SearchHit>>& hits, const std::string& tag) {
    Run run;
    for (const auto& [qid, list] : hits)
        for (const auto& h : list) run.entries.push_back({qid, h.doc_id, h.rank, h.score, tag});
    return run;
}

}  // namespace inpars
