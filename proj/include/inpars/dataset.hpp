#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"

#include "inpars/error.hpp"
#include "inpars/random.hpp"
#include "inpars/text.hpp"
#include "inpars/token_counter.hpp"

namespace inpars {

enum class Split { train, dev, test };

/// Few-shot sources are tried in this order.
inline constexpr std::array<Split, 3> kSplitPriority = {Split::train, Split::dev, Split::test};

inline std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
    }
    return "?";
}

inline std::optional<Split> parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "dev" || s == "validation") return Split::dev;
    if (s == "test") return Split::test;
    return std::nullopt;
}

struct Document {
    std::string doc_id;
    std::string title;
    std::string text;

    /// Title and body as one field.
    std::string flattened() const { return title.empty() ? text : title + " " + text; }

    friend bool operator==(const Document&, const Document&) = default;
};

struct Query {
    std::string query_id;
    std::string text;

    friend bool operator==(const Query&, const Query&) = default;
};

struct QrelEntry {
    std::string query_id;
    std::string doc_id;
    int relevance = 0;

    friend bool operator==(const QrelEntry&, const QrelEntry&) = default;
};

/// Documents in file order with id lookup.
class Corpus {
public:
    /// Returns false if the id is already present.
    bool add(Document doc) {
        auto [it, inserted] = by_id_.emplace(doc.doc_id, docs_.size());
        if (!inserted) return false;
        docs_.push_back(std::move(doc));
        return true;
    }

    const Document* find(std::string_view doc_id) const {
        auto it = by_id_.find(std::string(doc_id));
        return it == by_id_.end() ? nullptr : &docs_[it->second];
    }

    bool contains(std::string_view doc_id) const { return find(doc_id) != nullptr; }
    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }
    const std::vector<Document>& documents() const { return docs_; }
    const Document& operator[](std::size_t i) const { return docs_[i]; }

    friend bool operator==(const Corpus& a, const Corpus& b) { return a.docs_ == b.docs_; }

private:
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

/// Queries judged in one split, plus its judgments (file order).
struct SplitData {
    std::vector<Query> queries;
    std::vector<QrelEntry> qrels;

    friend bool operator==(const SplitData&, const SplitData&) = default;
};

struct Dataset {
    Corpus corpus;
    /// Every loaded query regardless of split.
    std::vector<Query> queries;
    /// Indexed by Split; absent when the dataset ships no judgments for it.
    std::array<std::optional<SplitData>, 3> splits;

    const std::optional<SplitData>& split(Split s) const { return splits[static_cast<std::size_t>(s)]; }
    std::optional<SplitData>& split(Split s) { return splits[static_cast<std::size_t>(s)]; }

    const Query* find_query(std::string_view query_id) const {
        for (const auto& q : queries)
            if (q.query_id == query_id) return &q;
        return nullptr;
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

enum class DatasetFormat { beir_jsonl, tsv };

inline DatasetFormat parse_dataset_format(std::string_view s) {
    if (s == "beir-jsonl" || s == "beir" || s == "jsonl") return DatasetFormat::beir_jsonl;
    if (s == "tsv") return DatasetFormat::tsv;
    throw ConfigError("unknown dataset format '" + std::string(s) + "' (expected beir-jsonl or tsv)");
}

struct DatasetPaths {
    std::filesystem::path corpus;
    std::vector<std::filesystem::path> queries;
    std::map<Split, std::filesystem::path> qrels;
};

/// Standard BEIR directory: corpus.jsonl, queries.jsonl, qrels/{train,dev,test}.tsv.
/// Missing qrels files leave their split absent.
inline DatasetPaths beir_layout(const std::filesystem::path& dir, DatasetFormat format = DatasetFormat::beir_jsonl) {
    const char* ext = format == DatasetFormat::beir_jsonl ? ".jsonl" : ".tsv";
    DatasetPaths p;
    p.corpus = dir / (std::string("corpus") + ext);
    p.queries.push_back(dir / (std::string("queries") + ext));
    for (Split s : kSplitPriority) {
        auto q = dir / "qrels" / (std::string(to_string(s)) + ".tsv");
        if (std::filesystem::exists(q)) p.qrels[s] = q;
    }
    return p;
}

namespace detail {

inline std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    return in;
}

inline std::string json_id(const nlohmann::json& v, const std::string& file, std::size_t line, const std::string& raw) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw ParseError(file, line, raw, "'_id' must be a string");
}

inline nlohmann::json parse_json_line(const std::string& raw, const std::string& file, std::size_t line) {
    try {
        auto j = nlohmann::json::parse(raw);
        if (!j.is_object()) throw ParseError(file, line, raw, "expected a JSON object");
        return j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(file, line, raw, std::string("invalid JSON (") + e.what() + ")");
    }
}

inline std::string json_text(const nlohmann::json& j, const char* key, bool required, const std::string& file,
                             std::size_t line, const std::string& raw) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) {
        if (required) throw ParseError(file, line, raw, std::string("missing field '") + key + "'");
        return {};
    }
    if (!it->is_string()) throw ParseError(file, line, raw, std::string("field '") + key + "' must be a string");
    return it->get<std::string>();
}

inline void load_corpus(const std::filesystem::path& path, DatasetFormat format, Corpus& corpus) {
    auto in = open_input(path);
    const std::string file = path.string();
    std::unordered_map<std::string, std::size_t> first_line;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        raw = text::strip_cr(std::move(raw));
        if (text::trim(raw).empty()) continue;
        Document doc;
        if (format == DatasetFormat::beir_jsonl) {
            auto j = parse_json_line(raw, file, lineno);
            auto id = j.find("_id");
            if (id == j.end()) throw ParseError(file, lineno, raw, "missing field '_id'");
            doc.doc_id = json_id(*id, file, lineno, raw);
            doc.title = json_text(j, "title", false, file, lineno, raw);
            doc.text = json_text(j, "text", true, file, lineno, raw);
        } else {
            auto cols = text::split(raw, '\t');
            if (cols.size() == 2) {
                doc.doc_id = cols[0];
                doc.text = cols[1];
            } else if (cols.size() == 3) {
                doc.doc_id = cols[0];
                doc.title = cols[1];
                doc.text = cols[2];
            } else {
                throw ParseError(file, lineno, raw, "expected 'doc_id<TAB>[title<TAB>]text'");
            }
        }
        if (doc.doc_id.empty()) throw ParseError(file, lineno, raw, "empty doc_id");
        std::string id = doc.doc_id;
        if (!corpus.add(std::move(doc))) {
            throw ParseError(file, lineno, raw,
                             "duplicate doc_id '" + id + "' (first seen on line " + std::to_string(first_line[id]) + ")");
        }
        first_line.emplace(id, lineno);
    }
}

inline void load_queries(const std::filesystem::path& path, DatasetFormat format, std::vector<Query>& out,
                         std::unordered_set<std::string>& seen) {
    auto in = open_input(path);
    const std::string file = path.string();
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        raw = text::strip_cr(std::move(raw));
        if (text::trim(raw).empty()) continue;
        Query q;
        if (format == DatasetFormat::beir_jsonl) {
            auto j = parse_json_line(raw, file, lineno);
            auto id = j.find("_id");
            if (id == j.end()) throw ParseError(file, lineno, raw, "missing field '_id'");
            q.query_id = json_id(*id, file, lineno, raw);
            q.text = json_text(j, "text", true, file, lineno, raw);
        } else {
            auto tab = raw.find('\t');
            if (tab == std::string::npos) throw ParseError(file, lineno, raw, "expected 'query_id<TAB>text'");
            q.query_id = raw.substr(0, tab);
            q.text = raw.substr(tab + 1);
        }
        if (q.query_id.empty()) throw ParseError(file, lineno, raw, "empty query_id");
        if (!seen.insert(q.query_id).second)
            throw ParseError(file, lineno, raw, "duplicate query_id '" + q.query_id + "'");
        out.push_back(std::move(q));
    }
}

inline std::optional<int> parse_int(std::string_view s) {
    s = text::trim(s);
    int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) return std::nullopt;
    return v;
}

}  // namespace detail

/// BEIR qrels: "query-id<TAB>corpus-id<TAB>score" with a header row.
inline std::vector<QrelEntry> load_qrels(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    const std::string file = path.string();
    std::vector<QrelEntry> out;
    std::set<std::pair<std::string, std::string>> seen;
    std::string raw;
    std::size_t lineno = 0;
    bool first = true;
    while (std::getline(in, raw)) {
        ++lineno;
        raw = text::strip_cr(std::move(raw));
        if (text::trim(raw).empty()) continue;
        auto cols = text::split(raw, '\t');
        if (cols.size() != 3) throw ParseError(file, lineno, raw, "expected 'query-id<TAB>corpus-id<TAB>score'");
        auto rel = detail::parse_int(cols[2]);
        if (first) {
            first = false;
            if (!rel) continue;  // header row
        }
        if (!rel) throw ParseError(file, lineno, raw, "score is not an integer");
        if (*rel < 0) throw ParseError(file, lineno, raw, "negative relevance");
        QrelEntry e{std::string(cols[0]), std::string(cols[1]), *rel};
        if (e.query_id.empty() || e.doc_id.empty()) throw ParseError(file, lineno, raw, "empty id");
        if (!seen.emplace(e.query_id, e.doc_id).second)
            throw ParseError(file, lineno, raw, "duplicate judgment for (" + e.query_id + ", " + e.doc_id + ")");
        out.push_back(std::move(e));
    }
    return out;
}

/// Loads a corpus, its queries and per-split judgments. Files are read line
/// by line. Throws ParseError on a malformed or duplicate line and Error when
/// judgments reference unknown queries.
inline Dataset load_dataset(const DatasetPaths& paths, DatasetFormat format) {
    Dataset ds;
    detail::load_corpus(paths.corpus, format, ds.corpus);
    std::unordered_set<std::string> seen;
    for (const auto& qp : paths.queries) detail::load_queries(qp, format, ds.queries, seen);

    std::unordered_map<std::string, const Query*> by_id;
    for (const auto& q : ds.queries) by_id.emplace(q.query_id, &q);

    for (const auto& [split, path] : paths.qrels) {
        SplitData data;
        data.qrels = load_qrels(path);
        std::vector<std::string> missing;
        std::unordered_set<std::string> judged;
        for (const auto& e : data.qrels) {
            if (!by_id.count(e.query_id)) {
                if (std::find(missing.begin(), missing.end(), e.query_id) == missing.end())
                    missing.push_back(e.query_id);
            } else {
                judged.insert(e.query_id);
            }
        }
        if (!missing.empty()) {
            std::string msg = path.string() + ": " + std::to_string(missing.size()) +
                              " judged query id(s) not found in the queries file:";
            for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " " + missing[i];
            if (missing.size() > 20) msg += " ...";
            throw Error(msg);
        }
        for (const auto& q : ds.queries)
            if (judged.count(q.query_id)) data.queries.push_back(q);
        ds.split(split) = std::move(data);
    }
    return ds;
}

/// Writes `ds` as a BEIR directory that load_dataset(beir_layout(dir)) reads back identically.
inline void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "qrels");
    {
        std::ofstream out(dir / "corpus.jsonl", std::ios::binary);
        for (const auto& d : ds.corpus.documents())
            out << nlohmann::json{{"_id", d.doc_id}, {"title", d.title}, {"text", d.text}}.dump() << '\n';
    }
    {
        std::ofstream out(dir / "queries.jsonl", std::ios::binary);
        for (const auto& q : ds.queries) out << nlohmann::json{{"_id", q.query_id}, {"text", q.text}}.dump() << '\n';
    }
    for (Split s : kSplitPriority) {
        const auto& split = ds.split(s);
        if (!split) continue;
        std::ofstream out(dir / "qrels" / (std::string(to_string(s)) + ".tsv"), std::ios::binary);
        out << "query-id\tcorpus-id\tscore\n";
        for (const auto& e : split->qrels) out << e.query_id << '\t' << e.doc_id << '\t' << e.relevance << '\n';
    }
}

// ---------------------------------------------------------------------------
// Few-shot sampling

struct FewShotExample {
    Query query;
    Document document;
    Split origin_split = Split::train;
    /// Hand-written "good" question paired with `query` in guided templates.
    std::optional<std::string> guided_query;

    friend bool operator==(const FewShotExample&, const FewShotExample&) = default;
};

struct FewShotSample {
    std::vector<FewShotExample> examples;
    /// Queries taken from dev or test; these must be left out of evaluation.
    std::vector<std::string> used_query_ids;
};

class InsufficientExamplesError : public Error {
public:
    using Error::Error;
};

/// Draws `n` labeled (query, relevant document) pairs from the first split in
/// train -> dev -> test order that has enough of them. Each query is used at
/// most once and no two examples share a document.
inline FewShotSample sample_fewshot(const Dataset& ds, std::size_t n, std::uint64_t seed,
                                    const std::unordered_set<std::string>& exclude_doc_ids = {}) {
    if (n == 0) throw ConfigError("number of few-shot examples must be >= 1");
    for (Split s : kSplitPriority) {
        const auto& split = ds.split(s);
        if (!split) continue;

        // Relevant, resolvable documents per query, sorted for order independence.
        std::map<std::string, std::vector<std::string>> candidates;
        for (const auto& e : split->qrels) {
            if (e.relevance < 1 || exclude_doc_ids.count(e.doc_id) || !ds.corpus.contains(e.doc_id)) continue;
            candidates[e.query_id].push_back(e.doc_id);
        }
        if (candidates.size() < n) continue;

        std::vector<std::string> qids;
        qids.reserve(candidates.size());
        for (auto& [qid, docs] : candidates) {
            std::sort(docs.begin(), docs.end());
            qids.push_back(qid);
        }
        Rng rng(derive_seed(seed, std::string("fewshot:") + std::string(to_string(s))));
        rng.shuffle(qids);

        FewShotSample sample;
        std::unordered_set<std::string> used_docs;
        for (const auto& qid : qids) {
            if (sample.examples.size() == n) break;
            std::vector<std::string> docs;
            for (const auto& d : candidates[qid])
                if (!used_docs.count(d)) docs.push_back(d);
            if (docs.empty()) continue;
            const auto& doc_id = docs[static_cast<std::size_t>(rng.uniform_index(docs.size()))];
            used_docs.insert(doc_id);
            sample.examples.push_back({*ds.find_query(qid), *ds.corpus.find(doc_id), s, std::nullopt});
            if (s != Split::train) sample.used_query_ids.push_back(qid);
        }
        if (sample.examples.size() == n) return sample;
    }
    throw InsufficientExamplesError("no split has " + std::to_string(n) + " labeled query-document pairs");
}

// ---------------------------------------------------------------------------
// Corpus statistics

struct CorpusStats {
    double mean_doc_words = 0;
    double mean_doc_tokens = 0;
    double mean_query_words = 0;
    double mean_query_tokens = 0;
    std::size_t documents = 0;
    std::size_t queries = 0;
};

/// Mean whitespace word and tokenizer token counts over all documents
/// (title + text) and all queries of every split.
inline CorpusStats corpus_stats(const Dataset& ds, const TokenCounter& counter) {
    if (ds.corpus.empty()) throw Error("corpus statistics need a non-empty corpus");
    CorpusStats st;
    double words = 0, tokens = 0;
    for (const auto& d : ds.corpus.documents()) {
        auto flat = d.flattened();
        words += static_cast<double>(text::count_words(flat));
        tokens += static_cast<double>(counter.count(flat));
    }
    st.documents = ds.corpus.size();
    st.mean_doc_words = words / static_cast<double>(st.documents);
    st.mean_doc_tokens = tokens / static_cast<double>(st.documents);
    if (!ds.queries.empty()) {
        words = tokens = 0;
        for (const auto& q : ds.queries) {
            words += static_cast<double>(text::count_words(q.text));
            tokens += static_cast<double>(counter.count(q.text));
        }
        st.queries = ds.queries.size();
        st.mean_query_words = words / static_cast<double>(st.queries);
        st.mean_query_tokens = tokens / static_cast<double>(st.queries);
    }
    return st;
}

}  // namespace inpars
