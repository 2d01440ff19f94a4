#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "inpars/analyzer.hpp"
#include "inpars/dataset.hpp"
#include "inpars/error.hpp"
#include "inpars/parallel.hpp"

namespace inpars {

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;

    friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

/// idf = ln(1 + (N - df + 0.5) / (df + 0.5))
inline double bm25_idf(double doc_count, double df) { return std::log(1.0 + (doc_count - df + 0.5) / (df + 0.5)); }

/// tf saturation with length normalization, including the (k1 + 1) factor.
inline double bm25_tf(double tf, double doc_len, double avg_len, const Bm25Params& p) {
    return tf * (p.k1 + 1.0) / (tf + p.k1 * (1.0 - p.b + p.b * doc_len / avg_len));
}

struct SearchHit {
    std::string doc_id;
    double score = 0;
    std::size_t rank = 0;

    friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

struct Posting {
    std::uint32_t doc;
    std::uint32_t tf;

    friend bool operator==(const Posting&, const Posting&) = default;
};

class IndexFormatError : public Error {
public:
    using Error::Error;
};

/// Written by a different index format version; callers should rebuild.
class IndexVersionError : public IndexFormatError {
public:
    using IndexFormatError::IndexFormatError;
};

/// Inverted index over flattened documents with BM25 ranking. Immutable after
/// build; search is safe from concurrent threads.
///
/// File layout (all integers little-endian):
///   "INPRSIDX" | u32 version | u32 analyzer flags | f64 k1 | f64 b
///   u64 doc_count | doc_count x (u32 id_len, id bytes, u32 doc_length)
///   u64 term_count | term_count x (u32 term_len, term bytes, u32 postings, postings x (u32 doc, u32 tf))
/// Terms are stored in byte order so identical corpora give identical files.
class Index {
public:
    static constexpr char kMagic[8] = {'I', 'N', 'P', 'R', 'S', 'I', 'D', 'X'};
    static constexpr std::uint32_t kVersion = 1;

    static Index build(const Corpus& corpus, AnalyzerConfig analyzer = {}, Bm25Params params = {}) {
        if (corpus.empty()) throw Error("cannot index an empty corpus");
        Index idx;
        idx.analyzer_ = Analyzer(analyzer);
        idx.params_ = params;
        idx.doc_ids_.reserve(corpus.size());
        idx.doc_lengths_.reserve(corpus.size());
        std::unordered_map<std::string, std::uint32_t> tf;
        for (std::size_t ord = 0; ord < corpus.size(); ++ord) {
            const auto& doc = corpus[ord];
            auto tokens = idx.analyzer_(doc.flattened());
            tf.clear();
            for (auto& t : tokens) ++tf[t];
            // Sorted so term ids are assigned deterministically.
            std::vector<std::pair<std::string_view, std::uint32_t>> terms(tf.begin(), tf.end());
            std::sort(terms.begin(), terms.end());
            for (auto& [term, count] : terms) {
                auto [it, inserted] = idx.terms_.try_emplace(std::string(term), idx.postings_.size());
                if (inserted) idx.postings_.emplace_back();
                idx.postings_[it->second].push_back({static_cast<std::uint32_t>(ord), count});
            }
            idx.doc_ids_.push_back(doc.doc_id);
            idx.doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
        }
        idx.finish();
        return idx;
    }

    std::size_t doc_count() const { return doc_ids_.size(); }
    std::size_t term_count() const { return postings_.size(); }
    double avg_doc_length() const { return avg_doc_length_; }
    const std::vector<std::uint32_t>& doc_lengths() const { return doc_lengths_; }
    const std::string& doc_id(std::size_t ordinal) const { return doc_ids_[ordinal]; }
    const Bm25Params& params() const { return params_; }
    const AnalyzerConfig& analyzer_config() const { return analyzer_.config(); }
    const Analyzer& analyzer() const { return analyzer_; }

    std::span<const Posting> postings(std::string_view analyzed_term) const {
        auto it = terms_.find(std::string(analyzed_term));
        if (it == terms_.end()) return {};
        return postings_[it->second];
    }

    std::optional<std::size_t> ordinal(std::string_view doc_id) const {
        auto it = ordinal_of_.find(std::string(doc_id));
        if (it == ordinal_of_.end()) return std::nullopt;
        return it->second;
    }

    /// Top-k documents by BM25 summed over query tokens (repeated tokens
    /// count repeatedly). Ties go to the lexicographically smaller doc_id.
    /// Documents matching no query term are never returned.
    std::vector<SearchHit> search(std::string_view query, std::size_t k) const {
        if (k == 0) throw ConfigError("k must be >= 1");
        std::vector<double> acc(doc_ids_.size(), 0.0);
        std::vector<std::uint32_t> touched;
        std::vector<char> seen(doc_ids_.size(), 0);
        const double n = static_cast<double>(doc_ids_.size());
        for (const auto& term : analyzer_(query)) {
            auto plist = postings(term);
            if (plist.empty()) continue;
            const double idf = bm25_idf(n, static_cast<double>(plist.size()));
            for (const auto& p : plist) {
                acc[p.doc] += idf * bm25_tf(p.tf, doc_lengths_[p.doc], avg_doc_length_, params_);
                if (!seen[p.doc]) {
                    seen[p.doc] = 1;
                    touched.push_back(p.doc);
                }
            }
        }
        const std::size_t take = std::min(k, touched.size());
        auto better = [&](std::uint32_t a, std::uint32_t b) {
            if (acc[a] != acc[b]) return acc[a] > acc[b];
            return id_rank_[a] < id_rank_[b];
        };
        std::partial_sort(touched.begin(), touched.begin() + static_cast<std::ptrdiff_t>(take), touched.end(), better);
        std::vector<SearchHit> hits;
        hits.reserve(take);
        for (std::size_t i = 0; i < take; ++i) hits.push_back({doc_ids_[touched[i]], acc[touched[i]], i + 1});
        return hits;
    }

    std::map<std::string, std::vector<SearchHit>> batch_search(const std::vector<Query>& queries, std::size_t k,
                                                               std::size_t threads = default_thread_count()) const {
        std::vector<std::vector<SearchHit>> results(queries.size());
        parallel_for(queries.size(), [&](std::size_t i) { results[i] = search(queries[i].text, k); }, threads);
        std::map<std::string, std::vector<SearchHit>> out;
        for (std::size_t i = 0; i < queries.size(); ++i) out[queries[i].query_id] = std::move(results[i]);
        return out;
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write index file: " + path.string());
        out.write(kMagic, sizeof kMagic);
        put_u32(out, kVersion);
        put_u32(out, (analyzer_config().stopwords ? 1u : 0u) | (analyzer_config().stemming ? 2u : 0u));
        put_f64(out, params_.k1);
        put_f64(out, params_.b);
        put_u64(out, doc_ids_.size());
        for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
            put_str(out, doc_ids_[i]);
            put_u32(out, doc_lengths_[i]);
        }
        std::vector<std::pair<std::string_view, std::size_t>> terms(terms_.begin(), terms_.end());
        std::sort(terms.begin(), terms.end());
        put_u64(out, terms.size());
        for (const auto& [term, id] : terms) {
            put_str(out, term);
            put_u32(out, static_cast<std::uint32_t>(postings_[id].size()));
            for (const auto& p : postings_[id]) {
                put_u32(out, p.doc);
                put_u32(out, p.tf);
            }
        }
        if (!out) throw Error("failed writing index file: " + path.string());
    }

    static Index load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot open index file: " + path.string());
        char magic[8];
        in.read(magic, sizeof magic);
        if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0)
            throw IndexFormatError(path.string() + ": not an index file");
        auto version = get_u32(in);
        if (version != kVersion)
            throw IndexVersionError(path.string() + ": index format version " + std::to_string(version) +
                                    ", expected " + std::to_string(kVersion));
        Index idx;
        auto flags = get_u32(in);
        idx.analyzer_ = Analyzer(AnalyzerConfig{(flags & 1u) != 0, (flags & 2u) != 0});
        idx.params_.k1 = get_f64(in);
        idx.params_.b = get_f64(in);
        auto docs = get_u64(in);
        for (std::uint64_t i = 0; i < docs; ++i) {
            idx.doc_ids_.push_back(get_str(in));
            idx.doc_lengths_.push_back(get_u32(in));
        }
        auto terms = get_u64(in);
        for (std::uint64_t t = 0; t < terms; ++t) {
            auto term = get_str(in);
            auto count = get_u32(in);
            std::vector<Posting> plist(count);
            for (auto& p : plist) {
                p.doc = get_u32(in);
                p.tf = get_u32(in);
                if (p.doc >= docs) throw IndexFormatError(path.string() + ": posting references unknown document");
            }
            idx.terms_.emplace(std::move(term), idx.postings_.size());
            idx.postings_.push_back(std::move(plist));
        }
        if (!in) throw IndexFormatError(path.string() + ": truncated index file");
        if (docs == 0) throw IndexFormatError(path.string() + ": index has no documents");
        idx.finish();
        return idx;
    }

private:
    void finish() {
        const double total = std::accumulate(doc_lengths_.begin(), doc_lengths_.end(), 0.0);
        avg_doc_length_ = total / static_cast<double>(doc_lengths_.size());
        if (avg_doc_length_ <= 0) avg_doc_length_ = 1.0;
        std::vector<std::uint32_t> order(doc_ids_.size());
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return doc_ids_[a] < doc_ids_[b]; });
        id_rank_.assign(doc_ids_.size(), 0);
        for (std::size_t r = 0; r < order.size(); ++r) id_rank_[order[r]] = static_cast<std::uint32_t>(r);
        ordinal_of_.clear();
        for (std::size_t i = 0; i < doc_ids_.size(); ++i) ordinal_of_.emplace(doc_ids_[i], i);
    }

    static void put_u32(std::ostream& o, std::uint32_t v) {
        char b[4];
        for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
        o.write(b, 4);
    }
    static void put_u64(std::ostream& o, std::uint64_t v) {
        char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
        o.write(b, 8);
    }
    static void put_f64(std::ostream& o, double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        put_u64(o, bits);
    }
    static void put_str(std::ostream& o, std::string_view s) {
        put_u32(o, static_cast<std::uint32_t>(s.size()));
        o.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    static std::uint32_t get_u32(std::istream& in) {
        unsigned char b[4] = {};
        in.read(reinterpret_cast<char*>(b), 4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    static std::uint64_t get_u64(std::istream& in) {
        unsigned char b[8] = {};
        in.read(reinterpret_cast<char*>(b), 8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    static double get_f64(std::istream& in) {
        std::uint64_t bits = get_u64(in);
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
    static std::string get_str(std::istream& in) {
        auto n = get_u32(in);
        if (!in || n > (1u << 30)) throw IndexFormatError("corrupt string length in index file");
        std::string s(n, '\0');
        in.read(s.data(), n);
        return s;
    }

    Analyzer analyzer_;
    Bm25Params params_;
    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    std::vector<std::uint32_t> id_rank_;
    std::unordered_map<std::string, std::size_t> ordinal_of_;
    std::unordered_map<std::string, std::size_t> terms_;
    std::vector<std::vector<Posting>> postings_;
    double avg_doc_length_ = 0;
};

}  // namespace inpars
