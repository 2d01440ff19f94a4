#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "inpars/dataset.hpp"
#include "inpars/filtering.hpp"
#include "inpars/parallel.hpp"
#include "inpars/random.hpp"
#include "inpars/retrieval.hpp"
#include "inpars/text.hpp"

namespace inpars {

struct Triple {
    std::string query_text;
    std::string positive_doc_id;
    std::string negative_doc_id;
    std::string positive_text;
    std::string negative_text;

    friend bool operator==(const Triple&, const Triple&) = default;
};

struct SkippedRecord {
    std::size_t record_index = 0;
    std::string doc_id;
    std::string query_text;
    std::string reason;
};

struct MiningResult {
    std::vector<Triple> triples;
    std::vector<SkippedRecord> skipped;
};

/// For each synthetic query, retrieves its top `pool_size` BM25 candidates
/// and draws one uniformly from the pool without the source document. Record
/// i uses its own stream derived from (seed, i), so results do not depend on
/// thread scheduling. Records with no usable candidate are skipped.
inline MiningResult mine_negatives(std::span<const GeneratedRecord> records, const Index& index, const Corpus& corpus,
                                   std::size_t pool_size = 1000, std::uint64_t seed = 1,
                                   std::size_t threads = default_thread_count()) {
    if (pool_size == 0) throw ConfigError("pool_size must be >= 1");
    std::vector<std::optional<Triple>> slots(records.size());
    parallel_for(
        records.size(),
        [&](std::size_t i) {
            const auto& r = records[i];
            auto hits = index.search(r.query_text, pool_size);
            std::vector<const SearchHit*> pool;
            pool.reserve(hits.size());
            for (const auto& h : hits)
                if (h.doc_id != r.doc_id) pool.push_back(&h);
            if (pool.empty()) return;
            Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
            const auto* neg = pool[static_cast<std::size_t>(rng.uniform_index(pool.size()))];
            Triple t;
            t.query_text = r.query_text;
            t.positive_doc_id = r.doc_id;
            t.negative_doc_id = neg->doc_id;
            const auto* pos_doc = corpus.find(r.doc_id);
            t.positive_text = pos_doc ? pos_doc->flattened() : r.doc_text;
            const auto* neg_doc = corpus.find(neg->doc_id);
            if (!neg_doc) throw Error("index and corpus disagree: unknown document " + neg->doc_id);
            t.negative_text = neg_doc->flattened();
            slots[i] = std::move(t);
        },
        threads);

    MiningResult out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (slots[i])
            out.triples.push_back(std::move(*slots[i]));
        else
            out.skipped.push_back({i, records[i].doc_id, records[i].query_text, "no_negative_available"});
    }
    return out;
}

inline MiningResult mine_negatives(std::span<const ScoredRecord> scored, const Index& index, const Corpus& corpus,
                                   std::size_t pool_size = 1000, std::uint64_t seed = 1,
                                   std::size_t threads = default_thread_count()) {
    std::vector<GeneratedRecord> records;
    records.reserve(scored.size());
    for (const auto& s : scored) records.push_back(s.record);
    return mine_negatives(std::span<const GeneratedRecord>(records), index, corpus, pool_size, seed, threads);
}

/// "query<TAB>positive text<TAB>negative text" per line; tabs and newlines
/// inside texts become single spaces.
inline void write_triples(const std::vector<Triple>& triples, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& t : triples)
        out << text::flatten_line(t.query_text) << '\t' << text::flatten_line(t.positive_text) << '\t'
            << text::flatten_line(t.negative_text) << '\n';
}

struct TripleText {
    std::string query;
    std::string positive;
    std::string negative;
};

inline std::vector<TripleText> read_triples(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    std::vector<TripleText> out;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        auto cols = text::split(raw, '\t');
        if (cols.size() != 3 || text::trim(cols[0]).empty())
            throw ParseError(path.string(), lineno, raw, "expected 'query<TAB>positive<TAB>negative'");
        out.push_back({std::string(cols[0]), std::string(cols[1]), std::string(cols[2])});
    }
    return out;
}

}  // namespace inpars
