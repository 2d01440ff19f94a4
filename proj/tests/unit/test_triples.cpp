#include <gtest/gtest.h>

#include <random>

#include "inpars/triples.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace inpars;

namespace {

std::vector<GeneratedRecord> records_for(const Corpus& corpus, std::mt19937_64& rng, std::size_t n) {
    std::vector<GeneratedRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& d = corpus[rng() % corpus.size()];
        GeneratedRecord r;
        r.doc_id = d.doc_id;
        r.doc_text = d.flattened();
        r.query_text = oracle::random_query(rng);
        r.token_logprobs = {-1.0};
        out.push_back(r);
    }
    return out;
}

}  // namespace

TEST(Triples, NegativesComeFromThePoolAndNeverEqualThePositive) {
    std::mt19937_64 rng(2);
    auto corpus = oracle::random_corpus(rng, 300);
    auto index = Index::build(corpus);
    auto records = records_for(corpus, rng, 200);
    const std::size_t pool = 25;
    auto res = mine_negatives(std::span<const GeneratedRecord>(records), index, corpus, pool, 3);
    EXPECT_EQ(res.triples.size() + res.skipped.size(), records.size());
    std::size_t t = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto hits = index.search(records[i].query_text, pool);
        bool usable = false;
        for (auto& h : hits) usable |= h.doc_id != records[i].doc_id;
        if (!usable) continue;
        const auto& tr = res.triples.at(t++);
        EXPECT_EQ(tr.positive_doc_id, records[i].doc_id);
        EXPECT_NE(tr.negative_doc_id, tr.positive_doc_id);
        bool in_pool = false;
        for (auto& h : hits) in_pool |= h.doc_id == tr.negative_doc_id;
        EXPECT_TRUE(in_pool);
        EXPECT_EQ(tr.negative_text, corpus.find(tr.negative_doc_id)->flattened());
    }
    EXPECT_EQ(t, res.triples.size());
}

TEST(Triples, SkipsWhenOnlyThePositiveMatches) {
    Corpus c;
    c.add({"p", "", "zebra stripes"});
    c.add({"o", "", "lions"});
    auto index = Index::build(c);
    GeneratedRecord r;
    r.doc_id = "p";
    r.query_text = "zebra";
    GeneratedRecord none = r;
    none.query_text = "nothing matches";
    std::vector<GeneratedRecord> rs{r, none};
    auto res = mine_negatives(std::span<const GeneratedRecord>(rs), index, c);
    EXPECT_TRUE(res.triples.empty());
    ASSERT_EQ(res.skipped.size(), 2u);
    EXPECT_EQ(res.skipped[0].reason, "no_negative_available");
    EXPECT_EQ(res.skipped[1].record_index, 1u);
}

TEST(Triples, DeterministicAcrossThreadCountsAndSeedSensitive) {
    std::mt19937_64 rng(6);
    auto corpus = oracle::random_corpus(rng, 200);
    auto index = Index::build(corpus);
    auto records = records_for(corpus, rng, 100);
    std::span<const GeneratedRecord> span(records);
    auto a = mine_negatives(span, index, corpus, 50, 9, 1);
    auto b = mine_negatives(span, index, corpus, 50, 9, 8);
    auto c = mine_negatives(span, index, corpus, 50, 10, 8);
    EXPECT_EQ(a.triples, b.triples);
    EXPECT_NE(a.triples, c.triples);
    EXPECT_THROW(mine_negatives(span, index, corpus, 0), ConfigError);
}

TEST(Triples, FileRoundTrip) {
    std::vector<Triple> ts{{"q one", "p", "n", "pos\ttext\nhere", "neg text"}, {"q2", "p2", "n2", "a", "b"}};
    testutil::TempDir dir;
    write_triples(ts, dir / "t.tsv");
    EXPECT_EQ(testutil::read_file(dir / "t.tsv"), "q one\tpos text here\tneg text\nq2\ta\tb\n");
    auto back = read_triples(dir / "t.tsv");
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].positive, "pos text here");
    testutil::write_file(dir / "bad.tsv", "q\tonly\n");
    try {
        read_triples(dir / "bad.tsv");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 1u);
    }
}
