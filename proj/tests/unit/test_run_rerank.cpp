#include <gtest/gtest.h>

#include <limits>
#include <random>
#include <sstream>

#include "inpars/rerank.hpp"
#include "inpars/run.hpp"
#include "test_util.hpp"

using namespace inpars;

namespace {

Run sample_run() {
    inpars::Run r;
    r.entries = {{"q1", "a", 1, 2.5, "bm25"}, {"q1", "b", 2, 2.5, "bm25"}, {"q1", "c", 3, -0.125, "bm25"},
                 {"q2", "a", 1, 1e-300, "bm25"}};
    return r;
}

class ScriptedScorer final : public RelevanceScorer {
public:
    std::vector<std::optional<double>> score_batch(std::span<const ScorePair> pairs) const override {
        std::vector<std::optional<double>> out;
        for (const auto& p : pairs) {
            if (p.document.find("broken") != std::string_view::npos)
                out.push_back(std::nullopt);
            else if (p.document.find("high") != std::string_view::npos)
                out.push_back(10.0);
            else
                out.push_back(1.0);
        }
        return out;
    }
    std::string name() const override { return "scripted"; }
};

}  // namespace

TEST(Run, WriteFormatIsExact) {
    std::ostringstream out;
    write_run(sample_run(), out);
    EXPECT_EQ(out.str(),
              "q1 Q0 a 1 2.5 bm25\nq1 Q0 b 2 2.5 bm25\nq1 Q0 c 3 -0.125 bm25\nq2 Q0 a 1 1e-300 bm25\n");
}

TEST(Run, RoundTripKeepsFullPrecision) {
    inpars::Run r;
    std::mt19937_64 rng(1);
    for (int i = 0; i < 50; ++i)
        r.entries.push_back({"q", "d" + std::to_string(i), static_cast<std::size_t>(i + 1),
                             1.0 / (i + 3.0) - i * 1e-9, "t"});
    r.entries.push_back({"z", "x", 1, -std::numeric_limits<double>::infinity(), "t"});
    testutil::TempDir dir;
    write_run(r, dir / "run.txt");
    EXPECT_EQ(read_run(dir / "run.txt"), r);
}

TEST(Run, ValidationCatchesBadRuns) {
    auto bad = sample_run();
    bad.entries[1].rank = 3;
    EXPECT_THROW(validate_run(bad), RunValidationError);
    bad = sample_run();
    bad.entries[2].score = 5;
    EXPECT_THROW(validate_run(bad), RunValidationError);
    bad = sample_run();
    bad.entries[1].doc_id = "a";
    EXPECT_THROW(validate_run(bad), RunValidationError);
    bad = sample_run();
    bad.entries[0].tag = "two words";
    EXPECT_THROW(validate_run(bad), RunValidationError);
    bad = sample_run();
    bad.entries[3].score = std::nan("");
    EXPECT_THROW(validate_run(bad), RunValidationError);
    EXPECT_NO_THROW(validate_run(inpars::Run{}));
}

TEST(Run, ReadReportsMalformedLines) {
    testutil::TempDir dir;
    testutil::write_file(dir / "r.txt", "q Q0 a 1 1.0 t\nq Q0 b two 0.5 t\n");
    try {
        read_run(dir / "r.txt");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    testutil::write_file(dir / "r2.txt", "q Q0 a 1 1.0\n");
    EXPECT_THROW(read_run(dir / "r2.txt"), ParseError);
    testutil::write_file(dir / "r3.txt", "q Q0 a 0 1.0 t\n");
    EXPECT_THROW(read_run(dir / "r3.txt"), ParseError);
    testutil::write_file(dir / "tabs.txt", "q\tQ0\ta\t1\t1.5\tt\r\n\n");
    EXPECT_EQ(read_run(dir / "tabs.txt").entries.size(), 1u);
    try {
        read_run(dir / "missing.txt");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("not found"), std::string::npos);
    }
}

TEST(Rerank, ReordersByScoreKeepingPriorOrderOnTies) {
    Corpus c;
    c.add({"a", "", "plain"});
    c.add({"b", "", "high"});
    c.add({"c", "", "plain too"});
    c.add({"d", "", "broken"});
    std::vector<Query> qs{{"q1", "question"}};
    inpars::Run first;
    first.entries = {{"q1", "a", 1, 4, "bm25"}, {"q1", "d", 2, 3, "bm25"}, {"q1", "c", 3, 2, "bm25"},
                     {"q1", "b", 4, 1, "bm25"}};
    ScriptedScorer s;
    auto res = rerank_run(first, qs, c, s, 1000, "mono");
    std::vector<std::string> order;
    for (auto& e : res.run.entries) order.push_back(e.doc_id);
    EXPECT_EQ(order, (std::vector<std::string>{"b", "a", "c", "d"}));
    EXPECT_EQ(res.run.entries[3].score, -std::numeric_limits<double>::infinity());
    EXPECT_EQ(res.run.entries[0].tag, "mono");
    EXPECT_EQ(res.warnings.size(), 1u);

    auto top2 = rerank_run(first, qs, c, s, 2);
    ASSERT_EQ(top2.run.entries.size(), 2u);
    EXPECT_EQ(top2.run.entries[0].doc_id, "a");
    EXPECT_EQ(top2.run.entries[1].doc_id, "d");
}

TEST(Rerank, UnknownIdsAreErrors) {
    Corpus c;
    c.add({"a", "", "x"});
    ScriptedScorer s;
    inpars::Run r;
    r.entries = {{"q1", "zz", 1, 1, "t"}};
    try {
        rerank_run(r, {{"q1", "q"}}, c, s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("zz"), std::string::npos);
    }
    r.entries = {{"q9", "a", 1, 1, "t"}};
    EXPECT_THROW(rerank_run(r, {{"q1", "q"}}, c, s), Error);
    EXPECT_THROW(rerank_run(r, {{"q9", "q"}}, c, s, 0), ConfigError);
}

TEST(Rerank, FromBm25Hits) {
    std::map<std::string, std::vector<SearchHit>> hits{{"q", {{"a", 2.0, 1}, {"b", 1.0, 2}}}};
    auto run = run_from_hits(hits, "bm25");
    ASSERT_EQ(run.entries.size(), 2u);
    EXPECT_EQ(run.entries[1], (RunEntry{"q", "b", 2, 1.0, "bm25"}));
}
