#include <gtest/gtest.h>

#include "inpars/token_counter.hpp"
#include "test_util.hpp"

using namespace inpars;

TEST(WhitespaceCounter, CountsAndTruncates) {
    WhitespaceTokenCounter c;
    EXPECT_EQ(c.count("  a bb\tccc\n"), 3u);
    EXPECT_EQ(c.truncate("a bb ccc", 2), "a bb");
    EXPECT_EQ(c.truncate("a bb ccc", 0), "");
    EXPECT_EQ(c.truncate("a bb ccc", 5), "a bb ccc");
}

TEST(BpeCounter, AppliesMergesByRank) {
    BpeTokenCounter c({{"h", "e"}, {"l", "l"}, {"he", "ll"}, {"hell", "o"}, {"\xc4\xa0", "w"}});
    EXPECT_EQ(c.count("hello"), 1u);
    EXPECT_EQ(c.count("help"), 3u);  // he + l + p
    // " world" starts with the byte symbol for a space, merged with "w".
    EXPECT_EQ(c.count("hello world"), 1u + 5u);
    EXPECT_EQ(c.count(""), 0u);
    EXPECT_EQ(c.truncate("hello world", 1), "hello");
    EXPECT_EQ(c.truncate("hello world", 3), "hello");
    EXPECT_EQ(c.truncate("hello world", 6), "hello world");
}

TEST(BpeCounter, PretokenizesContractionsDigitsAndPunctuation) {
    BpeTokenCounter c({});
    // Without merges every byte is its own token.
    EXPECT_EQ(c.count("it's 42!"), 8u);
    EXPECT_EQ(c.count("\xc3\xa9"), 2u);
}

TEST(BpeCounter, LoadsMergesFile) {
    testutil::TempDir dir;
    testutil::write_file(dir / "merges.txt", "#version: 0.2\nh e\nl l\n");
    auto c = BpeTokenCounter::from_file((dir / "merges.txt").string());
    EXPECT_EQ(c.merge_count(), 2u);
    EXPECT_EQ(c.count("hell"), 2u);
    testutil::write_file(dir / "bad.txt", "hello\n");
    EXPECT_THROW(BpeTokenCounter::from_file((dir / "bad.txt").string()), ParseError);
}
