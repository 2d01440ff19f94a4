#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>

#include "inpars/random.hpp"
#include "inpars/text.hpp"

using namespace inpars;

TEST(Text, SplitWhitespaceMatchesPythonSplit) {
    auto v = text::split_whitespace("  a\tb\n\nc  ");
    ASSERT_EQ(v.size(), 3u);
    EXPECT_EQ(v[0], "a");
    EXPECT_EQ(v[1], "b");
    EXPECT_EQ(v[2], "c");
    EXPECT_TRUE(text::split_whitespace("   ").empty());
    EXPECT_EQ(text::count_words(" one two  three "), 3u);
}

TEST(Text, FlattenLineCollapsesControlWhitespace) {
    EXPECT_EQ(text::flatten_line("a\r\n\tb\nc"), "a b c");
    EXPECT_EQ(text::flatten_line("plain"), "plain");
}

TEST(Text, TrimAndSplit) {
    EXPECT_EQ(text::trim("  x y \n"), "x y");
    EXPECT_EQ(text::trim_right("  x  "), "  x");
    auto cols = text::split("a\t\tb", '\t');
    ASSERT_EQ(cols.size(), 3u);
    EXPECT_EQ(cols[1], "");
    EXPECT_EQ(text::strip_cr("abc\r"), "abc");
    EXPECT_EQ(text::to_lower_ascii("AbC\xc3\x89"), "abc\xc3\x89");
}

TEST(Random, DeriveSeedSeparatesKeysAndSeeds) {
    EXPECT_EQ(derive_seed(1, "documents"), derive_seed(1, "documents"));
    EXPECT_NE(derive_seed(1, "documents"), derive_seed(2, "documents"));
    EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
    EXPECT_NE(derive_seed(1, std::uint64_t{0}), derive_seed(1, std::uint64_t{1}));
}

TEST(Random, UniformIndexStaysInRangeAndCoversIt) {
    Rng rng(42);
    std::map<std::uint64_t, int> seen;
    for (int i = 0; i < 7000; ++i) {
        auto x = rng.uniform_index(7);
        ASSERT_LT(x, 7u);
        ++seen[x];
    }
    ASSERT_EQ(seen.size(), 7u);
    for (auto& [k, c] : seen) EXPECT_GT(c, 800);
    Rng one(3);
    EXPECT_EQ(one.uniform_index(1), 0u);
}

TEST(Random, ShuffleIsAPermutationAndDeterministic) {
    std::vector<int> a(50), b;
    std::iota(a.begin(), a.end(), 0);
    b = a;
    Rng r1(9), r2(9);
    r1.shuffle(a);
    r2.shuffle(b);
    EXPECT_EQ(a, b);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
    EXPECT_NE(a, sorted);
}
