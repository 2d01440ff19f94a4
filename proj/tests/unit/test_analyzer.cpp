#include <gtest/gtest.h>

#include "inpars/analyzer.hpp"
#include "inpars/porter_stemmer.hpp"

using namespace inpars;

TEST(PorterStemmer, ReferenceVocabulary) {
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"caresses", "caress"},     {"ponies", "poni"},         {"ties", "ti"},
        {"caress", "caress"},       {"cats", "cat"},            {"feed", "feed"},
        {"agreed", "agre"},         {"plastered", "plaster"},   {"motoring", "motor"},
        {"sing", "sing"},           {"conflated", "conflat"},   {"troubled", "troubl"},
        {"sized", "size"},          {"hopping", "hop"},         {"falling", "fall"},
        {"hissing", "hiss"},        {"filing", "file"},         {"happy", "happi"},
        {"relational", "relat"},    {"conditional", "condit"},  {"rational", "ration"},
        {"digitizer", "digit"},     {"operator", "oper"},       {"feudalism", "feudal"},
        {"decisiveness", "decis"},  {"hopefulness", "hope"},    {"callousness", "callous"},
        {"formaliti", "formal"},    {"sensitiviti", "sensit"},  {"triplicate", "triplic"},
        {"formative", "form"},      {"formalize", "formal"},    {"electrical", "electr"},
        {"hopeful", "hope"},        {"goodness", "good"},       {"revival", "reviv"},
        {"allowance", "allow"},     {"inference", "infer"},     {"airliner", "airlin"},
        {"adjustable", "adjust"},   {"defensible", "defens"},   {"irritant", "irrit"},
        {"replacement", "replac"},  {"adjustment", "adjust"},   {"dependent", "depend"},
        {"adoption", "adopt"},      {"communism", "commun"},    {"activate", "activ"},
        {"effective", "effect"},    {"bowdlerize", "bowdler"},  {"probate", "probat"},
        {"rate", "rate"},           {"cease", "ceas"},          {"controll", "control"},
        {"roll", "roll"},           {"generalizations", "gener"}, {"as", "as"},
    };
    PorterStemmer stem;
    for (const auto& [in, out] : cases) EXPECT_EQ(stem(in), out) << in;
}

TEST(Analyzer, LowercasesSplitsDropsStopwordsAndStems) {
    Analyzer a;
    auto toks = a("The RUNNING dogs, aren't in-the park!");
    std::vector<std::string> expected{"run", "dog", "aren", "t", "park"};
    EXPECT_EQ(toks, expected);
}

TEST(Analyzer, ConfigurableStagesAndNonAscii) {
    Analyzer plain({false, false});
    std::vector<std::string> expected{"the", "running", "dogs"};
    EXPECT_EQ(plain("The running dogs"), expected);
    Analyzer a;
    auto toks = a("caf\xc3\xa9s x2 42");
    ASSERT_EQ(toks.size(), 3u);
    EXPECT_EQ(toks[0], "caf\xc3\xa9s");  // non-ASCII tokens are not stemmed
    EXPECT_EQ(toks[1], "x2");
    EXPECT_EQ(toks[2], "42");
    EXPECT_TRUE(is_stopword("such"));
    EXPECT_FALSE(is_stopword("dog"));
    EXPECT_EQ(kEnglishStopwords.size(), 33u);
}
