#pragma once

#include <array>
#include <string_view>

namespace inpars::builtin {

// Fixed examples of the two InPars templates: MS MARCO training passages with
// their original query and a hand-written, more informative "good" question.
struct FixedExample {
    std::string_view query_id;
    std::string_view doc_id;
    std::string_view document;
    std::string_view query;
    std::string_view good_query;
};

inline constexpr std::array<FixedExample, 3> kInparsExamples = {{
    {"msmarco-fixed-1", "msmarco-fixed-doc-1",
     "We don't know a lot about the effects of caffeine during pregnancy on you and your baby. So it's best to "
     "limit the amount you get each day. If you are pregnant, limit caffeine to 200 milligrams each day. This is "
     "about the amount in 1\xc2\xbd 8-ounce cups of coffee or one 12-ounce cup of coffee.",
     "Is a little caffeine ok during pregnancy?",
     "How much caffeine is ok for a pregnant woman to have?"},
    {"msmarco-fixed-2", "msmarco-fixed-doc-2",
     "Passiflora herbertiana. A rare passion fruit native to Australia. Fruits are green-skinned, white fleshed, "
     "with an unknown edible rating. Some sources list the fruit as edible, sweet and tasty, while others list the "
     "fruits as being bitter and inedible.",
     "What fruit is native to Australia?",
     "What is Passiflora herbertiana (a rare passion fruit) and how does it taste like?"},
    {"msmarco-fixed-3", "msmarco-fixed-doc-3",
     "The Canadian Armed Forces. 1  The first large-scale Canadian peacekeeping mission started in Egypt on "
     "November 24, 1956. 2  There are approximately 65,000 Regular Force and 25,000 reservist members in the "
     "Canadian military. 3  In Canada, August 9 is designated as National Peacekeepers' Day.",
     "How large is the Canadian military?",
     "How many people are in the Canadian Armed Forces, and when was their first peacekeeping mission?"},
}};

inline constexpr std::string_view kVanillaDocumentPrefix = "Document:";
inline constexpr std::string_view kVanillaQueryPrefix = "Relevant Query:";
inline constexpr std::string_view kGbqDocumentPrefix = "Document:";
inline constexpr std::string_view kGbqBadPrefix = "Bad Question:";
inline constexpr std::string_view kGbqGoodPrefix = "Good Question:";

inline constexpr std::string_view kFallbackDocumentPrefix = "Document:";
inline constexpr std::string_view kFallbackQueryPrefix = "Question:";

/// Default per-dataset prefixes; same content as data/promptagator_prefixes.tsv.
inline constexpr std::string_view kPromptagatorPrefixes =
    "# dataset<TAB>document prefix<TAB>query prefix\n"
    "arguana\tArgument:\tCounter Argument:\n";

}  // namespace inpars::builtin
