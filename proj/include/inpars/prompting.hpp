#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "inpars/builtin_templates.hpp"
#include "inpars/dataset.hpp"
#include "inpars/error.hpp"
#include "inpars/random.hpp"
#include "inpars/text.hpp"
#include "inpars/token_counter.hpp"

namespace inpars {

enum class TemplateKind { inpars_vanilla, inpars_gbq, promptagator, custom };

inline std::string_view to_string(TemplateKind k) {
    switch (k) {
        case TemplateKind::inpars_vanilla: return "inpars";
        case TemplateKind::inpars_gbq: return "inpars-gbq";
        case TemplateKind::promptagator: return "promptagator";
        case TemplateKind::custom: return "custom";
    }
    return "?";
}

struct PromptTemplate {
    TemplateKind kind = TemplateKind::inpars_vanilla;
    std::string document_prefix;
    std::string query_prefix;
    /// Rendered before a guided example's original query (GBQ "bad" question).
    std::string contrast_prefix;
    std::optional<std::vector<FewShotExample>> fixed_examples;
    std::optional<std::string> header_text;
    std::size_t n_fewshot = 3;
    /// Custom templates without an {examples} slot are zero-shot.
    bool has_example_slot = true;

    std::string name() const { return std::string(to_string(kind)); }

    /// True when examples are supplied per render rather than fixed.
    bool dynamic_examples() const {
        return kind == TemplateKind::promptagator || (kind == TemplateKind::custom && has_example_slot);
    }
};

class UnknownTemplateError : public Error {
public:
    using Error::Error;
};

class BudgetExceededError : public Error {
public:
    using Error::Error;
};

/// dataset name -> (document prefix, query prefix)
using PrefixMap = std::map<std::string, std::pair<std::string, std::string>>;

inline PrefixMap parse_prefix_map(std::istream& in, const std::string& source) {
    PrefixMap out;
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        raw = text::strip_cr(std::move(raw));
        auto t = text::trim(raw);
        if (t.empty() || t.front() == '#') continue;
        auto cols = text::split(raw, '\t');
        if (cols.size() != 3 || text::trim(cols[0]).empty())
            throw ParseError(source, lineno, raw, "expected 'dataset<TAB>document prefix<TAB>query prefix'");
        out[text::to_lower_ascii(text::trim(cols[0]))] = {std::string(text::trim(cols[1])),
                                                          std::string(text::trim(cols[2]))};
    }
    return out;
}

inline PrefixMap default_prefix_map() {
    std::istringstream in{std::string(builtin::kPromptagatorPrefixes)};
    return parse_prefix_map(in, "<builtin prefixes>");
}

inline PrefixMap load_prefix_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open prefix file: " + path.string());
    return parse_prefix_map(in, path.string());
}

namespace detail {

inline std::vector<FewShotExample> inpars_fixed_examples(bool guided) {
    std::vector<FewShotExample> out;
    for (const auto& e : builtin::kInparsExamples) {
        FewShotExample ex;
        ex.query = {std::string(e.query_id), std::string(e.query)};
        ex.document = {std::string(e.doc_id), "", std::string(e.document)};
        ex.origin_split = Split::train;
        if (guided) ex.guided_query = std::string(e.good_query);
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace detail

/// Parses a custom template. The layout is
///     [header]{examples}<document prefix> {document}<newline><query prefix> {query}
/// where {examples} is optional and {query} must end the template.
inline PromptTemplate parse_custom_template(std::string_view body, const std::string& source = "<custom>") {
    constexpr std::string_view kExamples = "{examples}", kDocument = "{document}", kQuery = "{query}";
    PromptTemplate t;
    t.kind = TemplateKind::custom;
    std::string_view block = body;
    auto ex = body.find(kExamples);
    t.has_example_slot = ex != std::string_view::npos;
    if (t.has_example_slot) {
        if (ex > 0) t.header_text = std::string(body.substr(0, ex));
        block = body.substr(ex + kExamples.size());
    }
    auto doc = block.find(kDocument);
    auto q = block.find(kQuery);
    if (doc == std::string_view::npos || q == std::string_view::npos || q < doc)
        throw ConfigError(source + ": custom template needs {document} followed by {query}");
    if (!text::trim(block.substr(q + kQuery.size())).empty())
        throw ConfigError(source + ": {query} must be the last element of a custom template");
    if (block.find(kExamples) != std::string_view::npos || block.find(kDocument, doc + 1) != std::string_view::npos)
        throw ConfigError(source + ": placeholders may appear only once");
    t.document_prefix = std::string(text::trim(block.substr(0, doc)));
    t.query_prefix = std::string(text::trim(block.substr(doc + kDocument.size(), q - doc - kDocument.size())));
    if (t.query_prefix.empty()) throw ConfigError(source + ": custom template needs a non-empty query prefix");
    return t;
}

/// Resolves "inpars", "inpars-gbq", "promptagator" or a path to a custom
/// template file. Promptagator prefixes are looked up by dataset name.
inline PromptTemplate load_template(std::string_view name_or_path, std::string_view dataset_name = {},
                                    const std::optional<PrefixMap>& prefixes = std::nullopt,
                                    std::size_t n_fewshot = 3) {
    if (n_fewshot == 0) throw ConfigError("n_fewshot must be >= 1");
    PromptTemplate t;
    t.n_fewshot = n_fewshot;
    if (name_or_path == "inpars" || name_or_path == "inpars-vanilla") {
        t.kind = TemplateKind::inpars_vanilla;
        t.document_prefix = builtin::kVanillaDocumentPrefix;
        t.query_prefix = builtin::kVanillaQueryPrefix;
        t.fixed_examples = detail::inpars_fixed_examples(false);
        t.n_fewshot = 3;
        return t;
    }
    if (name_or_path == "inpars-gbq") {
        t.kind = TemplateKind::inpars_gbq;
        t.document_prefix = builtin::kGbqDocumentPrefix;
        t.query_prefix = builtin::kGbqGoodPrefix;
        t.contrast_prefix = builtin::kGbqBadPrefix;
        t.fixed_examples = detail::inpars_fixed_examples(true);
        t.n_fewshot = 3;
        return t;
    }
    if (name_or_path == "promptagator") {
        t.kind = TemplateKind::promptagator;
        auto map = prefixes ? *prefixes : default_prefix_map();
        auto it = map.find(text::to_lower_ascii(dataset_name));
        if (it != map.end()) {
            t.document_prefix = it->second.first;
            t.query_prefix = it->second.second;
        } else {
            t.document_prefix = builtin::kFallbackDocumentPrefix;
            t.query_prefix = builtin::kFallbackQueryPrefix;
        }
        return t;
    }
    if (name_or_path == "custom") throw ConfigError("the custom template needs a template file path");
    std::filesystem::path path{std::string(name_or_path)};
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec))
        throw UnknownTemplateError("unknown template '" + std::string(name_or_path) +
                                   "' (expected inpars, inpars-gbq, promptagator or a template file)");
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    auto custom = parse_custom_template(buf.str(), path.string());
    custom.n_fewshot = n_fewshot;
    return custom;
}

struct RenderedPrompt {
    std::string text;
    std::string target_doc_id;
    /// Target document text as it appears in the prompt (possibly truncated).
    std::string target_text;
    /// "query_id/doc_id" of each example in rendered order.
    std::vector<std::string> example_order;
    std::size_t token_count = 0;
    bool truncated = false;
};

namespace detail {

inline void append_field(std::string& out, std::string_view prefix, std::string_view value) {
    out += prefix;
    if (!value.empty()) {
        if (!prefix.empty()) out += ' ';
        out += value;
    }
}

inline std::string render_examples(const PromptTemplate& t, const std::vector<const FewShotExample*>& order) {
    std::string out;
    if (t.header_text) out += *t.header_text;
    for (const auto* ex : order) {
        append_field(out, t.document_prefix, text::flatten_line(ex->document.flattened()));
        out += '\n';
        if (ex->guided_query && !t.contrast_prefix.empty()) {
            append_field(out, t.contrast_prefix, text::flatten_line(ex->query.text));
            out += '\n';
            append_field(out, t.query_prefix, text::flatten_line(*ex->guided_query));
        } else {
            append_field(out, t.query_prefix, text::flatten_line(ex->query.text));
        }
        out += "\n\n";
    }
    return out;
}

inline std::string render_target(std::string_view examples, const PromptTemplate& t, std::string_view target) {
    std::string out(examples);
    append_field(out, t.document_prefix, target);
    out += '\n';
    out += t.query_prefix;
    return out;
}

}  // namespace detail

/// Builds the prompt for one target document. Dynamic templates shuffle their
/// examples with a stream keyed by (seed, target doc id); fixed templates keep
/// canonical order. Over-budget prompts lose tokens from the end of the target
/// document; examples are never shortened. Newlines and tabs inside documents
/// and queries are rendered as spaces.
inline RenderedPrompt render_prompt(const PromptTemplate& t, const std::vector<FewShotExample>& fewshot,
                                    const Document& target, std::uint64_t seed, std::size_t token_budget,
                                    const TokenCounter& counter) {
    if (token_budget == 0) throw ConfigError("token budget must be > 0");

    std::vector<const FewShotExample*> order;
    if (t.dynamic_examples()) {
        if (fewshot.size() != t.n_fewshot)
            throw ConfigError("template " + t.name() + " expects " + std::to_string(t.n_fewshot) +
                              " few-shot examples, got " + std::to_string(fewshot.size()));
        for (const auto& ex : fewshot) {
            if (ex.document.doc_id == target.doc_id)
                throw ConfigError("target document " + target.doc_id + " is also a few-shot example");
            order.push_back(&ex);
        }
        Rng rng(derive_seed(seed, "order:" + target.doc_id));
        rng.shuffle(order);
    } else {
        if (!fewshot.empty())
            throw ConfigError("template " + t.name() + " takes no per-document examples");
        if (t.fixed_examples)
            for (const auto& ex : *t.fixed_examples) order.push_back(&ex);
    }

    RenderedPrompt out;
    out.target_doc_id = target.doc_id;
    for (const auto* ex : order) out.example_order.push_back(ex->query.query_id + "/" + ex->document.doc_id);

    const std::string examples = detail::render_examples(t, order);
    const std::string full = text::flatten_line(target.flattened());
    std::string_view body = text::trim(full);

    std::string text = detail::render_target(examples, t, body);
    std::size_t count = counter.count(text);
    if (count > token_budget) {
        // Largest target prefix that fits; rendered size is monotone in the prefix length.
        const std::size_t total = counter.count(body);
        auto fits = [&](std::size_t m) {
            return counter.count(detail::render_target(examples, t, text::trim_right(counter.truncate(body, m)))) <=
                   token_budget;
        };
        if (!fits(0))
            throw BudgetExceededError("prompt needs more than " + std::to_string(token_budget) +
                                      " tokens even with an empty target document");
        std::size_t lo = 0, hi = total;
        while (lo + 1 < hi) {
            std::size_t mid = lo + (hi - lo) / 2;
            (fits(mid) ? lo : hi) = mid;
        }
        body = text::trim_right(counter.truncate(body, lo));
        text = detail::render_target(examples, t, body);
        count = counter.count(text);
        out.truncated = true;
    }
    out.text = std::move(text);
    out.target_text = std::string(body);
    out.token_count = count;
    return out;
}

}  // namespace inpars
