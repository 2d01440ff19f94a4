// Command-line front end: generate, filter, index, triples, rerank, evaluate
// (plus a train stub that checks a triples file).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "cli_support.hpp"

#include "inpars/dataset.hpp"
#include "inpars/evaluation.hpp"
#include "inpars/filtering.hpp"
#include "inpars/generation.hpp"
#include "inpars/prompting.hpp"
#include "inpars/rerank.hpp"
#include "inpars/retrieval.hpp"
#include "inpars/run.hpp"
#include "inpars/scorer.hpp"
#include "inpars/triples.hpp"

namespace fs = std::filesystem;
using namespace inpars;
using inpars::cli::ojson;
using inpars::cli::Stage;

namespace {

struct DatasetArgs {
    std::string dir;
    std::string format = "beir-jsonl";
    std::string name;

    void add(Stage& s, bool required = true) {
        auto* o = s.opt("dataset", dir, "BEIR-style dataset directory (corpus, queries, qrels/)");
        if (required) o->required();
        s.opt("dataset_format", format, "beir-jsonl or tsv");
        s.opt("dataset_name", name, "dataset name used for prompt prefixes (default: directory name)");
    }

    void resolve() {
        if (name.empty() && !dir.empty()) name = fs::path(dir).lexically_normal().filename().string();
        if (name.empty() && !dir.empty()) name = fs::path(dir).lexically_normal().parent_path().filename().string();
    }

    DatasetPaths paths() const { return beir_layout(dir, parse_dataset_format(format)); }

    Dataset load() const { return load_dataset(paths(), parse_dataset_format(format)); }

    std::vector<fs::path> files() const {
        auto p = paths();
        std::vector<fs::path> out{p.corpus};
        out.insert(out.end(), p.queries.begin(), p.queries.end());
        for (const auto& [s, q] : p.qrels) out.push_back(q);
        return out;
    }
};

struct EndpointArgs {
    std::string url;
    std::string model = "EleutherAI/gpt-j-6b";
    std::string api_key;
    std::size_t timeout_ms = 60'000;
    int max_retries = 3;
    std::size_t backoff_ms = 500;

    void add(Stage& s, const std::string& url_key, const std::string& url_help) {
        s.opt(url_key, url, url_help)->envname(cli::kEnvEndpointUrl);
        s.opt("model", model, "model name sent to the endpoint");
        s.secret("api_key", api_key, "bearer token for the endpoint")->envname(cli::kEnvApiKey);
        s.opt("timeout_ms", timeout_ms, "request timeout in milliseconds");
        s.opt("max_retries", max_retries, "retries for connection errors, 429 and 5xx");
        s.opt("backoff_ms", backoff_ms, "initial retry backoff in milliseconds (doubles per retry)");
    }

    EndpointConfig config() const {
        EndpointConfig c;
        c.base_url = url;
        c.model = model;
        if (!api_key.empty()) c.auth_token = api_key;
        c.timeout = std::chrono::milliseconds(timeout_ms);
        c.max_retries = max_retries;
        c.initial_backoff = std::chrono::milliseconds(backoff_ms);
        c.validate();
        return c;
    }
};

std::unique_ptr<TokenCounter> make_counter(const std::string& spec) {
    if (spec == "whitespace") return std::make_unique<WhitespaceTokenCounter>();
    if (spec.rfind("bpe:", 0) == 0) return std::make_unique<BpeTokenCounter>(BpeTokenCounter::from_file(spec.substr(4)));
    throw ConfigError("unknown tokenizer '" + spec + "' (expected whitespace or bpe:<merges.txt>)");
}

void write_jsonl(const fs::path& path, const std::vector<ojson>& lines) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    for (const auto& j : lines) out << j.dump() << '\n';
}

std::string default_sibling(const std::string& output, const std::string& suffix) { return output + suffix; }

Split parse_split_arg(const std::string& s) {
    auto split = parse_split(s);
    if (!split) throw ConfigError("unknown split '" + s + "' (expected train, dev or test)");
    return *split;
}

AnalyzerConfig analyzer_config(bool no_stopwords, bool no_stemming) { return {!no_stopwords, !no_stemming}; }

/// Query ids to leave out of evaluation: a few-shot sidecar (JSON with
/// "used_query_ids") or a plain list with one id per line.
std::set<std::string> read_excluded_queries(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string() + " (file not found)");
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::set<std::string> out;
    auto body = text::trim(content);
    if (!body.empty() && body.front() == '{') {
        auto j = nlohmann::json::parse(content);
        for (const auto& id : j.at("used_query_ids")) out.insert(id.get<std::string>());
        return out;
    }
    std::string line;
    std::istringstream lines(content);
    while (std::getline(lines, line)) {
        auto id = text::trim(text::strip_cr(line));
        if (!id.empty() && id.front() != '#') out.insert(std::string(id));
    }
    return out;
}

// ---------------------------------------------------------------------------

struct GenerateCmd {
    Stage stage;
    DatasetArgs data;
    EndpointArgs endpoint;
    std::string prompt = "inpars";
    std::string prefixes;
    std::string output;
    std::string rejects;
    bool mock = false;
    std::string decoding = "greedy";
    double temperature = 0.0;
    std::size_t queries_per_document = 1;
    std::size_t max_new_tokens = 64;
    std::size_t num_documents = 100'000;
    std::size_t n_fewshot = 3;
    std::size_t max_prompt_tokens = 0;
    std::string tokenizer = "whitespace";
    std::uint64_t seed = 1;
    std::size_t batch_size = 1;
    bool ordered = false;
    bool resume = false;
    CLI::Option* decoding_opt = nullptr;
    CLI::Option* temperature_opt = nullptr;
    CLI::Option* qpd_opt = nullptr;

    explicit GenerateCmd(CLI::App& app) : stage(app, "generate", "generate synthetic queries for sampled documents") {
        data.add(stage);
        stage.opt("prompt", prompt, "inpars, inpars-gbq, promptagator or a custom template file");
        stage.opt("prefixes", prefixes, "TSV of per-dataset promptagator prefixes (default: built-in table)");
        stage.opt("output", output, "output JSONL of generated queries")->required();
        stage.opt("rejects", rejects, "JSONL of failed work units (default: <output>.rejects.jsonl)");
        stage.flag("mock", mock, "use the offline mock generator instead of an endpoint");
        endpoint.add(stage, "endpoint_url", "completions endpoint base URL, e.g. http://localhost:8000/v1");
        decoding_opt = stage.opt("decoding", decoding, "greedy or sample (promptagator default: sample)");
        temperature_opt = stage.opt("temperature", temperature, "sampling temperature (promptagator default: 0.7)");
        qpd_opt = stage.opt("queries_per_document", queries_per_document,
                            "queries per document (promptagator default: 8)");
        stage.opt("max_new_tokens", max_new_tokens, "generation limit per query");
        stage.opt("num_documents", num_documents, "documents to sample from the corpus");
        stage.opt("n_fewshot", n_fewshot, "few-shot examples for dynamic templates");
        stage.opt("max_prompt_tokens", max_prompt_tokens, "prompt token budget (0: 2048 - max_new_tokens)");
        stage.opt("tokenizer", tokenizer, "whitespace or bpe:<merges.txt>, used for the prompt budget");
        stage.opt("seed", seed, "global seed");
        stage.opt("batch_size", batch_size, "requests in flight");
        stage.flag("ordered", ordered, "write records in prompt order");
        stage.flag("resume", resume, "skip work units already in the output or rejects file");
    }

    int run() {
        data.resolve();
        if (rejects.empty()) rejects = default_sibling(output, ".rejects.jsonl");
        if (max_prompt_tokens == 0) max_prompt_tokens = max_new_tokens < 2048 ? 2048 - max_new_tokens : 2048;
        if (prompt == "promptagator") {
            auto p = GenerationConfig::promptagator();
            if (!decoding_opt->count()) decoding = "sample";
            if (!temperature_opt->count()) temperature = p.temperature;
            if (!qpd_opt->count()) queries_per_document = p.queries_per_document;
        }
        if (decoding != "greedy" && decoding != "sample")
            throw ConfigError("unknown decoding '" + decoding + "' (expected greedy or sample)");
        if (decoding == "greedy") temperature = 0.0;

        GenerationConfig config;
        config.decoding = decoding == "greedy" ? Decoding::greedy : Decoding::sample;
        config.temperature = temperature;
        config.queries_per_document = queries_per_document;
        config.max_new_tokens = max_new_tokens;
        config.num_documents = num_documents;
        config.seed = seed;
        config.batch_size = batch_size;
        config.ordered = ordered;
        config.validate();

        std::unique_ptr<Generator> generator;
        if (mock) {
            generator = std::make_unique<MockGenerator>();
        } else {
            if (endpoint.url.empty())
                throw ConfigError("generate needs --endpoint_url (or " + std::string(cli::kEnvEndpointUrl) +
                                  ") unless --mock is given");
            generator = std::make_unique<CompletionClient>(endpoint.config());
        }

        const Dataset ds = data.load();
        std::optional<PrefixMap> prefix_map;
        if (!prefixes.empty()) prefix_map = load_prefix_map(prefixes);
        const PromptTemplate tmpl = load_template(prompt, data.name, prefix_map, n_fewshot);
        auto counter = make_counter(tokenizer);

        FewShotSample fewshot;
        std::unordered_set<std::string> exclude;
        if (tmpl.dynamic_examples()) {
            fewshot = sample_fewshot(ds, tmpl.n_fewshot, seed);
            for (const auto& ex : fewshot.examples) exclude.insert(ex.document.doc_id);
        }
        const auto doc_ids = sample_documents(ds, num_documents, seed, exclude);

        std::vector<GenerationJob> jobs(doc_ids.size());
        parallel_for(doc_ids.size(), [&](std::size_t i) {
            const Document& doc = *ds.corpus.find(doc_ids[i]);
            auto rendered = render_prompt(tmpl, fewshot.examples, doc, seed, max_prompt_tokens, *counter);
            jobs[i] = GenerationJob{std::move(rendered), doc.doc_id, doc.flattened()};
        });

        std::set<WorkKey> completed;
        if (resume) {
            completed = scan_completed(output);
            for (auto& k : scan_completed(rejects)) completed.insert(k);
        }
        JsonlSink sink(output, rejects, resume);
        const auto summary = generate(*generator, jobs, config, {data.name, tmpl.name()}, sink, completed);

        ojson fs_json;
        fs_json["used_query_ids"] = fewshot.used_query_ids;
        fs_json["examples"] = ojson::array();
        for (const auto& ex : fewshot.examples)
            fs_json["examples"].push_back({{"query_id", ex.query.query_id},
                                           {"doc_id", ex.document.doc_id},
                                           {"split", to_string(ex.origin_split)}});
        const std::string fewshot_path = default_sibling(output, ".fewshot.json");
        {
            std::ofstream out(fewshot_path, std::ios::binary | std::ios::trunc);
            out << fs_json.dump(2) << '\n';
        }

        auto inputs = data.files();
        if (!prefixes.empty()) inputs.push_back(prefixes);
        if (tmpl.kind == TemplateKind::custom) inputs.push_back(prompt);
        cli::write_provenance(output, stage, inputs, {output, rejects, fewshot_path},
                              {{"generator", generator->name()},
                               {"template", tmpl.name()},
                               {"documents", doc_ids.size()},
                               {"records_written", summary.records},
                               {"rejects_written", summary.rejects},
                               {"skipped_completed", summary.skipped}});
        std::cerr << "generate: " << summary.records << " records, " << summary.rejects << " rejects, "
                  << summary.skipped << " already done\n";
        return 0;
    }
};

// ---------------------------------------------------------------------------

struct FilterCmd {
    Stage stage;
    EndpointArgs scorer;
    std::string input;
    std::string output;
    std::string dropped;
    std::string filter_strategy = "scores";
    std::size_t keep_top_k = 10'000;
    std::size_t min_tokens = 3;
    std::size_t max_tokens = 64;
    bool skip_copied = false;
    bool lexical_fallback = false;
    std::string tokenizer = "whitespace";
    std::size_t scorer_batch_size = 32;
    std::size_t workers = default_thread_count();

    explicit FilterCmd(CLI::App& app) : stage(app, "filter", "keep the top-k synthetic queries") {
        stage.opt("input", input, "generated JSONL")->required();
        stage.opt("output", output, "filtered JSONL")->required();
        stage.opt("dropped", dropped, "JSONL of dropped records (default: <output>.dropped.jsonl)");
        stage.opt("filter_strategy", filter_strategy, "scores or reranker");
        stage.opt("keep_top_k", keep_top_k, "records to keep");
        stage.opt("min_tokens", min_tokens, "minimum query length in tokens");
        stage.opt("max_tokens", max_tokens, "maximum query length in tokens");
        stage.flag("skip_copied", skip_copied, "drop queries copied verbatim from their document");
        scorer.add(stage, "scorer_url", "relevance scoring endpoint for the reranker strategy");
        stage.flag("lexical_fallback", lexical_fallback, "score with single-document BM25 instead of an endpoint");
        stage.opt("tokenizer", tokenizer, "whitespace or bpe:<merges.txt>, used for length filters");
        stage.opt("scorer_batch_size", scorer_batch_size, "pairs per scoring request");
        stage.opt("workers", workers, "parallel scoring requests");
    }

    int run() {
        if (dropped.empty()) dropped = default_sibling(output, ".dropped.jsonl");
        FilterConfig config;
        config.strategy = parse_filter_strategy(filter_strategy);
        config.keep_top_k = keep_top_k;
        config.min_tokens = min_tokens;
        config.max_tokens = max_tokens;
        config.skip_copied = skip_copied;
        config.validate();

        std::unique_ptr<RelevanceScorer> rel;
        if (config.strategy == FilterStrategy::reranker) {
            if (!scorer.url.empty() && lexical_fallback)
                throw ConfigError("--scorer_url and --lexical_fallback are mutually exclusive");
            if (!scorer.url.empty())
                rel = std::make_unique<RemoteScorer>(scorer.config(), scorer_batch_size);
            else if (lexical_fallback)
                rel = std::make_unique<LexicalScorer>();
            else
                throw ConfigError("filter_strategy=reranker needs --scorer_url or --lexical_fallback");
        } else if (lexical_fallback || !scorer.url.empty()) {
            throw ConfigError("--scorer_url and --lexical_fallback only apply to filter_strategy=reranker");
        }

        auto counter = make_counter(tokenizer);
        auto records = read_records(input);
        auto pre = prefilter(records, config, *counter);
        auto result = filter_top_k(pre.kept, config, rel.get(), scorer_batch_size, workers);

        std::vector<ojson> kept, drops;
        for (const auto& r : result.kept) kept.push_back(to_json(r));
        for (const auto& d : pre.dropped) drops.push_back(to_json(d));
        for (const auto& d : result.dropped) drops.push_back(to_json(d));
        write_jsonl(output, kept);
        write_jsonl(dropped, drops);
        for (const auto& w : result.warnings) std::cerr << "filter: warning: " << w << '\n';
        cli::write_provenance(output, stage, {input}, {output, dropped},
                              {{"input_records", records.size()},
                               {"kept", result.kept.size()},
                               {"dropped", drops.size()},
                               {"scorer", rel ? rel->name() : "logprob"}});
        std::cerr << "filter: kept " << result.kept.size() << " of " << records.size() << " records\n";
        return 0;
    }
};

// ---------------------------------------------------------------------------

struct IndexCmd {
    Stage stage;
    DatasetArgs data;
    std::string output;
    double k1 = Bm25Params{}.k1;
    double b = Bm25Params{}.b;
    bool no_stopwords = false;
    bool no_stemming = false;

    explicit IndexCmd(CLI::App& app) : stage(app, "index", "build and save a BM25 index of the corpus") {
        data.add(stage);
        stage.opt("output", output, "index file")->required();
        stage.opt("k1", k1, "BM25 k1");
        stage.opt("b", b, "BM25 b");
        stage.flag("no_stopwords", no_stopwords, "keep stopwords");
        stage.flag("no_stemming", no_stemming, "disable Porter stemming");
    }

    int run() {
        data.resolve();
        const Dataset ds = data.load();
        auto index = Index::build(ds.corpus, analyzer_config(no_stopwords, no_stemming), {k1, b});
        index.save(output);
        cli::write_provenance(output, stage, data.files(), {output},
                              {{"documents", index.doc_count()}, {"terms", index.term_count()}});
        std::cerr << "index: " << index.doc_count() << " documents, " << index.term_count() << " terms\n";
        return 0;
    }
};

/// Loads --index when given (its parameters win), otherwise builds one. An
/// index written by another format version is rebuilt from the corpus.
Index obtain_index(const std::string& path, const Corpus& corpus, bool no_stopwords, bool no_stemming, double k1,
                   double b) {
    if (!path.empty()) {
        std::optional<Index> loaded;
        try {
            loaded = Index::load(path);
        } catch (const IndexVersionError& e) {
            std::cerr << "warning: " << e.what() << "; rebuilding the index from the corpus\n";
            return Index::build(corpus, analyzer_config(no_stopwords, no_stemming), {k1, b});
        }
        auto index = std::move(*loaded);
        if (index.doc_count() != corpus.size())
            throw ConfigError("index " + path + " covers " + std::to_string(index.doc_count()) +
                              " documents but the corpus has " + std::to_string(corpus.size()) + "; rebuild it");
        return index;
    }
    return Index::build(corpus, analyzer_config(no_stopwords, no_stemming), {k1, b});
}

// ---------------------------------------------------------------------------

struct TriplesCmd {
    Stage stage;
    DatasetArgs data;
    std::string input;
    std::string index_path;
    std::string output;
    std::size_t pool_size = 1000;
    std::uint64_t seed = 1;
    double k1 = Bm25Params{}.k1;
    double b = Bm25Params{}.b;
    bool no_stopwords = false;
    bool no_stemming = false;
    std::size_t workers = default_thread_count();

    explicit TriplesCmd(CLI::App& app) : stage(app, "triples", "mine BM25 negatives for filtered queries") {
        data.add(stage);
        stage.opt("input", input, "filtered JSONL")->required();
        stage.opt("index", index_path, "saved index (default: build from the corpus)");
        stage.opt("output", output, "triples TSV")->required();
        stage.opt("pool_size", pool_size, "BM25 candidates per query to draw negatives from");
        stage.opt("seed", seed, "global seed");
        stage.opt("k1", k1, "BM25 k1 when building the index");
        stage.opt("b", b, "BM25 b when building the index");
        stage.flag("no_stopwords", no_stopwords, "keep stopwords when building the index");
        stage.flag("no_stemming", no_stemming, "disable stemming when building the index");
        stage.opt("workers", workers, "threads");
    }

    int run() {
        data.resolve();
        const Dataset ds = data.load();
        const Index index = obtain_index(index_path, ds.corpus, no_stopwords, no_stemming, k1, b);
        auto records = read_records(input);
        auto mined = mine_negatives(std::span<const GeneratedRecord>(records), index, ds.corpus, pool_size, seed, workers);
        write_triples(mined.triples, output);
        const std::string skipped_path = default_sibling(output, ".skipped.jsonl");
        std::vector<ojson> skipped;
        for (const auto& s : mined.skipped)
            skipped.push_back({{"record_index", s.record_index},
                               {"doc_id", s.doc_id},
                               {"query", s.query_text},
                               {"reason", s.reason}});
        write_jsonl(skipped_path, skipped);
        auto inputs = data.files();
        inputs.push_back(input);
        if (!index_path.empty()) inputs.push_back(index_path);
        cli::write_provenance(output, stage, inputs, {output, skipped_path},
                              {{"triples", mined.triples.size()}, {"skipped", mined.skipped.size()}});
        std::cerr << "triples: " << mined.triples.size() << " triples, " << mined.skipped.size() << " skipped\n";
        return 0;
    }
};

// ---------------------------------------------------------------------------

struct RerankCmd {
    Stage stage;
    DatasetArgs data;
    EndpointArgs scorer;
    std::string split = "test";
    std::string initial_run;
    std::string first_stage_output;
    std::string index_path;
    std::string output;
    std::size_t depth = 1000;
    std::string tag = "rerank";
    bool lexical_fallback = false;
    std::size_t scorer_batch_size = 32;
    double k1 = Bm25Params{}.k1;
    double b = Bm25Params{}.b;
    bool no_stopwords = false;
    bool no_stemming = false;
    std::size_t workers = default_thread_count();

    explicit RerankCmd(CLI::App& app) : stage(app, "rerank", "rerank the top candidates of a first-stage run") {
        data.add(stage);
        stage.opt("split", split, "query split to rerank");
        stage.opt("run", initial_run, "first-stage TREC run (default: BM25 over the corpus)");
        stage.opt("first_stage_output", first_stage_output, "where to save the BM25 run when --run is not given");
        stage.opt("index", index_path, "saved index for the BM25 first stage");
        stage.opt("output", output, "reranked TREC run")->required();
        stage.opt("depth", depth, "candidates per query to rescore");
        stage.opt("tag", tag, "run tag");
        scorer.add(stage, "scorer_url", "relevance scoring endpoint");
        stage.flag("lexical_fallback", lexical_fallback, "score with BM25 instead of an endpoint");
        stage.opt("scorer_batch_size", scorer_batch_size, "pairs per scoring request");
        stage.opt("k1", k1, "BM25 k1 when building the index");
        stage.opt("b", b, "BM25 b when building the index");
        stage.flag("no_stopwords", no_stopwords, "keep stopwords when building the index");
        stage.flag("no_stemming", no_stemming, "disable stemming when building the index");
        stage.opt("workers", workers, "threads");
    }

    int run() {
        data.resolve();
        if (!scorer.url.empty() && lexical_fallback)
            throw ConfigError("--scorer_url and --lexical_fallback are mutually exclusive");
        if (scorer.url.empty() && !lexical_fallback)
            throw ConfigError("rerank needs --scorer_url or --lexical_fallback");
        const Dataset ds = data.load();
        const auto& sd = ds.split(parse_split_arg(split));
        if (!sd) throw ConfigError("dataset has no " + split + " judgments");

        std::optional<Index> index;
        Run first;
        if (!initial_run.empty()) {
            first = read_run(initial_run);
        } else {
            index = obtain_index(index_path, ds.corpus, no_stopwords, no_stemming, k1, b);
            first = run_from_hits(index->batch_search(sd->queries, depth, workers), "bm25");
            if (!first_stage_output.empty()) {
                write_run(first, fs::path(first_stage_output));
            }
        }

        std::unique_ptr<RelevanceScorer> rel;
        if (lexical_fallback) {
            if (!index) index = obtain_index(index_path, ds.corpus, no_stopwords, no_stemming, k1, b);
            rel = std::make_unique<LexicalScorer>(&*index, index->analyzer_config(), index->params());
        } else {
            rel = std::make_unique<RemoteScorer>(scorer.config(), scorer_batch_size);
        }
        auto result = rerank_run(first, ds.queries, ds.corpus, *rel, depth, tag, workers);
        write_run(result.run, fs::path(output));
        for (const auto& w : result.warnings) std::cerr << "rerank: warning: " << w << '\n';

        auto inputs = data.files();
        if (!initial_run.empty()) inputs.push_back(initial_run);
        if (!index_path.empty()) inputs.push_back(index_path);
        std::vector<fs::path> outputs{output};
        if (initial_run.empty() && !first_stage_output.empty()) outputs.push_back(first_stage_output);
        cli::write_provenance(output, stage, inputs, outputs,
                              {{"scorer", rel->name()}, {"entries", result.run.entries.size()}});
        std::cerr << "rerank: wrote " << result.run.entries.size() << " entries\n";
        return 0;
    }
};

// ---------------------------------------------------------------------------

struct EvaluateCmd {
    Stage stage;
    DatasetArgs data;
    std::string run_path;
    std::string qrels;
    std::string split = "test";
    std::vector<std::string> metrics{"ndcg@10", "recall@100", "mrr@10"};
    std::string exclude_queries;
    std::string output;

    explicit EvaluateCmd(CLI::App& app) : stage(app, "evaluate", "score a TREC run against relevance judgments") {
        stage.opt("run", run_path, "TREC run file")->required();
        data.add(stage, false);
        stage.opt("qrels", qrels, "qrels TSV (instead of --dataset/--split)");
        stage.opt("split", split, "judgment split when --dataset is given");
        stage.opt("metrics", metrics, "metric@cutoff list, e.g. ndcg@10 recall@100 mrr@10")->delimiter(',');
        stage.opt("exclude_queries", exclude_queries, "few-shot sidecar JSON or a list of query ids to leave out");
        stage.opt("output", output, "JSON report path (a table goes to stdout)");
    }

    int run() {
        data.resolve();
        if (qrels.empty() == data.dir.empty()) throw ConfigError("evaluate needs exactly one of --qrels or --dataset");
        std::vector<std::pair<Metric, std::size_t>> wanted;
        for (const auto& m : metrics) {
            auto at = m.find('@');
            if (at == std::string::npos) throw ConfigError("metric '" + m + "' needs a cutoff, e.g. ndcg@10");
            std::size_t k = 0;
            auto ks = cli::strip_underscores(m.substr(at + 1));
            auto [p, ec] = std::from_chars(ks.data(), ks.data() + ks.size(), k);
            if (ec != std::errc() || p != ks.data() + ks.size() || k == 0)
                throw ConfigError("bad cutoff in metric '" + m + "'");
            wanted.emplace_back(parse_metric(m.substr(0, at)), k);
        }
        const Run run = read_run(run_path);

        std::vector<QrelEntry> judgments;
        std::vector<fs::path> inputs{run_path};
        if (!qrels.empty()) {
            judgments = load_qrels(qrels);
            inputs.push_back(qrels);
        } else {
            auto paths = data.paths();
            auto it = paths.qrels.find(parse_split_arg(split));
            if (it == paths.qrels.end()) throw ConfigError("dataset has no " + split + " judgments");
            judgments = load_qrels(it->second);
            inputs.push_back(it->second);
        }
        std::set<std::string> excluded;
        if (!exclude_queries.empty()) {
            excluded = read_excluded_queries(exclude_queries);
            inputs.push_back(exclude_queries);
        }

        std::vector<Metric> ms;
        std::vector<std::size_t> ks;
        for (auto [m, k] : wanted) {
            if (std::find(ms.begin(), ms.end(), m) == ms.end()) ms.push_back(m);
            if (std::find(ks.begin(), ks.end(), k) == ks.end()) ks.push_back(k);
        }
        auto report = evaluate(run, judgments, ms, ks, excluded);
        std::set<std::string> keys;
        for (auto [m, k] : wanted) keys.insert(metric_key(m, k));
        std::erase_if(report.means, [&](const auto& kv) { return !keys.count(kv.first); });
        for (auto& [qid, values] : report.per_query)
            std::erase_if(values, [&](const auto& kv) { return !keys.count(kv.first); });

        for (const auto& q : report.skipped_query_ids)
            std::cerr << "evaluate: query " << q << " has no judgments; ignored\n";
        std::cout << format_table(report);
        if (!output.empty()) {
            std::ofstream out(output, std::ios::binary | std::ios::trunc);
            if (!out) throw Error("cannot write " + output);
            out << to_json(report).dump(2) << '\n';
            cli::write_provenance(output, stage, inputs, {output});
        }
        return 0;
    }
};

// ---------------------------------------------------------------------------

struct TrainCmd {
    Stage stage;
    std::string triples;

    explicit TrainCmd(CLI::App& app)
        : stage(app, "train", "check a triples file and describe the external trainer contract") {
        stage.opt("triples", triples, "triples TSV")->required();
    }

    int run() {
        auto rows = read_triples(triples);
        std::cout << "triples: " << rows.size() << " valid rows in " << triples << "\n"
                  << "Reranker training happens outside this toolkit. Each line is\n"
                  << "  query<TAB>positive document<TAB>negative document\n"
                  << "with tabs and newlines inside texts replaced by spaces. Train a pointwise\n"
                  << "cross-encoder on (query, positive) -> relevant and (query, negative) ->\n"
                  << "not relevant, then expose it as a scoring endpoint for `rerank --scorer_url`.\n";
        return 0;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic training data for neural rerankers: generate, filter, mine negatives, rerank, evaluate."};
    app.set_version_flag("--version", std::string(cli::kVersion));
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    app.add_option("--config", config_path, "key = value file; flags > environment > config file > defaults");

    GenerateCmd generate_cmd(app);
    FilterCmd filter_cmd(app);
    IndexCmd index_cmd(app);
    TriplesCmd triples_cmd(app);
    RerankCmd rerank_cmd(app);
    EvaluateCmd evaluate_cmd(app);
    TrainCmd train_cmd(app);

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        if (auto cfg = cli::find_flag_value(args, "--config")) {
            CLI::App* sub = nullptr;
            for (const auto& a : args) {
                if (a.empty() || a[0] == '-') continue;
                sub = app.get_subcommand_no_throw(a);
                if (sub) break;
            }
            if (sub) {
                for (const auto& key : cli::apply_config(*sub, cli::read_config_file(*cfg), args))
                    std::cerr << "warning: config key '" << key << "' is not an option of " << sub->get_name()
                              << "; ignored\n";
            }
        }
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "inpars: error[config]: " << e.what() << '\n';
        return 2;
    }

    const std::vector<std::pair<CLI::App*, std::function<int()>>> commands{
        {generate_cmd.stage.app(), [&] { return generate_cmd.run(); }},
        {filter_cmd.stage.app(), [&] { return filter_cmd.run(); }},
        {index_cmd.stage.app(), [&] { return index_cmd.run(); }},
        {triples_cmd.stage.app(), [&] { return triples_cmd.run(); }},
        {rerank_cmd.stage.app(), [&] { return rerank_cmd.run(); }},
        {evaluate_cmd.stage.app(), [&] { return evaluate_cmd.run(); }},
        {train_cmd.stage.app(), [&] { return train_cmd.run(); }},
    };
    for (const auto& [sub, run] : commands) {
        if (!*sub) continue;
        const std::string name = sub->get_name();
        try {
            return run();
        } catch (const ConfigError& e) {
            std::cerr << "inpars " << name << ": error[config]: " << e.what() << '\n';
            return 2;
        } catch (const ParseError& e) {
            std::cerr << "inpars " << name << ": error[parse]: " << e.what() << '\n';
            return 3;
        } catch (const std::exception& e) {
            std::cerr << "inpars " << name << ": error[runtime]: " << e.what() << '\n';
            return 1;
        }
    }
    return 1;
}
