#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"

#include "inpars/dataset.hpp"
#include "inpars/endpoint.hpp"
#include "inpars/error.hpp"
#include "inpars/prompting.hpp"
#include "inpars/random.hpp"
#include "inpars/text.hpp"

namespace inpars {

enum class Decoding { greedy, sample };

struct GenerationConfig {
    Decoding decoding = Decoding::greedy;
    double temperature = 0.0;
    std::size_t queries_per_document = 1;
    std::size_t max_new_tokens = 64;
    std::size_t num_documents = 100'000;
    std::uint64_t seed = 1;
    /// Width of the in-flight request pool.
    std::size_t batch_size = 1;
    /// Restore prompt order in the output even when requests finish out of order.
    bool ordered = false;

    void validate() const {
        if (decoding == Decoding::greedy && queries_per_document != 1)
            throw ConfigError("greedy decoding produces exactly one query per document");
        if (decoding == Decoding::sample && !(temperature > 0))
            throw ConfigError("sampling needs a temperature > 0");
        if (queries_per_document == 0) throw ConfigError("queries_per_document must be >= 1");
        if (max_new_tokens == 0) throw ConfigError("max_new_tokens must be >= 1");
        if (num_documents == 0) throw ConfigError("num_documents must be >= 1");
        if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
    }

    /// InPars: one greedy query per document.
    static GenerationConfig inpars() { return {}; }

    /// Promptagator: 8 sampled queries per document at temperature 0.7.
    static GenerationConfig promptagator() {
        GenerationConfig c;
        c.decoding = Decoding::sample;
        c.temperature = 0.7;
        c.queries_per_document = 8;
        return c;
    }
};

struct GeneratedRecord {
    std::string query_text;
    std::vector<double> token_logprobs;
    std::string prompt_text;
    std::string doc_id;
    std::string doc_text;
    std::string dataset;
    std::string template_name;
    std::size_t sample_index = 0;

    friend bool operator==(const GeneratedRecord&, const GeneratedRecord&) = default;
};

struct RejectRecord {
    std::string doc_id;
    std::size_t sample_index = 0;
    std::string reason;

    friend bool operator==(const RejectRecord&, const RejectRecord&) = default;
};

// ---------------------------------------------------------------------------
// JSONL encoding

inline nlohmann::ordered_json to_json(const GeneratedRecord& r) {
    nlohmann::ordered_json j;
    j["query"] = r.query_text;
    j["log_probs"] = r.token_logprobs;
    j["prompt_text"] = r.prompt_text;
    j["doc_id"] = r.doc_id;
    j["doc_text"] = r.doc_text;
    j["dataset"] = r.dataset;
    j["template"] = r.template_name;
    j["sample_index"] = r.sample_index;
    return j;
}

inline GeneratedRecord record_from_json(const nlohmann::json& j) {
    GeneratedRecord r;
    r.query_text = j.at("query").get<std::string>();
    r.token_logprobs = j.at("log_probs").get<std::vector<double>>();
    r.prompt_text = j.value("prompt_text", "");
    r.doc_id = j.at("doc_id").get<std::string>();
    r.doc_text = j.value("doc_text", "");
    r.dataset = j.value("dataset", "");
    r.template_name = j.value("template", "");
    r.sample_index = j.value("sample_index", std::size_t{0});
    return r;
}

inline nlohmann::ordered_json to_json(const RejectRecord& r) {
    nlohmann::ordered_json j;
    j["doc_id"] = r.doc_id;
    j["sample_index"] = r.sample_index;
    j["reason"] = r.reason;
    return j;
}

/// Reads every line of a JSONL file through `fn(json, line_number, raw)`.
template <typename Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        if (text::trim(raw).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(raw);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string(), lineno, raw, std::string("invalid JSON (") + e.what() + ")");
        }
        fn(j, lineno, raw);
    }
}

inline std::vector<GeneratedRecord> read_records(const std::filesystem::path& path) {
    std::vector<GeneratedRecord> out;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t lineno, const std::string& raw) {
        try {
            out.push_back(record_from_json(j));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path.string(), lineno, raw, std::string("bad record (") + e.what() + ")");
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Generators

struct CompletionRequest {
    std::string_view prompt;
    /// Target document text as rendered in the prompt.
    std::string_view target_text;
    std::size_t max_tokens = 64;
    Decoding decoding = Decoding::greedy;
    double temperature = 0.0;
    std::size_t sample_index = 0;
};

struct Completion {
    std::string text;
    std::vector<double> token_logprobs;
};

class Generator {
public:
    virtual ~Generator() = default;
    /// Throws EndpointError on a per-request failure and ConfigError when the
    /// backend cannot satisfy the request contract at all.
    virtual Completion complete(const CompletionRequest& request) = 0;
    virtual std::string name() const = 0;
};

/// Offline stand-in for a language model: the first eight whitespace tokens of
/// the target document in reverse order, token i carrying log-probability
/// -1/(i+1).
class MockGenerator final : public Generator {
public:
    Completion complete(const CompletionRequest& request) override {
        auto words = text::split_whitespace(request.target_text);
        if (words.size() > 8) words.resize(8);
        std::reverse(words.begin(), words.end());
        if (words.size() > request.max_tokens) words.resize(request.max_tokens);
        Completion c;
        for (std::size_t i = 0; i < words.size(); ++i) {
            if (i) c.text += ' ';
            c.text += words[i];
            c.token_logprobs.push_back(-1.0 / static_cast<double>(i + 1));
        }
        return c;
    }

    std::string name() const override { return "mock"; }
};

/// Client for the widely used text-completions protocol:
///   POST <base>/completions {"model", "prompt", "max_tokens", "temperature", "logprobs": 1, "stop": ["\n"]}
///   -> {"choices": [{"text": ..., "logprobs": {"tokens": [...], "token_logprobs": [...]}}]}
class CompletionClient final : public Generator {
public:
    explicit CompletionClient(EndpointConfig config) : endpoint_(std::move(config)) {}

    Completion complete(const CompletionRequest& request) override {
        nlohmann::json body{
            {"model", endpoint_.config().model},
            {"prompt", std::string(request.prompt)},
            {"max_tokens", request.max_tokens},
            {"temperature", request.decoding == Decoding::greedy ? 0.0 : request.temperature},
            {"logprobs", 1},
            {"stop", nlohmann::json::array({"\n"})},
        };
        auto res = endpoint_.post("/completions", body);
        return parse_completion(res);
    }

    /// Extracts text and per-token log-probabilities, cutting at the first newline.
    static Completion parse_completion(const nlohmann::json& res) {
        if (!res.contains("choices") || !res["choices"].is_array() || res["choices"].empty())
            throw EndpointError("completion response has no choices");
        const auto& choice = res["choices"][0];
        if (!choice.contains("text") || !choice["text"].is_string())
            throw EndpointError("completion response has no text");
        const auto lp = choice.find("logprobs");
        if (lp == choice.end() || !lp->is_object() || !lp->contains("token_logprobs") ||
            !(*lp)["token_logprobs"].is_array())
            throw ConfigError("completion endpoint returned no token log-probabilities; "
                              "score filtering would be impossible");
        Completion c;
        std::string text = choice["text"].get<std::string>();
        const auto& logprobs = (*lp)["token_logprobs"];
        std::vector<std::string> tokens;
        if (lp->contains("tokens") && (*lp)["tokens"].is_array())
            for (const auto& t : (*lp)["tokens"]) tokens.push_back(t.is_string() ? t.get<std::string>() : "");

        std::size_t keep = logprobs.size();
        auto nl = text.find('\n');
        if (nl != std::string::npos) {
            text.resize(nl);
            if (tokens.size() == logprobs.size()) {
                // Keep tokens that start before the newline.
                std::size_t pos = 0;
                keep = 0;
                for (const auto& t : tokens) {
                    if (pos >= nl) break;
                    auto tnl = t.find('\n');
                    if (tnl == 0) break;
                    ++keep;
                    pos += t.size();
                    if (tnl != std::string::npos) break;
                }
            }
        }
        for (std::size_t i = 0; i < keep; ++i) {
            if (!logprobs[i].is_number()) throw EndpointError("non-numeric token log-probability");
            c.token_logprobs.push_back(std::min(0.0, logprobs[i].get<double>()));
        }
        c.text = std::move(text);
        return c;
    }

    std::string name() const override { return "completions:" + endpoint_.config().base_url; }

private:
    JsonEndpoint endpoint_;
};

// ---------------------------------------------------------------------------
// Document sampling

/// Uniform sample without replacement of min(n, eligible) document ids, in
/// sampled order. Depends only on the set of ids and the seed.
inline std::vector<std::string> sample_documents(const Dataset& ds, std::size_t n, std::uint64_t seed,
                                                 const std::unordered_set<std::string>& exclude = {}) {
    if (ds.corpus.empty()) throw Error("cannot sample documents from an empty corpus");
    if (n == 0) throw ConfigError("num_documents must be >= 1");
    std::vector<std::string> ids;
    ids.reserve(ds.corpus.size());
    for (const auto& d : ds.corpus.documents())
        if (!exclude.count(d.doc_id)) ids.push_back(d.doc_id);
    std::sort(ids.begin(), ids.end());
    Rng rng(derive_seed(seed, "documents"));
    const std::size_t take = std::min(n, ids.size());
    for (std::size_t i = 0; i < take; ++i) {
        auto j = i + static_cast<std::size_t>(rng.uniform_index(ids.size() - i));
        std::swap(ids[i], ids[j]);
    }
    ids.resize(take);
    return ids;
}

// ---------------------------------------------------------------------------
// Driver

struct GenerationJob {
    RenderedPrompt prompt;
    std::string doc_id;
    std::string doc_text;
};

/// Destination of generated and rejected records; calls are serialized.
class RecordSink {
public:
    virtual ~RecordSink() = default;
    virtual void write(const GeneratedRecord& record) = 0;
    virtual void reject(const RejectRecord& reject) = 0;
};

class MemorySink final : public RecordSink {
public:
    void write(const GeneratedRecord& r) override { records.push_back(r); }
    void reject(const RejectRecord& r) override { rejects.push_back(r); }

    std::vector<GeneratedRecord> records;
    std::vector<RejectRecord> rejects;
};

/// Appends one JSON line per record and flushes after each, so an interrupted
/// run leaves every completed record on disk.
class JsonlSink final : public RecordSink {
public:
    JsonlSink(const std::filesystem::path& records, const std::filesystem::path& rejects, bool append)
        : records_(records, std::ios::binary | (append ? std::ios::app : std::ios::trunc)),
          rejects_(rejects, std::ios::binary | (append ? std::ios::app : std::ios::trunc)) {
        if (!records_) throw Error("cannot write " + records.string());
        if (!rejects_) throw Error("cannot write " + rejects.string());
    }

    void write(const GeneratedRecord& r) override { records_ << to_json(r).dump() << '\n' << std::flush; }
    void reject(const RejectRecord& r) override { rejects_ << to_json(r).dump() << '\n' << std::flush; }

private:
    std::ofstream records_;
    std::ofstream rejects_;
};

using WorkKey = std::pair<std::string, std::size_t>;  // (doc_id, sample_index)

/// Collects the (doc_id, sample_index) keys already present in an output or
/// rejects file, first cutting off a partially written last line.
inline std::set<WorkKey> scan_completed(const std::filesystem::path& path) {
    std::set<WorkKey> done;
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return done;
    {
        std::ifstream in(path, std::ios::binary);
        std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        if (!content.empty() && content.back() != '\n') {
            auto last = content.rfind('\n');
            in.close();
            std::filesystem::resize_file(path, last == std::string::npos ? 0 : last + 1);
        }
    }
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t lineno, const std::string& raw) {
        if (!j.contains("doc_id")) throw ParseError(path.string(), lineno, raw, "missing doc_id");
        done.emplace(j["doc_id"].get<std::string>(), j.value("sample_index", std::size_t{0}));
    });
    return done;
}

struct GenerationContext {
    std::string dataset;
    std::string template_name;
};

struct GenerationSummary {
    std::size_t records = 0;
    std::size_t rejects = 0;
    std::size_t skipped = 0;  // already completed in a previous run
};

/// Runs every (prompt, sample) work unit not in `completed` through the
/// generator. Up to config.batch_size requests are in flight; results reach
/// the sink in completion order, or in work order when config.ordered is set.
/// Failed or empty completions become reject records. A ConfigError from the
/// generator aborts the run.
inline GenerationSummary generate(Generator& generator, const std::vector<GenerationJob>& jobs,
                                  const GenerationConfig& config, const GenerationContext& context, RecordSink& sink,
                                  const std::set<WorkKey>& completed = {}) {
    config.validate();
    struct Unit {
        std::size_t job;
        std::size_t sample;
    };
    std::vector<Unit> units;
    GenerationSummary summary;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        for (std::size_t s = 0; s < config.queries_per_document; ++s) {
            if (completed.count({jobs[j].doc_id, s}))
                ++summary.skipped;
            else
                units.push_back({j, s});
        }
    }

    struct Outcome {
        std::optional<GeneratedRecord> record;
        std::optional<RejectRecord> reject;
    };

    auto run_unit = [&](const Unit& u) -> Outcome {
        const auto& job = jobs[u.job];
        CompletionRequest req{job.prompt.text, job.prompt.target_text, config.max_new_tokens, config.decoding,
                              config.temperature, u.sample};
        Outcome out;
        try {
            auto c = generator.complete(req);
            auto trimmed = std::string(text::trim(c.text.substr(0, c.text.find('\n'))));
            if (trimmed.empty()) {
                out.reject = RejectRecord{job.doc_id, u.sample, "empty_query"};
                return out;
            }
            GeneratedRecord r;
            r.query_text = std::move(trimmed);
            r.token_logprobs = std::move(c.token_logprobs);
            r.prompt_text = job.prompt.text;
            r.doc_id = job.doc_id;
            r.doc_text = job.doc_text;
            r.dataset = context.dataset;
            r.template_name = context.template_name;
            r.sample_index = u.sample;
            out.record = std::move(r);
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            out.reject = RejectRecord{job.doc_id, u.sample, std::string("endpoint_error: ") + e.what()};
        }
        return out;
    };

    std::mutex mu;
    std::map<std::size_t, Outcome> pending;
    std::size_t next_to_emit = 0;
    auto emit = [&](const Outcome& o) {
        if (o.record) {
            sink.write(*o.record);
            ++summary.records;
        } else if (o.reject) {
            sink.reject(*o.reject);
            ++summary.rejects;
        }
    };
    auto deliver = [&](std::size_t index, Outcome o) {
        std::lock_guard lock(mu);
        if (!config.ordered) {
            emit(o);
            return;
        }
        pending.emplace(index, std::move(o));
        for (auto it = pending.begin(); it != pending.end() && it->first == next_to_emit; it = pending.erase(it)) {
            emit(it->second);
            ++next_to_emit;
        }
    };

    const std::size_t width = std::min(config.batch_size, std::max<std::size_t>(units.size(), 1));
    if (width <= 1) {
        for (std::size_t i = 0; i < units.size(); ++i) deliver(i, run_unit(units[i]));
        return summary;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr error;
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < width; ++t) {
            pool.emplace_back([&] {
                while (!abort) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= units.size()) return;
                    try {
                        deliver(i, run_unit(units[i]));
                    } catch (...) {
                        std::lock_guard lock(mu);
                        if (!error) error = std::current_exception();
                        abort = true;
                    }
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
    return summary;
}

}  // namespace inpars
