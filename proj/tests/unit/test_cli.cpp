#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <string>

#include "json.hpp"
#include "test_util.hpp"

namespace {

using testutil::TempDir;

struct Result {
    int code;
    std::string out;
};

/// Runs the CLI with stdout and stderr captured.
Result run_cli(const TempDir& dir, const std::string& args, const std::string& env = "") {
    auto log = dir / "cli.log";
    std::string cmd = "cd '" + dir.path().string() + "' && " + env + " '" + INPARS_CLI_PATH + "' " + args + " > '" +
                      log.string() + "' 2>&1";
    int status = std::system(cmd.c_str());
    int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return {code, testutil::read_file(log)};
}

std::string toy() { return testutil::toy_dataset_dir().string(); }

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST(Cli, EvaluateMissingRunFails) {
    TempDir dir;
    auto r = run_cli(dir, "evaluate --run missing.txt --dataset " + toy());
    EXPECT_NE(r.code, 0);
    EXPECT_NE(r.out.find("missing.txt"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("not found"), std::string::npos) << r.out;
}

TEST(Cli, UnknownFlagAndMissingRequiredFlagFail) {
    TempDir dir;
    EXPECT_NE(run_cli(dir, "generate --dataset " + toy() + " --output q.jsonl --mock --bogus 1").code, 0);
    EXPECT_NE(run_cli(dir, "generate --dataset " + toy() + " --mock").code, 0);
    EXPECT_NE(run_cli(dir, "frobnicate").code, 0);
    EXPECT_NE(run_cli(dir, "").code, 0);
}

TEST(Cli, GenerateIsDeterministicAndWritesSidecars) {
    TempDir dir;
    const std::string args = "generate --prompt inpars --dataset " + toy() + " --output q.jsonl --mock";
    ASSERT_EQ(run_cli(dir, args).code, 0);
    auto first = testutil::read_file(dir / "q.jsonl");
    EXPECT_EQ(count_lines(first), 40u);
    ASSERT_EQ(run_cli(dir, args).code, 0);
    EXPECT_EQ(testutil::read_file(dir / "q.jsonl"), first);
    auto prov = nlohmann::json::parse(testutil::read_file(dir / "q.jsonl.provenance.json"));
    EXPECT_EQ(prov["stage"], "generate");
    EXPECT_EQ(prov["config"]["prompt"], "inpars");
    EXPECT_EQ(prov["config"]["max_prompt_tokens"], 1984);
    EXPECT_EQ(prov["inputs"][0]["sha256"].get<std::string>().size(), 64u);
    EXPECT_TRUE(std::filesystem::exists(dir / "q.jsonl.fewshot.json"));
}

TEST(Cli, PromptagatorDefaultsAndExcludedQueries) {
    TempDir dir;
    auto r = run_cli(dir, "generate --prompt promptagator --dataset " + toy() +
                              " --output p.jsonl --mock --num_documents 5 --n_fewshot 2");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(count_lines(testutil::read_file(dir / "p.jsonl")), 5u * 8u);
    auto prov = nlohmann::json::parse(testutil::read_file(dir / "p.jsonl.provenance.json"));
    EXPECT_EQ(prov["config"]["decoding"], "sample");
    EXPECT_EQ(prov["config"]["temperature"], 0.7);
    auto explicit_qpd = run_cli(dir, "generate --prompt promptagator --dataset " + toy() +
                                         " --output p2.jsonl --mock --num_documents 5 --queries_per_document 2");
    ASSERT_EQ(explicit_qpd.code, 0) << explicit_qpd.out;
    EXPECT_EQ(count_lines(testutil::read_file(dir / "p2.jsonl")), 10u);
}

TEST(Cli, FilterAcceptsUnderscoredNumbers) {
    TempDir dir;
    ASSERT_EQ(run_cli(dir, "generate --dataset " + toy() + " --output q.jsonl --mock").code, 0);
    auto r = run_cli(dir, "filter --input q.jsonl --output f.jsonl --filter_strategy scores --keep_top_k 10_000");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_LE(count_lines(testutil::read_file(dir / "f.jsonl")), 10'000u);
    r = run_cli(dir, "filter --input q.jsonl --output f5.jsonl --keep_top_k=5");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(count_lines(testutil::read_file(dir / "f5.jsonl")), 5u);
}

TEST(Cli, RerankerStrategyNeedsAScorer) {
    TempDir dir;
    ASSERT_EQ(run_cli(dir, "generate --dataset " + toy() + " --output q.jsonl --mock").code, 0);
    auto r = run_cli(dir, "filter --input q.jsonl --output f.jsonl --filter_strategy reranker");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("lexical_fallback"), std::string::npos);
    r = run_cli(dir, "filter --input q.jsonl --output f.jsonl --filter_strategy reranker --lexical_fallback --keep_top_k 7");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(count_lines(testutil::read_file(dir / "f.jsonl")), 7u);
}

TEST(Cli, PrecedenceFlagsThenEnvThenConfigThenDefaults) {
    TempDir dir;
    ASSERT_EQ(run_cli(dir, "generate --dataset " + toy() + " --output q.jsonl --mock").code, 0);
    testutil::write_file(dir / "cfg.txt", "# test\nkeep_top_k = 4\nmin_tokens=1\nnot_an_option = 3\n");
    auto r = run_cli(dir, "filter --config cfg.txt --input q.jsonl --output a.jsonl");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(count_lines(testutil::read_file(dir / "a.jsonl")), 4u);
    EXPECT_NE(r.out.find("not_an_option"), std::string::npos);
    r = run_cli(dir, "filter --config cfg.txt --input q.jsonl --output b.jsonl --keep_top_k 6");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(count_lines(testutil::read_file(dir / "b.jsonl")), 6u);
    // --config ahead of the subcommand, dashed keys and digit separators.
    testutil::write_file(dir / "dashed.conf", "keep-top-k = 0_5\nmin-tokens = 1\n");
    r = run_cli(dir, "--config dashed.conf filter --input q.jsonl --output c.jsonl");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(count_lines(testutil::read_file(dir / "c.jsonl")), 5u);

    // Endpoint URL: the environment beats the config file, a flag beats both.
    testutil::write_file(dir / "ep.txt", "endpoint_url = http://127.0.0.1:9/from-config\nmax_retries = 0\n");
    const std::string gen = "generate --dataset " + toy() + " --output e.jsonl --num_documents 1 --timeout_ms 200";
    run_cli(dir, gen + " --config ep.txt", "INPARS_ENDPOINT_URL=http://127.0.0.1:9/from-env");
    auto prov = nlohmann::json::parse(testutil::read_file(dir / "e.jsonl.provenance.json"));
    EXPECT_EQ(prov["config"]["endpoint_url"], "http://127.0.0.1:9/from-env");
    EXPECT_EQ(prov["config"]["max_retries"], 0);
    run_cli(dir, gen + " --config ep.txt --endpoint_url http://127.0.0.1:9/from-flag",
            "INPARS_ENDPOINT_URL=http://127.0.0.1:9/from-env");
    prov = nlohmann::json::parse(testutil::read_file(dir / "e.jsonl.provenance.json"));
    EXPECT_EQ(prov["config"]["endpoint_url"], "http://127.0.0.1:9/from-flag");
    run_cli(dir, gen + " --config ep.txt", "INPARS_API_KEY=topsecret");
    prov = nlohmann::json::parse(testutil::read_file(dir / "e.jsonl.provenance.json"));
    EXPECT_EQ(prov["config"]["endpoint_url"], "http://127.0.0.1:9/from-config");
    EXPECT_EQ(prov["config"]["api_key"], "<redacted>");
    EXPECT_EQ(testutil::read_file(dir / "e.jsonl.provenance.json").find("topsecret"), std::string::npos);
    // Unreachable endpoint: every unit lands in the rejects file.
    EXPECT_EQ(count_lines(testutil::read_file(dir / "e.jsonl.rejects.jsonl")), 1u);
}

TEST(Cli, FullPipelineOnToyDataset) {
    TempDir dir;
    const std::string ds = toy();
    ASSERT_EQ(run_cli(dir, "index --dataset " + ds + " --output toy.idx").code, 0);
    ASSERT_EQ(run_cli(dir, "generate --dataset " + ds + " --output q.jsonl --mock").code, 0);
    ASSERT_EQ(run_cli(dir, "filter --input q.jsonl --output f.jsonl --keep_top_k 20").code, 0);
    auto r = run_cli(dir, "triples --dataset " + ds + " --input f.jsonl --index toy.idx --output t.tsv");
    ASSERT_EQ(r.code, 0) << r.out;
    ASSERT_EQ(run_cli(dir, "train --triples t.tsv").code, 0);
    r = run_cli(dir, "rerank --dataset " + ds + " --index toy.idx --lexical_fallback --output rr.run "
                "--first_stage_output bm25.run --depth 100");
    ASSERT_EQ(r.code, 0) << r.out;
    r = run_cli(dir, "evaluate --run bm25.run --dataset " + ds + " --output eval.json --metrics ndcg@10,recall@100,mrr@10");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("ndcg@10"), std::string::npos);
    auto report = nlohmann::json::parse(testutil::read_file(dir / "eval.json"));
    EXPECT_EQ(report["evaluated_query_count"], 6);
    EXPECT_GT(report["means"]["ndcg@10"].get<double>(), 0.5);
    for (const char* f : {"toy.idx", "q.jsonl", "f.jsonl", "t.tsv", "rr.run", "eval.json"})
        EXPECT_TRUE(std::filesystem::exists(dir.path() / (std::string(f) + ".provenance.json"))) << f;
    r = run_cli(dir, "rerank --dataset " + ds + " --output x.run");
    EXPECT_NE(r.code, 0);
}

TEST(Cli, StaleIndexVersionIsRebuilt) {
    TempDir dir;
    const std::string ds = toy();
    ASSERT_EQ(run_cli(dir, "index --dataset " + ds + " --output toy.idx").code, 0);
    ASSERT_EQ(run_cli(dir, "generate --dataset " + ds + " --output q.jsonl --mock").code, 0);
    ASSERT_EQ(run_cli(dir, "triples --dataset " + ds + " --input q.jsonl --index toy.idx --output good.tsv").code, 0);
    {
        std::fstream f(dir / "toy.idx", std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(8);
        const char version[4] = {static_cast<char>(0x7f), 0, 0, 0};
        f.write(version, 4);
    }
    auto r = run_cli(dir, "triples --dataset " + ds + " --input q.jsonl --index toy.idx --output t.tsv");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("rebuilding"), std::string::npos) << r.out;
    EXPECT_EQ(testutil::read_file(dir / "t.tsv"), testutil::read_file(dir / "good.tsv"));
}
