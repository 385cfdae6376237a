#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "wmt/prediction.hpp"

using namespace wmt::cli;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

CliRun run(std::vector<std::string> args) {
    std::ostringstream out, err;
    CliRun r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "wmt_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Small but complete pipeline; returns the run directory.
fs::path pipeline(const std::string& name) {
    const fs::path dir = scratch(name);
    const std::string corpus = (dir / "tier1.jsonl").string();
    const std::string model = (dir / "model").string();
    EXPECT_EQ(run({"--seed", "3", "gen-data", "--tier", "1", "--n", "24", "--out", corpus}).code,
              kExitOk);
    const CliRun train = run(
        {"--seed", "3",        "train", "--train", corpus, "--out",        model, "--d-model",
         "8",      "--layers", "1",     "--heads", "2",    "--d-ff",       "16",  "--mem-size",
         "2",      "--epochs", "2",     "--warm",  "1",    "--batch-size", "8",   "--warmup-steps",
         "2"});
    EXPECT_EQ(train.code, kExitOk) << train.err;
    const CliRun infer = run({"--seed", "3", "infer", "--model", model, "--input", corpus, "--out",
                              (dir / "pred.jsonl").string()});
    EXPECT_EQ(infer.code, kExitOk) << infer.err;
    const CliRun analyze = run({"analyze", "--dump", (fs::path(model) / "dumps").string(), "--out",
                                (dir / "report").string(), "--mem-size", "2"});
    EXPECT_EQ(analyze.code, kExitOk) << analyze.err;
    return dir;
}

}  // namespace

TEST(Cli, HelpExitsZero) {
    const CliRun r = run({"--help"});
    EXPECT_EQ(r.code, kExitOk);
    EXPECT_NE(r.out.find("analyze"), std::string::npos);
    EXPECT_EQ(run({"train", "--help"}).code, kExitOk);
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run({}).code, kExitUsage);
    EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
    EXPECT_EQ(run({"gen-data", "--bogus"}).code, kExitUsage);
    EXPECT_EQ(run({"gen-data", "--tier", "9"}).code, kExitUsage);
    EXPECT_EQ(run({"train", "--out", "x"}).code, kExitUsage);
}

TEST(Cli, MissingInputExitsOne) {
    const fs::path dir = scratch("missing");
    const CliRun r =
        run({"train", "--train", (dir / "nope.jsonl").string(), "--out", (dir / "m").string()});
    EXPECT_EQ(r.code, kExitFailure);
    EXPECT_NE(r.err.find("wmt: error:"), std::string::npos) << r.err;
    EXPECT_EQ(
        run({"analyze", "--dump", (dir / "none").string(), "--out", (dir / "r").string()}).code,
        kExitFailure);
}

TEST(Cli, BadConfigValueExitsOne) {
    const fs::path dir = scratch("badset");
    const CliRun r = run({"gen-data", "--tier", "1", "--n", "5", "--out",
                          (dir / "c.jsonl").string(), "--set", "pp_rate=7"});
    EXPECT_EQ(r.code, kExitFailure);
}

TEST(Cli, GenDataWritesCorpusAndManifest) {
    const fs::path dir = scratch("gen");
    const fs::path corpus = dir / "c.jsonl";
    ASSERT_EQ(
        run({"--seed", "5", "gen-data", "--tier", "2", "--n", "7", "--out", corpus.string()}).code,
        kExitOk);
    const std::string text = read_file(corpus);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 7);
    const auto manifest = nlohmann::json::parse(read_file(dir / "c.jsonl.manifest.json"));
    EXPECT_EQ(manifest.at("command"), "gen-data");
    EXPECT_EQ(manifest.at("seed"), 5);
}

TEST(Cli, PipelineIsDeterministic) {
    const fs::path a = pipeline("run_a");
    const fs::path b = pipeline("run_b");
    for (const char* file :
         {"tier1.jsonl", "model/metrics.csv", "model/checkpoint.wmt", "model/src.vocab",
          "model/tgt.vocab", "model/dumps/epoch_002.jsonl", "pred.jsonl",
          "report/diversity_hist.csv", "report/pos_dist.csv", "report/keyword_prob.csv"}) {
        ASSERT_TRUE(fs::exists(a / file)) << file;
        EXPECT_EQ(read_file(a / file), read_file(b / file)) << file;
    }
    const std::string metrics = read_file(a / "model/metrics.csv");
    EXPECT_EQ(metrics.rfind("epoch,loss,bleu,meteor\n", 0), 0u);
    const auto records = wmt::load_prediction_dump(a / "pred.jsonl");
    EXPECT_EQ(records.size(), 24u);
    EXPECT_TRUE(fs::exists(a / "model" / "manifest.json"));
}

TEST(Cli, ScoreHypothesisAgainstReference) {
    const fs::path dir = scratch("score");
    std::ofstream(dir / "hyp.txt") << "the cat sat\n";
    std::ofstream(dir / "ref.txt") << "the cat sat\n";
    const CliRun r = run({"score", "--hyp", (dir / "hyp.txt").string(), "--ref",
                          (dir / "ref.txt").string(), "--out", (dir / "s.csv").string()});
    EXPECT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("100.00"), std::string::npos) << r.out;
    EXPECT_TRUE(fs::exists(dir / "s.csv"));
}
