#include <cstdlib>
#include <fstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "qdrag/corpus.h"
#include "qdrag/trace.h"
#include "test_support.h"

using nlohmann::json;
using qdrag::read_file;
using qdrag::read_json_file;
using qdrag::testing::scratch_dir;
using qdrag::testing::testdata;

namespace {

int qdrag_cli(const std::string& args) {
  const std::string cmd = std::string(QDRAG_CLI) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(Cli, RunWritesEveryOutput) {
  const auto dir = scratch_dir();
  ASSERT_EQ(qdrag_cli("run --mock --dataset synthetic --variant all --limit 15 --k 4 --out " +
                      dir.string()),
            0);
  for (const char* f : {"report.json", "report.txt", "traces.jsonl", "metrics.jsonl", "failures.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  EXPECT_EQ(qdrag::read_traces(dir / "traces.jsonl").size(), 60u);
  const json report = read_json_file(dir / "report.json");
  EXPECT_EQ(report["config"]["k"], 4);
  EXPECT_EQ(report["clock"], "virtual");
  EXPECT_EQ(read_json_file(dir / "failures.json")["count"], 0);
  const std::string text = read_file(dir / "report.txt");
  for (const char* section : {"Retrieval", "Gold evidences vs. sub-queries", "Retrieval time",
                              "Correlation"}) {
    EXPECT_NE(text.find(section), std::string::npos) << section;
  }
}

TEST(Cli, ReportRecomputesFromTraces) {
  const auto dir = scratch_dir();
  ASSERT_EQ(qdrag_cli("run --mock --dataset synthetic --variant naive,qd_rr --limit 20 --out " +
                      (dir / "run").string()),
            0);
  ASSERT_EQ(qdrag_cli("report " + (dir / "run" / "traces.jsonl").string() + " --out " +
                      (dir / "again").string()),
            0);
  const json a = read_json_file(dir / "run" / "report.json");
  const json b = read_json_file(dir / "again" / "report.json");
  EXPECT_EQ(a["metrics"], b["metrics"]);
  EXPECT_EQ(a["timing"], b["timing"]);
  EXPECT_EQ(read_file(dir / "run" / "metrics.jsonl"), read_file(dir / "again" / "metrics.jsonl"));
}

TEST(Cli, SynthThenIndexThenRunOnFiles) {
  const auto dir = scratch_dir();
  const std::string files = " --corpus " + (dir / "suite" / "corpus.json").string() +
                            " --queries " + (dir / "suite" / "queries.json").string();
  ASSERT_EQ(qdrag_cli("synth --entities 10 --synthetic-queries 12 --out " + (dir / "suite").string()), 0);
  ASSERT_EQ(qdrag_cli("index --mock --dataset multihop_rag" + files + " --out " +
                      (dir / "index").string()),
            0);
  EXPECT_TRUE(std::filesystem::exists(dir / "index" / "index.bin"));
  EXPECT_TRUE(std::filesystem::exists(dir / "index" / "chunks.jsonl"));
  ASSERT_EQ(qdrag_cli("run --mock --dataset multihop_rag --variant qd" + files + " --index-dir " +
                      (dir / "index").string() + " --out " + (dir / "run").string()),
            0);
  EXPECT_EQ(qdrag::read_traces(dir / "run" / "traces.jsonl").size(), 12u);
}

TEST(Cli, ConfigFileAndFlagsCompose) {
  const auto dir = scratch_dir();
  std::ofstream(dir / "cfg.json") << R"({"dataset": "multihop_rag", "k": 3, "variants": ["naive"]})";
  ASSERT_EQ(qdrag_cli("run --mock --config " + (dir / "cfg.json").string() + " --corpus " +
                      testdata("multihop_corpus.json").string() + " --queries " +
                      testdata("multihop_queries.json").string() + " --k 2 --out " +
                      (dir / "out").string()),
            0);
  const json report = read_json_file(dir / "out" / "report.json");
  EXPECT_EQ(report["config"]["k"], 2);  // flag beats file
  EXPECT_EQ(report["config"]["dataset"], "multihop_rag");
  EXPECT_TRUE(report["metrics"].contains("naive"));
  EXPECT_FALSE(report["metrics"].contains("qd_rr"));
}

TEST(Cli, SetupErrorsExitTwoWithFailureFile) {
  const auto dir = scratch_dir();
  EXPECT_EQ(qdrag_cli("run --mock --dataset multihop_rag --corpus " + (dir / "nope.json").string() +
                      " --queries " + testdata("multihop_queries.json").string() + " --out " +
                      dir.string()),
            2);
  const json f = read_json_file(dir / "failures.json");
  EXPECT_EQ(f["failures"][0]["stage"], "setup");
  EXPECT_EQ(qdrag_cli("run --mock --variant hyde --out " + (dir / "v").string()), 2);
  EXPECT_NE(qdrag_cli("frobnicate"), 0);
}
