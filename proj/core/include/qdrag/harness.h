#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qdrag/config.h"
#include "qdrag/report.h"

namespace qdrag {

struct FailureRecord {
  std::string query_id;
  std::string variant;
  std::string stage;
  std::string message;
};

struct RunResult {
  EvalReport report;
  std::vector<TraceRecord> traces;
  std::vector<FailureRecord> failures;
  std::size_t decomposer_calls = 0;

  int exit_code() const { return failures.empty() ? 0 : 1; }
};

// Loads the dataset, builds or loads the index, runs every configured variant
// over every example and writes report.json, report.txt, traces.jsonl,
// metrics.jsonl and failures.json into config.out_dir. Per-query failures are
// collected, not thrown; setup errors throw.
RunResult run_experiment(const RunConfig& config);

// Chunks and embeds the global corpus and writes chunks.jsonl + index.bin into
// `dir`. Returns the number of chunks indexed.
std::size_t build_and_save_index(const RunConfig& config, const std::filesystem::path& dir);

// Recomputes the report from a traces.jsonl file and writes report.json,
// report.txt and metrics.jsonl into `out_dir`.
EvalReport report_from_traces(const std::filesystem::path& traces_path,
                              const std::filesystem::path& out_dir);

// Writes the synthetic suite as MultiHop-RAG style corpus.json and queries.json.
void write_synthetic_suite(const RunConfig& config, const std::filesystem::path& dir);

}  // namespace qdrag
