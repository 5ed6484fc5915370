#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qdrag/decompose.h"
#include "qdrag/pipeline.h"

namespace qdrag {

// One line of traces.jsonl. Carries the gold annotations next to the outputs so
// that `qdrag report` can recompute every metric without the dataset.
struct TraceRecord {
  std::string query_id;
  std::string variant;
  std::string question;
  std::vector<std::string> sub_queries;
  std::string provenance = "none";
  std::vector<ScoredCandidate> pool;
  std::vector<std::string> final_ids;
  std::vector<double> final_scores;  // the variant's selection score
  std::size_t pool_size = 0;
  StageTimings timing;
  std::optional<std::string> answer_text;

  std::string question_type;
  std::vector<std::string> gold_chunk_ids;
  std::size_t gold_evidence_count = 0;
  bool unresolvable = false;
  std::optional<std::string> gold_answer;
  // Supporting facts as (title, sentence index); only filled for sentence chunks.
  std::vector<std::pair<std::string, int>> gold_sp;
  std::vector<std::pair<std::string, int>> predicted_sp;
  std::vector<std::string> warnings;

  bool operator==(const TraceRecord&) const = default;
};

nlohmann::json to_json(const TraceRecord& t);
TraceRecord trace_from_json(const nlohmann::json& j);

void write_traces(const std::filesystem::path& path, const std::vector<TraceRecord>& traces);
std::vector<TraceRecord> read_traces(const std::filesystem::path& path);

}  // namespace qdrag
