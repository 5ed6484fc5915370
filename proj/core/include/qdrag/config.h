#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "qdrag/corpus.h"
#include "qdrag/pipeline.h"
#include "qdrag/providers.h"

namespace qdrag {

// `synthetic` is the generated comparison suite (see synthetic.h).
enum class Dataset { kMultihopRag, kHotpotQa, kSynthetic };

std::string_view to_string(Dataset d);
Dataset parse_dataset(std::string_view name);

// One provider role: either the offline mock or a live endpoint, never both.
struct ProviderConfig {
  bool mock = true;
  ProviderEndpoint endpoint;
  MockLatency latency;
};

enum class ClockKind { kAuto, kVirtual, kSteady };

struct RunConfig {
  Dataset dataset = Dataset::kSynthetic;
  std::vector<SystemVariant> variants = {SystemVariant::kQdRr};
  std::size_t k = 10;
  // Unset: sentence chunks for HotpotQA, 256-token windows otherwise.
  std::optional<ChunkPolicy> chunk_policy;

  std::filesystem::path corpus_path;   // MultiHop-RAG corpus.json
  std::filesystem::path queries_path;  // MultiHop-RAG queries or the HotpotQA split
  std::filesystem::path index_dir;     // persisted index from `qdrag index`, optional

  // Mock latencies are simulated seconds charged to the virtual clock.
  ProviderConfig embed{true, {}, {0.02, 0.0005}};
  ProviderConfig rerank{true, {}, {0.05, 0.04}};
  ProviderConfig chat{true, {}, {16.0, 0.0}};
  std::size_t mock_dim = 1024;

  std::filesystem::path cache_path;  // empty: no sub-query cache
  std::filesystem::path decompose_prompt_path;
  std::filesystem::path answer_prompt_path;
  std::size_t max_subqueries = 5;
  SamplingParams sampling;

  std::uint64_t seed = 7;
  std::filesystem::path out_dir = "qdrag-out";
  std::size_t workers = 1;
  std::optional<std::size_t> limit;  // first N examples in file order
  bool trace = false;                // archive provider requests/responses
  bool global_index = false;         // HotpotQA: one pool over all paragraphs
  std::optional<bool> generate;      // unset: on for HotpotQA only
  ClockKind clock = ClockKind::kAuto;

  std::size_t synthetic_entities = 50;
  std::size_t synthetic_queries = 200;
  std::size_t index_batch_size = 64;

  bool all_mock() const { return embed.mock && rerank.mock && chat.mock; }
  bool uses_virtual_clock() const;
  bool generation_enabled() const;
  ChunkPolicy effective_chunk_policy() const;
  // HotpotQA without --global-index retrieves from each question's own paragraphs.
  bool per_question_index() const;

  // Throws ConfigError on the first violated invariant.
  void validate() const;
};

// Reads the keys present in `j` over `base`; unknown keys are an error.
RunConfig apply_config_json(RunConfig base, const nlohmann::json& j);
RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {});
// Serialized echo. Auth tokens never appear, only the env var names.
nlohmann::json to_json(const RunConfig& config);

// Comma-separated variant names, or "all".
std::vector<SystemVariant> parse_variant_list(std::string_view spec);

}  // namespace qdrag
