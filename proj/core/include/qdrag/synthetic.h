#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qdrag/corpus.h"

namespace qdrag {

struct SyntheticSuite {
  std::vector<SourceDocument> documents;
  std::vector<QAExample> examples;
  // Same content in the MultiHop-RAG file formats (corpus records, query records).
  nlohmann::json corpus_json;
  nlohmann::json queries_json;
};

// Comparison questions over invented entities. Each entity gets one short fact
// sheet; each question gets a "comparison notes" document that repeats the
// question wording with filler, which attracts single-query dense retrieval
// without holding any gold fact. Gold evidence is the referenced entities' fact
// sentences, and every question carries a scripted one-sub-query-per-entity
// decomposition.
SyntheticSuite make_synthetic_multihop(std::size_t n_entities, std::size_t n_queries,
                                       std::uint64_t seed);

}  // namespace qdrag
