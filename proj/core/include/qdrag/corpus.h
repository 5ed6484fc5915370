#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace qdrag {

struct SourceDocument {
  std::string doc_id;
  std::string title;
  std::string body;
  std::map<std::string, std::string> source_meta;
  // Pre-segmented sentences (HotpotQA paragraphs). Empty when the body is free text.
  std::vector<std::string> sentences;
};

struct Chunk {
  std::string chunk_id;
  std::string doc_id;
  std::size_t ordinal = 0;
  std::string text;
  std::string title;

  bool operator==(const Chunk&) const = default;
};

// One gold-evidence annotation. MultiHop-RAG evidence carries a fact string from the
// titled source; HotpotQA evidence is a (title, sentence index) pair.
struct EvidenceSpec {
  std::string title;
  std::string fact;
  std::optional<int> sentence_index;

  bool operator==(const EvidenceSpec&) const = default;
};

struct QAExample {
  std::string query_id;
  std::string question;
  std::optional<std::string> gold_answer;
  std::vector<EvidenceSpec> gold_evidence;
  std::vector<SourceDocument> local_context;
  std::string question_type;
  // Canned decomposition used by the mock decomposer (synthetic suites only).
  std::vector<std::string> scripted_subqueries;
};

class ChunkPolicy {
 public:
  enum class Kind { kFixedWindow, kSentence };

  // Windows of `window` whitespace tokens advancing by window - overlap.
  static ChunkPolicy fixed_window(std::size_t window, std::size_t overlap = 0);
  static ChunkPolicy sentence_per_chunk();

  Kind kind() const { return kind_; }
  std::size_t window() const { return window_; }
  std::size_t overlap() const { return overlap_; }
  std::string describe() const;

 private:
  ChunkPolicy(Kind kind, std::size_t window, std::size_t overlap)
      : kind_(kind), window_(window), overlap_(overlap) {}

  Kind kind_;
  std::size_t window_;
  std::size_t overlap_;
};

struct HotpotSplit {
  std::vector<QAExample> examples;
  std::vector<std::string> warnings;
};

struct GoldResolution {
  std::vector<std::string> chunk_ids;  // sorted, unique
  bool unresolvable = false;
  std::vector<std::string> warnings;
};

std::vector<SourceDocument> parse_multihop_corpus(const nlohmann::json& records);
std::vector<SourceDocument> load_multihop_corpus(const std::filesystem::path& path);

// MultiHop-RAG query file: records with query, answer, question_type, evidence_list.
std::vector<QAExample> parse_multihop_queries(const nlohmann::json& records);
std::vector<QAExample> load_multihop_queries(const std::filesystem::path& path);

HotpotSplit parse_hotpotqa_split(const nlohmann::json& records);
HotpotSplit load_hotpotqa_split(const std::filesystem::path& path);

// Rule-based splitter: a sentence ends at . ! or ? (plus closing quotes or brackets)
// followed by whitespace or end of text.
std::vector<std::string> split_sentences(std::string_view body);

std::vector<Chunk> chunk_document(const SourceDocument& doc, const ChunkPolicy& policy);
std::vector<Chunk> chunk_corpus(std::span<const SourceDocument> docs, const ChunkPolicy& policy);

// Text handed to the encoders for a chunk: its title, a newline, then the chunk text.
std::string encoder_text(const Chunk& chunk);

GoldResolution resolve_gold_chunks(const QAExample& example, std::span<const Chunk> chunks);

void write_chunk_manifest(const std::filesystem::path& path, std::span<const Chunk> chunks);
std::vector<Chunk> read_chunk_manifest(const std::filesystem::path& path);

// Reads a whole file; throws DataError when it cannot be opened.
std::string read_file(const std::filesystem::path& path);
nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace qdrag
