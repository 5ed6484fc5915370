#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "qdrag/providers.h"

namespace qdrag {

enum class Provenance { kNone, kLlm, kCache };

std::string_view to_string(Provenance p);

// The original question plus its generated sub-queries. The original never
// appears among the sub-queries and sub-queries are distinct after normalization.
struct QueryBundle {
  std::string query_id;
  std::string original;
  std::vector<std::string> sub_queries;
  Provenance provenance = Provenance::kNone;

  bool operator==(const QueryBundle&) const = default;
};

// Instruction template with exactly one {question} slot and an optional
// {max_subqueries} slot.
class DecomposePrompt {
 public:
  static constexpr std::size_t kDefaultMaxSubqueries = 5;

  explicit DecomposePrompt(std::string tmpl = default_template(),
                           std::size_t max_subqueries = kDefaultMaxSubqueries);
  static DecomposePrompt from_file(const std::filesystem::path& path,
                                   std::size_t max_subqueries = kDefaultMaxSubqueries);
  static std::string default_template();

  std::string render(std::string_view question) const;
  std::size_t max_subqueries() const { return max_subqueries_; }
  const std::string& text() const { return template_; }

 private:
  std::string template_;
  std::size_t max_subqueries_;
};

// Lowercase, whitespace collapsed, trailing punctuation stripped.
std::string normalize_subquery(std::string_view s);

// Drops empty entries, duplicates under normalize_subquery and restatements of
// the original, then truncates to `max_subqueries`.
std::vector<std::string> sanitize_subqueries(const std::vector<std::string>& candidates,
                                             std::string_view original,
                                             std::size_t max_subqueries);

// Accepts numbered, bulleted or bare lines; strips enumeration markers, drops
// header lines ending in ':', duplicates and restatements of the original, and
// keeps at most `max_subqueries`. Total: never throws on any completion text.
std::vector<std::string> parse_subqueries(std::string_view completion, std::string_view original,
                                          std::size_t max_subqueries);

// [original, sub_queries...]
std::vector<std::string> query_set(const QueryBundle& bundle);

// Append-only JSON-lines store keyed on the raw query string; the last record
// for a key wins. Readers run concurrently, appends are serialized.
class SubqueryCache {
 public:
  explicit SubqueryCache(std::filesystem::path path);

  std::optional<QueryBundle> get(const std::string& query) const;
  void put(const std::string& query, const QueryBundle& bundle, std::string_view model);

  std::size_t size() const;
  // Corrupt records skipped while loading.
  const std::vector<std::string>& load_warnings() const { return load_warnings_; }

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mu_;
  std::map<std::string, std::vector<std::string>> entries_;
  std::ofstream out_;
  std::vector<std::string> load_warnings_;
};

QueryBundle decompose(const std::string& question, const DecomposePrompt& prompt,
                      ChatProvider& provider, const SamplingParams& params,
                      std::vector<std::string>* warnings = nullptr);

// decompose() behind an optional cache. On a hit the provider is not called.
class Decomposer {
 public:
  Decomposer(ChatProvider& provider, DecomposePrompt prompt, SamplingParams params,
             SubqueryCache* cache = nullptr);

  QueryBundle run(const std::string& query_id, const std::string& question,
                  std::vector<std::string>* warnings = nullptr);

  const DecomposePrompt& prompt() const { return prompt_; }

 private:
  ChatProvider& provider_;
  DecomposePrompt prompt_;
  SamplingParams params_;
  SubqueryCache* cache_;
};

}  // namespace qdrag
