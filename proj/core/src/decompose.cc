#include "qdrag/decompose.h"

#include <cctype>
#include <chrono>
#include <ctime>
#include <mutex>
#include <regex>
#include <set>

#include <nlohmann/json.hpp>

#include "qdrag/corpus.h"
#include "qdrag/error.h"
#include "qdrag/text.h"

namespace qdrag {

using nlohmann::json;

namespace {

constexpr std::string_view kQuestionSlot = "{question}";
constexpr std::string_view kBudgetSlot = "{max_subqueries}";

const std::regex& marker_regex() {
  static const std::regex re(
      R"(^(\(?\d+\s*[.):]\)?|[-*+]|•|[Qq]\d+\s*[.):]|sub-?(question|query)\s*\d*\s*[.):])\s*)",
      std::regex::ECMAScript | std::regex::icase);
  return re;
}

std::string strip_line(std::string_view raw) {
  std::string line(text::trim(raw));
  line = std::regex_replace(line, marker_regex(), "", std::regex_constants::format_first_only);
  line = std::string(text::trim(line));
  // Markdown emphasis and wrapping quotes.
  while (line.size() >= 4 && line.starts_with("**") && line.ends_with("**")) {
    line = std::string(text::trim(line.substr(2, line.size() - 4)));
  }
  if (line.size() >= 2 && ((line.front() == '"' && line.back() == '"') ||
                           (line.front() == '\'' && line.back() == '\''))) {
    line = std::string(text::trim(line.substr(1, line.size() - 2)));
  }
  return line;
}

std::string iso8601_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kLlm:
      return "llm";
    case Provenance::kCache:
      return "cache";
    case Provenance::kNone:
      break;
  }
  return "none";
}

DecomposePrompt::DecomposePrompt(std::string tmpl, std::size_t max_subqueries)
    : template_(std::move(tmpl)), max_subqueries_(max_subqueries) {
  const std::size_t slots = text::count_occurrences(template_, kQuestionSlot);
  if (slots != 1) {
    throw ConfigError("decomposition prompt must contain exactly one {question} slot, found " +
                      std::to_string(slots));
  }
  if (max_subqueries_ == 0) throw ConfigError("max_subqueries must be positive");
}

DecomposePrompt DecomposePrompt::from_file(const std::filesystem::path& path,
                                           std::size_t max_subqueries) {
  return DecomposePrompt(read_file(path), max_subqueries);
}

std::string DecomposePrompt::default_template() {
  return "You are helping a search engine answer a complex question.\n"
         "Decompose the question below into at most {max_subqueries} self-contained, "
         "fact-seeking sub-questions.\n"
         "Each sub-question must be answerable on its own from a single document.\n"
         "Return a numbered list with one sub-question per line and nothing else.\n"
         "\n"
         "Question: {question}\n";
}

std::string DecomposePrompt::render(std::string_view question) const {
  std::string out = text::replace_all(template_, kBudgetSlot, std::to_string(max_subqueries_));
  return text::replace_all(std::move(out), kQuestionSlot, question);
}

std::string normalize_subquery(std::string_view s) {
  std::string out = text::collapse_whitespace_lower(s);
  while (!out.empty() && (std::ispunct(static_cast<unsigned char>(out.back())) != 0 ||
                          out.back() == ' ')) {
    out.pop_back();
  }
  return out;
}

std::vector<std::string> sanitize_subqueries(const std::vector<std::string>& candidates,
                                             std::string_view original,
                                             std::size_t max_subqueries) {
  std::vector<std::string> out;
  std::set<std::string> seen = {normalize_subquery(original)};
  for (const std::string& c : candidates) {
    if (out.size() >= max_subqueries) break;
    std::string key = normalize_subquery(c);
    if (key.empty() || !seen.insert(key).second) continue;
    out.emplace_back(text::trim(c));
  }
  return out;
}

std::vector<std::string> parse_subqueries(std::string_view completion, std::string_view original,
                                          std::size_t max_subqueries) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= completion.size()) {
    std::size_t end = completion.find('\n', pos);
    if (end == std::string_view::npos) end = completion.size();
    std::string_view raw = text::trim(completion.substr(pos, end - pos));
    pos = end + 1;
    if (raw.empty() || raw.back() == ':') continue;
    std::string line = strip_line(raw);
    const std::string key = normalize_subquery(line);
    if (key == "none" || key == "n/a") continue;  // "no decomposition needed"
    lines.push_back(std::move(line));
  }
  return sanitize_subqueries(lines, original, max_subqueries);
}

std::vector<std::string> query_set(const QueryBundle& bundle) {
  std::vector<std::string> out;
  out.reserve(1 + bundle.sub_queries.size());
  out.push_back(bundle.original);
  out.insert(out.end(), bundle.sub_queries.begin(), bundle.sub_queries.end());
  return out;
}

SubqueryCache::SubqueryCache(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  if (std::ifstream in(path_); in) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (text::trim(line).empty()) continue;
      try {
        json j = json::parse(line);
        entries_[j.at("q").get<std::string>()] = j.at("subs").get<std::vector<std::string>>();
      } catch (const json::exception& e) {
        load_warnings_.push_back(path_.string() + ":" + std::to_string(lineno) +
                                 ": corrupt cache record skipped (" + e.what() + ")");
      }
    }
  }
  out_.open(path_, std::ios::app);
  if (!out_) throw ConfigError("cannot open sub-query cache " + path_.string());
}

std::optional<QueryBundle> SubqueryCache::get(const std::string& query) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(query);
  if (it == entries_.end()) return std::nullopt;
  QueryBundle b;
  b.original = query;
  b.sub_queries = it->second;
  b.provenance = Provenance::kCache;
  return b;
}

void SubqueryCache::put(const std::string& query, const QueryBundle& bundle,
                        std::string_view model) {
  json line = {{"q", query}, {"subs", bundle.sub_queries}, {"model", model}, {"ts", iso8601_now()}};
  std::unique_lock lock(mu_);
  entries_[query] = bundle.sub_queries;
  out_ << line.dump() << '\n';
  out_.flush();
}

std::size_t SubqueryCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

QueryBundle decompose(const std::string& question, const DecomposePrompt& prompt,
                      ChatProvider& provider, const SamplingParams& params,
                      std::vector<std::string>* warnings) {
  if (text::trim(question).empty()) throw ConfigError("cannot decompose an empty question");
  const std::string completion = provider.chat_complete(prompt.render(question), params);
  QueryBundle b;
  b.original = question;
  b.sub_queries = parse_subqueries(completion, question, prompt.max_subqueries());
  b.provenance = Provenance::kLlm;
  if (b.sub_queries.empty() && warnings != nullptr) {
    warnings->push_back("decomposition produced no usable sub-queries; using the original only");
  }
  return b;
}

Decomposer::Decomposer(ChatProvider& provider, DecomposePrompt prompt, SamplingParams params,
                       SubqueryCache* cache)
    : provider_(provider), prompt_(std::move(prompt)), params_(params), cache_(cache) {
  params_.validate();
}

QueryBundle Decomposer::run(const std::string& query_id, const std::string& question,
                            std::vector<std::string>* warnings) {
  if (cache_ != nullptr) {
    if (std::optional<QueryBundle> hit = cache_->get(question)) {
      hit->query_id = query_id;
      // Re-apply the invariants in case the cache was written under another budget.
      hit->sub_queries = sanitize_subqueries(hit->sub_queries, question, prompt_.max_subqueries());
      return *hit;
    }
  }
  QueryBundle b;
  try {
    b = decompose(question, prompt_, provider_, params_, warnings);
  } catch (const Error& e) {
    throw ProviderError(query_id + ": decomposition failed: " + e.what());
  }
  b.query_id = query_id;
  if (cache_ != nullptr) cache_->put(question, b, provider_.name());
  return b;
}

}  // namespace qdrag
