#include "qdrag/providers.h"

#include <cmath>
#include <map>
#include <string_view>

#include "qdrag/clock.h"
#include "qdrag/error.h"
#include "qdrag/text.h"

namespace qdrag {

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw ProviderError("embedding vector has dimension 0");
  for (double v : values_) {
    if (!std::isfinite(v)) throw ProviderError("embedding vector contains a non-finite value");
  }
}

double EmbeddingVector::norm() const { return std::sqrt(inner_product(values_, values_)); }

double inner_product(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  const std::size_t n = a.size() < b.size() ? a.size() : b.size();
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void SamplingParams::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw ConfigError("temperature must lie in [0, 2], got " + std::to_string(temperature));
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw ConfigError("top_p must lie in (0, 1], got " + std::to_string(top_p));
  }
  if (max_tokens <= 0) throw ConfigError("max_tokens must be positive");
}

void ProviderEndpoint::validate() const {
  if (base_url.empty()) throw ConfigError("endpoint base_url is empty");
  if (timeout.count() <= 0) throw ConfigError("endpoint timeout must be positive");
  if (retries < 0 || retries > 10) throw ConfigError("endpoint retries must lie in [0, 10]");
  if (backoff.count() < 0) throw ConfigError("endpoint backoff must be non-negative");
  if (max_in_flight == 0) throw ConfigError("endpoint max_in_flight must be positive");
  if (batch_size == 0) throw ConfigError("endpoint batch_size must be positive");
}

std::vector<EmbeddingVector> EmbeddingProvider::embed_texts(std::span<const std::string> texts) {
  if (texts.empty()) throw ProviderError(name() + ": embed_texts called with no texts");
  for (const std::string& t : texts) {
    if (t.empty()) throw ProviderError(name() + ": cannot embed an empty text");
  }
  ++calls_;
  std::vector<EmbeddingVector> out = do_embed(texts);
  if (out.size() != texts.size()) {
    throw ProviderError(name() + ": returned " + std::to_string(out.size()) + " vectors for " +
                        std::to_string(texts.size()) + " texts");
  }
  const std::size_t d = out.front().dim();
  for (const EmbeddingVector& v : out) {
    if (v.dim() != d) throw ProviderError(name() + ": inconsistent dimensions within a batch");
  }
  std::size_t expected = 0;
  if (!dim_.compare_exchange_strong(expected, d) && expected != d) {
    throw ProviderError(name() + ": embedding dimension drifted from " + std::to_string(expected) +
                        " to " + std::to_string(d));
  }
  return out;
}

EmbeddingVector EmbeddingProvider::embed(const std::string& text) {
  std::vector<EmbeddingVector> v = embed_texts(std::span<const std::string>(&text, 1));
  return std::move(v.front());
}

std::vector<double> RerankProvider::score_pairs(const std::string& query,
                                                std::span<const std::string> passages) {
  if (passages.empty()) throw ProviderError(name() + ": score_pairs called with no passages");
  ++calls_;
  std::vector<double> scores = do_score(query, passages);
  if (scores.size() != passages.size()) {
    throw ProviderError(name() + ": returned " + std::to_string(scores.size()) + " scores for " +
                        std::to_string(passages.size()) + " passages");
  }
  for (double s : scores) {
    if (!std::isfinite(s)) throw ProviderError(name() + ": non-finite rerank score");
  }
  return scores;
}

std::string ChatProvider::chat_complete(const std::string& prompt, const SamplingParams& params) {
  if (prompt.empty()) throw ProviderError(name() + ": empty prompt");
  params.validate();
  ++calls_;
  std::string out = do_complete(prompt, params);
  if (text::trim(out).empty()) throw ProviderError(name() + ": empty completion");
  return out;
}

HashEmbedder::HashEmbedder(std::size_t dim, std::uint64_t seed, MockLatency latency)
    : dim_(dim), seed_(seed), latency_(latency) {
  if (dim_ == 0) throw ConfigError("mock embedder dimension must be positive");
}

EmbeddingVector HashEmbedder::embed_one(const std::string& text) const {
  std::vector<double> v(dim_, 0.0);
  std::vector<std::string> tokens = text::content_tokens(text);
  if (tokens.empty()) tokens.push_back(text);
  for (const std::string& tok : tokens) {
    const std::uint64_t h = text::fnv1a64(tok, seed_);
    v[h % dim_] += (h >> 63) ? -1.0 : 1.0;
  }
  double norm = std::sqrt(inner_product(v, v));
  if (norm == 0.0) {
    // Every token cancelled out; fall back to the first token's bucket alone.
    const std::uint64_t h = text::fnv1a64(tokens.front(), seed_);
    v[h % dim_] = 1.0;
    norm = 1.0;
  }
  for (double& x : v) x /= norm;
  return EmbeddingVector(std::move(v));
}

std::vector<EmbeddingVector> HashEmbedder::do_embed(std::span<const std::string> texts) {
  VirtualClock::charge(latency_.cost(texts.size()));
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const std::string& t : texts) out.push_back(embed_one(t));
  return out;
}

std::vector<double> TokenOverlapScorer::do_score(const std::string& query,
                                                 std::span<const std::string> passages) {
  VirtualClock::charge(latency_.cost(passages.size()));
  std::map<std::string, int> q_counts;
  std::size_t q_total = 0;
  for (std::string& t : text::content_tokens(query)) {
    ++q_counts[std::move(t)];
    ++q_total;
  }
  std::vector<double> out;
  out.reserve(passages.size());
  for (const std::string& p : passages) {
    std::map<std::string, int> remaining = q_counts;
    std::size_t p_total = 0;
    std::size_t common = 0;
    for (const std::string& t : text::content_tokens(p)) {
      ++p_total;
      auto it = remaining.find(t);
      if (it != remaining.end() && it->second > 0) {
        --it->second;
        ++common;
      }
    }
    if (common == 0 || p_total == 0 || q_total == 0) {
      out.push_back(0.0);
      continue;
    }
    const double precision = static_cast<double>(common) / static_cast<double>(p_total);
    const double recall = static_cast<double>(common) / static_cast<double>(q_total);
    out.push_back(2.0 * precision * recall / (precision + recall));
  }
  return out;
}

std::vector<double> InnerProductScorer::do_score(const std::string& query,
                                                 std::span<const std::string> passages) {
  EmbeddingVector q = embedder_.embed(query);
  std::vector<EmbeddingVector> ps = embedder_.embed_texts(passages);
  std::vector<double> out;
  out.reserve(ps.size());
  for (const EmbeddingVector& p : ps) out.push_back(inner_product(q.values(), p.values()));
  return out;
}

ScriptedChat::ScriptedChat(std::map<std::string, std::string> table, std::string fallback,
                           MockLatency latency)
    : table_(std::move(table)),
      fallback_([f = std::move(fallback)](const std::string&) { return f; }),
      latency_(latency) {}

ScriptedChat::ScriptedChat(std::map<std::string, std::string> table, Fallback fallback,
                           MockLatency latency)
    : table_(std::move(table)), fallback_(std::move(fallback)), latency_(latency) {}

std::string ScriptedChat::do_complete(const std::string& prompt, const SamplingParams&) {
  VirtualClock::charge(latency_.cost(1));
  auto it = table_.find(prompt);
  if (it != table_.end()) return it->second;
  return fallback_ ? fallback_(prompt) : std::string();
}

std::string first_passage_title(const std::string& prompt) {
  constexpr std::string_view kTag = "Title: ";
  std::size_t pos = prompt.find(kTag);
  if (pos == std::string::npos) return "unknown";
  pos += kTag.size();
  std::size_t end = prompt.find('\n', pos);
  std::string_view title = text::trim(std::string_view(prompt).substr(
      pos, end == std::string::npos ? std::string::npos : end - pos));
  return title.empty() ? "unknown" : std::string(title);
}

}  // namespace qdrag
