#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qdrag/embedding.h"

namespace qdrag {

struct SamplingParams {
  double temperature = 0.8;
  double top_p = 0.8;
  int max_tokens = 512;

  // Throws ConfigError unless 0 <= temperature <= 2, 0 < top_p <= 1, max_tokens > 0.
  void validate() const;
};

struct ProviderEndpoint {
  std::string base_url;
  std::string model_name;
  std::string auth_env_var;  // empty: no Authorization header
  std::chrono::milliseconds timeout{60'000};
  int retries = 3;
  std::chrono::milliseconds backoff{500};
  std::size_t max_in_flight = 4;
  std::size_t batch_size = 32;

  void validate() const;
};

// Simulated cost of a mock call, charged to VirtualClock.
struct MockLatency {
  double per_call = 0.0;
  double per_item = 0.0;

  double cost(std::size_t items) const { return per_call + per_item * static_cast<double>(items); }
};

// f_q / f_d. Public entry points enforce the batch contract: non-empty input,
// one vector per text in order, one dimension for the provider's lifetime.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts);
  EmbeddingVector embed(const std::string& text);

  virtual std::string name() const = 0;
  std::size_t calls() const { return calls_.load(); }
  // 0 until the first successful call.
  std::size_t dim() const { return dim_.load(); }

 protected:
  virtual std::vector<EmbeddingVector> do_embed(std::span<const std::string> texts) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> dim_{0};
};

// g_phi(q, d): one finite relevance score per passage, higher is more relevant.
class RerankProvider {
 public:
  virtual ~RerankProvider() = default;

  std::vector<double> score_pairs(const std::string& query, std::span<const std::string> passages);

  virtual std::string name() const = 0;
  std::size_t calls() const { return calls_.load(); }

 protected:
  virtual std::vector<double> do_score(const std::string& query,
                                       std::span<const std::string> passages) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;

  // Non-empty prompt in, non-empty completion out.
  std::string chat_complete(const std::string& prompt, const SamplingParams& params);

  virtual std::string name() const = 0;
  std::size_t calls() const { return calls_.load(); }

 protected:
  virtual std::string do_complete(const std::string& prompt, const SamplingParams& params) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
};

// Each content token is hashed to one of `dim` buckets with a +1 or -1 sign; the
// sum is L2-normalized. Texts sharing vocabulary get larger inner products.
class HashEmbedder final : public EmbeddingProvider {
 public:
  explicit HashEmbedder(std::size_t dim = 1024, std::uint64_t seed = 0, MockLatency latency = {});
  std::string name() const override { return "mock-hash-" + std::to_string(dim_); }

 protected:
  std::vector<EmbeddingVector> do_embed(std::span<const std::string> texts) override;

 private:
  EmbeddingVector embed_one(const std::string& text) const;

  std::size_t dim_;
  std::uint64_t seed_;
  MockLatency latency_;
};

// Bag-of-tokens F1 between query and passage content tokens.
class TokenOverlapScorer final : public RerankProvider {
 public:
  explicit TokenOverlapScorer(MockLatency latency = {}) : latency_(latency) {}
  std::string name() const override { return "mock-overlap-f1"; }

 protected:
  std::vector<double> do_score(const std::string& query,
                               std::span<const std::string> passages) override;

 private:
  MockLatency latency_;
};

// Scores a pair by the embedder's inner product, i.e. reproduces the retrieval score.
class InnerProductScorer final : public RerankProvider {
 public:
  explicit InnerProductScorer(EmbeddingProvider& embedder) : embedder_(embedder) {}
  std::string name() const override { return "inner-product(" + embedder_.name() + ")"; }

 protected:
  std::vector<double> do_score(const std::string& query,
                               std::span<const std::string> passages) override;

 private:
  EmbeddingProvider& embedder_;
};

// Table lookup on the exact prompt, with a fallback for unknown prompts.
class ScriptedChat final : public ChatProvider {
 public:
  using Fallback = std::function<std::string(const std::string& prompt)>;

  ScriptedChat(std::map<std::string, std::string> table, std::string fallback,
               MockLatency latency = {});
  ScriptedChat(std::map<std::string, std::string> table, Fallback fallback,
               MockLatency latency = {});

  std::string name() const override { return "mock-scripted"; }

 protected:
  std::string do_complete(const std::string& prompt, const SamplingParams& params) override;

 private:
  std::map<std::string, std::string> table_;
  Fallback fallback_;
  MockLatency latency_;
};

// Fallback reader for offline runs: answers with the title of the first passage
// found in a generation prompt ("Title: ..." line), or "unknown".
std::string first_passage_title(const std::string& prompt);

}  // namespace qdrag
