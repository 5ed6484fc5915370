#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <string>

#include <nlohmann/json.hpp>

#include "qdrag/providers.h"

namespace qdrag {

// Request/response archive, one JSON object per line. Safe to share across providers.
class TraceSink {
 public:
  explicit TraceSink(const std::filesystem::path& path);
  void record(const nlohmann::json& entry);

 private:
  std::mutex mu_;
  std::ofstream out_;
};

class HttpTransport;

// POST {base_url}/embeddings  {"model", "input": [...]}  ->  {"data": [{"index", "embedding"}]}
class HttpEmbedder final : public EmbeddingProvider {
 public:
  explicit HttpEmbedder(ProviderEndpoint endpoint, std::shared_ptr<TraceSink> trace = nullptr);
  ~HttpEmbedder() override;
  std::string name() const override;

 protected:
  std::vector<EmbeddingVector> do_embed(std::span<const std::string> texts) override;

 private:
  ProviderEndpoint endpoint_;
  std::unique_ptr<HttpTransport> transport_;
};

// POST {base_url}/rerank  {"model", "query", "documents": [...]}
//   ->  {"results": [{"index", "relevance_score"}]}  (a bare array of {"index", "score"} is
//   also accepted)
class HttpReranker final : public RerankProvider {
 public:
  explicit HttpReranker(ProviderEndpoint endpoint, std::shared_ptr<TraceSink> trace = nullptr);
  ~HttpReranker() override;
  std::string name() const override;

 protected:
  std::vector<double> do_score(const std::string& query,
                               std::span<const std::string> passages) override;

 private:
  ProviderEndpoint endpoint_;
  std::unique_ptr<HttpTransport> transport_;
};

// POST {base_url}/chat/completions  {"model", "messages", "temperature", "top_p", "max_tokens"}
//   ->  {"choices": [{"message": {"content"}}]}
class HttpChat final : public ChatProvider {
 public:
  explicit HttpChat(ProviderEndpoint endpoint, std::shared_ptr<TraceSink> trace = nullptr);
  ~HttpChat() override;
  std::string name() const override;

 protected:
  std::string do_complete(const std::string& prompt, const SamplingParams& params) override;

 private:
  ProviderEndpoint endpoint_;
  std::unique_ptr<HttpTransport> transport_;
};

// Response-body decoders, exposed for tests.
std::vector<EmbeddingVector> decode_embeddings_response(const nlohmann::json& body,
                                                        std::size_t expected);
std::vector<double> decode_rerank_response(const nlohmann::json& body, std::size_t expected);
std::string decode_chat_response(const nlohmann::json& body);

}  // namespace qdrag
