#include "qdrag/http_providers.h"

#include <algorithm>
#include <cstdlib>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "qdrag/error.h"

namespace qdrag {

using nlohmann::json;

TraceSink::TraceSink(const std::filesystem::path& path) : out_(path, std::ios::app) {
  if (!out_) throw ConfigError("cannot open trace file " + path.string());
}

void TraceSink::record(const json& entry) {
  std::lock_guard lock(mu_);
  out_ << entry.dump() << '\n';
  out_.flush();
}

// Shared POST-with-retries machinery for the three HTTP providers.
class HttpTransport {
 public:
  HttpTransport(const ProviderEndpoint& endpoint, std::string role,
                std::shared_ptr<TraceSink> trace)
      : endpoint_(endpoint),
        role_(std::move(role)),
        trace_(std::move(trace)),
        in_flight_(static_cast<std::ptrdiff_t>(endpoint.max_in_flight)) {
    endpoint_.validate();
    split_url(endpoint_.base_url);
  }

  json post(const std::string& path, const json& body) {
    const std::string url_path = prefix_ + path;
    const std::string payload = body.dump();
    httplib::Headers headers;
    if (!endpoint_.auth_env_var.empty()) {
      const char* token = std::getenv(endpoint_.auth_env_var.c_str());
      if (token == nullptr || *token == '\0') {
        throw ProviderError(role_ + ": environment variable " + endpoint_.auth_env_var +
                            " is not set");
      }
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }

    std::string last_error;
    for (int attempt = 0; attempt <= endpoint_.retries; ++attempt) {
      if (attempt > 0) {
        auto delay = endpoint_.backoff * (1LL << std::min(attempt - 1, 16));
        std::this_thread::sleep_for(delay);
      }
      int status = 0;
      std::string response_body;
      {
        in_flight_.acquire();
        httplib::Client client(scheme_host_port_);
        const auto secs = endpoint_.timeout.count() / 1000;
        const auto usecs = (endpoint_.timeout.count() % 1000) * 1000;
        client.set_connection_timeout(secs, usecs);
        client.set_read_timeout(secs, usecs);
        client.set_write_timeout(secs, usecs);
        auto res = client.Post(url_path, headers, payload, "application/json");
        in_flight_.release();
        if (!res) {
          last_error = "transport error: " + httplib::to_string(res.error());
        } else {
          status = res->status;
          response_body = res->body;
        }
      }
      if (trace_) {
        trace_->record({{"role", role_},
                        {"url", scheme_host_port_ + url_path},
                        {"attempt", attempt},
                        {"status", status},
                        {"request", body},
                        {"response", response_body},
                        {"error", last_error}});
      }
      if (status == 0) {
        spdlog::warn("{}: attempt {} failed: {}", role_, attempt + 1, last_error);
        continue;
      }
      if (status >= 200 && status < 300) {
        try {
          return json::parse(response_body);
        } catch (const json::parse_error& e) {
          throw ProviderError(role_ + ": response is not JSON: " + e.what());
        }
      }
      last_error = "HTTP " + std::to_string(status) + ": " + response_body.substr(0, 200);
      if (status != 408 && status != 429 && status < 500) break;
      spdlog::warn("{}: attempt {} failed: {}", role_, attempt + 1, last_error);
    }
    throw ProviderError(role_ + " request to " + scheme_host_port_ + url_path +
                        " failed: " + last_error);
  }

 private:
  void split_url(const std::string& url) {
    const std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      throw ConfigError("endpoint URL needs a scheme: " + url);
    }
    const std::size_t path_start = url.find('/', scheme_end + 3);
    scheme_host_port_ = url.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  ProviderEndpoint endpoint_;
  std::string role_;
  std::shared_ptr<TraceSink> trace_;
  std::counting_semaphore<> in_flight_;
  std::string scheme_host_port_;
  std::string prefix_;
};

std::vector<EmbeddingVector> decode_embeddings_response(const json& body, std::size_t expected) {
  auto data = body.find("data");
  if (data == body.end() || !data->is_array()) {
    throw ProviderError("embeddings response has no data array");
  }
  if (data->size() != expected) {
    throw ProviderError("embeddings response has " + std::to_string(data->size()) +
                        " items, expected " + std::to_string(expected));
  }
  std::vector<EmbeddingVector> out(expected);
  std::vector<bool> filled(expected, false);
  for (std::size_t i = 0; i < data->size(); ++i) {
    const json& item = (*data)[i];
    std::size_t index = i;
    if (auto it = item.find("index"); it != item.end() && it->is_number_integer()) {
      index = it->get<std::size_t>();
    }
    if (index >= expected || filled[index]) {
      throw ProviderError("embeddings response has a bad or repeated index");
    }
    auto emb = item.find("embedding");
    if (emb == item.end() || !emb->is_array()) {
      throw ProviderError("embeddings response item lacks an embedding array");
    }
    out[index] = EmbeddingVector(emb->get<std::vector<double>>());
    filled[index] = true;
  }
  return out;
}

std::vector<double> decode_rerank_response(const json& body, std::size_t expected) {
  const json* results = &body;
  if (body.is_object()) {
    auto it = body.find("results");
    if (it == body.end()) it = body.find("data");
    if (it == body.end()) throw ProviderError("rerank response has no results array");
    results = &*it;
  }
  if (!results->is_array()) throw ProviderError("rerank results are not an array");
  if (results->size() != expected) {
    throw ProviderError("rerank response has " + std::to_string(results->size()) +
                        " scores, expected " + std::to_string(expected));
  }
  std::vector<double> out(expected, 0.0);
  std::vector<bool> filled(expected, false);
  for (std::size_t i = 0; i < results->size(); ++i) {
    const json& item = (*results)[i];
    std::size_t index = i;
    if (auto it = item.find("index"); it != item.end() && it->is_number_integer()) {
      index = it->get<std::size_t>();
    }
    if (index >= expected || filled[index]) {
      throw ProviderError("rerank response has a bad or repeated index");
    }
    auto score = item.find("relevance_score");
    if (score == item.end()) score = item.find("score");
    if (score == item.end() || !score->is_number()) {
      throw ProviderError("rerank response item lacks a score");
    }
    out[index] = score->get<double>();
    filled[index] = true;
  }
  return out;
}

std::string decode_chat_response(const json& body) {
  try {
    return body.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("chat response is malformed: ") + e.what());
  }
}

HttpEmbedder::HttpEmbedder(ProviderEndpoint endpoint, std::shared_ptr<TraceSink> trace)
    : endpoint_(std::move(endpoint)),
      transport_(std::make_unique<HttpTransport>(endpoint_, "embed", std::move(trace))) {}
HttpEmbedder::~HttpEmbedder() = default;
std::string HttpEmbedder::name() const { return "http-embed:" + endpoint_.model_name; }

std::vector<EmbeddingVector> HttpEmbedder::do_embed(std::span<const std::string> texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t begin = 0; begin < texts.size(); begin += endpoint_.batch_size) {
    const std::size_t end = std::min(texts.size(), begin + endpoint_.batch_size);
    json input = json::array();
    for (std::size_t i = begin; i < end; ++i) input.push_back(texts[i]);
    json response = transport_->post("/embeddings", {{"model", endpoint_.model_name},
                                                     {"input", std::move(input)}});
    try {
      for (EmbeddingVector& v : decode_embeddings_response(response, end - begin)) {
        out.push_back(std::move(v));
      }
    } catch (const ProviderError& e) {
      throw ProviderError("embedding batch [" + std::to_string(begin) + ", " +
                          std::to_string(end) + "): " + e.what());
    }
  }
  return out;
}

HttpReranker::HttpReranker(ProviderEndpoint endpoint, std::shared_ptr<TraceSink> trace)
    : endpoint_(std::move(endpoint)),
      transport_(std::make_unique<HttpTransport>(endpoint_, "rerank", std::move(trace))) {}
HttpReranker::~HttpReranker() = default;
std::string HttpReranker::name() const { return "http-rerank:" + endpoint_.model_name; }

std::vector<double> HttpReranker::do_score(const std::string& query,
                                           std::span<const std::string> passages) {
  json docs = json::array();
  for (const std::string& p : passages) docs.push_back(p);
  json response = transport_->post("/rerank", {{"model", endpoint_.model_name},
                                               {"query", query},
                                               {"documents", std::move(docs)}});
  return decode_rerank_response(response, passages.size());
}

HttpChat::HttpChat(ProviderEndpoint endpoint, std::shared_ptr<TraceSink> trace)
    : endpoint_(std::move(endpoint)),
      transport_(std::make_unique<HttpTransport>(endpoint_, "chat", std::move(trace))) {}
HttpChat::~HttpChat() = default;
std::string HttpChat::name() const { return "http-chat:" + endpoint_.model_name; }

std::string HttpChat::do_complete(const std::string& prompt, const SamplingParams& params) {
  json body = {{"model", endpoint_.model_name},
               {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
               {"temperature", params.temperature},
               {"top_p", params.top_p},
               {"max_tokens", params.max_tokens}};
  return decode_chat_response(transport_->post("/chat/completions", body));
}

}  // namespace qdrag
