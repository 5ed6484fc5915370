#include "qdrag/config.h"

#include <algorithm>
#include <set>

#include "qdrag/error.h"
#include "qdrag/text.h"

namespace qdrag {

using nlohmann::json;

namespace {

template <typename T>
T get_as(const json& j, std::string_view key) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("config key '" + std::string(key) + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, std::string_view where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError("unknown config key '" + key + "' in " + std::string(where));
    }
  }
}

MockLatency latency_from_json(const json& j, MockLatency base) {
  reject_unknown(j, {"per_call", "per_item"}, "latency");
  if (j.contains("per_call")) base.per_call = get_as<double>(j["per_call"], "per_call");
  if (j.contains("per_item")) base.per_item = get_as<double>(j["per_item"], "per_item");
  return base;
}

ProviderConfig provider_from_json(const json& j, ProviderConfig base, std::string_view role) {
  const std::string where = "providers." + std::string(role);
  if (j.is_string()) {
    if (j.get<std::string>() != "mock") {
      throw ConfigError(where + " must be \"mock\" or an endpoint object");
    }
    base.mock = true;
    return base;
  }
  if (!j.is_object()) throw ConfigError(where + " must be \"mock\" or an endpoint object");
  reject_unknown(j,
                 {"mock", "base_url", "model", "auth_env", "timeout_ms", "retries", "backoff_ms",
                  "max_in_flight", "batch_size", "latency"},
                 where);
  const bool wants_mock = j.value("mock", false);
  const bool has_endpoint = j.contains("base_url") || j.contains("model");
  if (wants_mock && has_endpoint) {
    throw ConfigError(where + " mixes mock with a live endpoint");
  }
  ProviderEndpoint& ep = base.endpoint;
  if (j.contains("base_url")) ep.base_url = get_as<std::string>(j["base_url"], "base_url");
  if (j.contains("model")) ep.model_name = get_as<std::string>(j["model"], "model");
  if (j.contains("auth_env")) ep.auth_env_var = get_as<std::string>(j["auth_env"], "auth_env");
  if (j.contains("timeout_ms")) {
    ep.timeout = std::chrono::milliseconds(get_as<long>(j["timeout_ms"], "timeout_ms"));
  }
  if (j.contains("retries")) ep.retries = get_as<int>(j["retries"], "retries");
  if (j.contains("backoff_ms")) {
    ep.backoff = std::chrono::milliseconds(get_as<long>(j["backoff_ms"], "backoff_ms"));
  }
  if (j.contains("max_in_flight")) {
    ep.max_in_flight = get_as<std::size_t>(j["max_in_flight"], "max_in_flight");
  }
  if (j.contains("batch_size")) ep.batch_size = get_as<std::size_t>(j["batch_size"], "batch_size");
  if (j.contains("latency")) base.latency = latency_from_json(j["latency"], base.latency);
  base.mock = !has_endpoint;
  return base;
}

json provider_to_json(const ProviderConfig& p) {
  if (p.mock) {
    return {{"mock", true},
            {"latency", {{"per_call", p.latency.per_call}, {"per_item", p.latency.per_item}}}};
  }
  const ProviderEndpoint& ep = p.endpoint;
  return {{"base_url", ep.base_url},
          {"model", ep.model_name},
          {"auth_env", ep.auth_env_var},
          {"timeout_ms", ep.timeout.count()},
          {"retries", ep.retries},
          {"backoff_ms", ep.backoff.count()},
          {"max_in_flight", ep.max_in_flight},
          {"batch_size", ep.batch_size}};
}

std::string_view to_string(ClockKind c) {
  switch (c) {
    case ClockKind::kVirtual:
      return "virtual";
    case ClockKind::kSteady:
      return "steady";
    case ClockKind::kAuto:
      break;
  }
  return "auto";
}

ClockKind parse_clock(std::string_view s) {
  if (s == "auto") return ClockKind::kAuto;
  if (s == "virtual") return ClockKind::kVirtual;
  if (s == "steady") return ClockKind::kSteady;
  throw ConfigError("unknown clock '" + std::string(s) + "' (auto, virtual, steady)");
}

}  // namespace

std::string_view to_string(Dataset d) {
  switch (d) {
    case Dataset::kMultihopRag:
      return "multihop_rag";
    case Dataset::kHotpotQa:
      return "hotpotqa";
    case Dataset::kSynthetic:
      break;
  }
  return "synthetic";
}

Dataset parse_dataset(std::string_view name) {
  const std::string n = text::to_lower(name);
  if (n == "multihop_rag" || n == "multihop-rag" || n == "multihop") return Dataset::kMultihopRag;
  if (n == "hotpotqa" || n == "hotpot") return Dataset::kHotpotQa;
  if (n == "synthetic") return Dataset::kSynthetic;
  throw ConfigError("unknown dataset '" + std::string(name) +
                    "' (multihop_rag, hotpotqa, synthetic)");
}

std::vector<SystemVariant> parse_variant_list(std::string_view spec) {
  if (text::trim(spec) == "all") return {kAllVariants.begin(), kAllVariants.end()};
  std::vector<SystemVariant> out;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    std::size_t end = spec.find(',', pos);
    if (end == std::string_view::npos) end = spec.size();
    std::string_view item = text::trim(spec.substr(pos, end - pos));
    pos = end + 1;
    if (item.empty()) continue;
    const SystemVariant v = parse_variant(item);
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  if (out.empty()) throw ConfigError("no variant given");
  std::sort(out.begin(), out.end());
  return out;
}

bool RunConfig::uses_virtual_clock() const {
  switch (clock) {
    case ClockKind::kVirtual:
      return true;
    case ClockKind::kSteady:
      return false;
    case ClockKind::kAuto:
      break;
  }
  return all_mock();
}

bool RunConfig::generation_enabled() const {
  return generate.value_or(dataset == Dataset::kHotpotQa);
}

ChunkPolicy RunConfig::effective_chunk_policy() const {
  if (chunk_policy) return *chunk_policy;
  return dataset == Dataset::kHotpotQa ? ChunkPolicy::sentence_per_chunk()
                                       : ChunkPolicy::fixed_window(256, 0);
}

bool RunConfig::per_question_index() const {
  return dataset == Dataset::kHotpotQa && !global_index;
}

void RunConfig::validate() const {
  if (k < 1) throw ConfigError("k must be at least 1");
  if (variants.empty()) throw ConfigError("no variant selected");
  if (workers < 1) throw ConfigError("workers must be at least 1");
  if (limit && *limit == 0) throw ConfigError("limit must be positive");
  if (max_subqueries < 1) throw ConfigError("max_subqueries must be positive");
  if (mock_dim < 1) throw ConfigError("mock dim must be positive");
  if (index_batch_size < 1) throw ConfigError("index_batch_size must be positive");
  if (out_dir.empty()) throw ConfigError("output directory is required");
  sampling.validate();
  for (const auto* role : {&embed, &rerank, &chat}) {
    if (!role->mock) role->endpoint.validate();
  }
  switch (dataset) {
    case Dataset::kMultihopRag:
      if (corpus_path.empty() && index_dir.empty()) {
        throw ConfigError("multihop_rag needs a corpus path or an index directory");
      }
      if (queries_path.empty()) throw ConfigError("multihop_rag needs a queries path");
      break;
    case Dataset::kHotpotQa:
      if (queries_path.empty()) throw ConfigError("hotpotqa needs the split path (queries)");
      break;
    case Dataset::kSynthetic:
      if (synthetic_entities < 2) throw ConfigError("synthetic suite needs at least 2 entities");
      break;
  }
}

RunConfig apply_config_json(RunConfig c, const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"dataset", "variant", "variants", "k", "chunking", "corpus", "queries",
                  "index_dir", "providers", "mock_dim", "cache", "prompts", "max_subqueries",
                  "sampling", "seed", "out", "workers", "limit", "trace", "global_index",
                  "generate", "clock", "synthetic", "index_batch_size"},
                 "config");
  if (j.contains("dataset")) c.dataset = parse_dataset(get_as<std::string>(j["dataset"], "dataset"));
  if (j.contains("variant")) {
    c.variants = parse_variant_list(get_as<std::string>(j["variant"], "variant"));
  }
  if (j.contains("variants")) {
    std::string joined;
    for (const auto& v : get_as<std::vector<std::string>>(j["variants"], "variants")) {
      joined += v + ",";
    }
    c.variants = parse_variant_list(joined);
  }
  if (j.contains("k")) c.k = get_as<std::size_t>(j["k"], "k");
  if (j.contains("chunking")) {
    const json& ch = j["chunking"];
    reject_unknown(ch, {"policy", "window", "overlap"}, "chunking");
    const std::string policy = ch.value("policy", "fixed");
    if (policy == "sentence") {
      c.chunk_policy = ChunkPolicy::sentence_per_chunk();
    } else if (policy == "fixed") {
      c.chunk_policy = ChunkPolicy::fixed_window(ch.value("window", std::size_t{256}),
                                                 ch.value("overlap", std::size_t{0}));
    } else {
      throw ConfigError("unknown chunking policy '" + policy + "' (fixed, sentence)");
    }
  }
  if (j.contains("corpus")) c.corpus_path = get_as<std::string>(j["corpus"], "corpus");
  if (j.contains("queries")) c.queries_path = get_as<std::string>(j["queries"], "queries");
  if (j.contains("index_dir")) c.index_dir = get_as<std::string>(j["index_dir"], "index_dir");
  if (j.contains("providers")) {
    const json& p = j["providers"];
    reject_unknown(p, {"embed", "rerank", "chat"}, "providers");
    if (p.contains("embed")) c.embed = provider_from_json(p["embed"], c.embed, "embed");
    if (p.contains("rerank")) c.rerank = provider_from_json(p["rerank"], c.rerank, "rerank");
    if (p.contains("chat")) c.chat = provider_from_json(p["chat"], c.chat, "chat");
  }
  if (j.contains("mock_dim")) c.mock_dim = get_as<std::size_t>(j["mock_dim"], "mock_dim");
  if (j.contains("cache")) c.cache_path = get_as<std::string>(j["cache"], "cache");
  if (j.contains("prompts")) {
    const json& p = j["prompts"];
    reject_unknown(p, {"decompose", "answer"}, "prompts");
    if (p.contains("decompose")) {
      c.decompose_prompt_path = get_as<std::string>(p["decompose"], "prompts.decompose");
    }
    if (p.contains("answer")) {
      c.answer_prompt_path = get_as<std::string>(p["answer"], "prompts.answer");
    }
  }
  if (j.contains("max_subqueries")) {
    c.max_subqueries = get_as<std::size_t>(j["max_subqueries"], "max_subqueries");
  }
  if (j.contains("sampling")) {
    const json& s = j["sampling"];
    reject_unknown(s, {"temperature", "top_p", "max_tokens"}, "sampling");
    c.sampling.temperature = s.value("temperature", c.sampling.temperature);
    c.sampling.top_p = s.value("top_p", c.sampling.top_p);
    c.sampling.max_tokens = s.value("max_tokens", c.sampling.max_tokens);
  }
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("out")) c.out_dir = get_as<std::string>(j["out"], "out");
  if (j.contains("workers")) c.workers = get_as<std::size_t>(j["workers"], "workers");
  if (j.contains("limit")) {
    if (j["limit"].is_null()) {
      c.limit.reset();
    } else {
      c.limit = get_as<std::size_t>(j["limit"], "limit");
    }
  }
  if (j.contains("trace")) c.trace = get_as<bool>(j["trace"], "trace");
  if (j.contains("global_index")) c.global_index = get_as<bool>(j["global_index"], "global_index");
  if (j.contains("generate")) c.generate = get_as<bool>(j["generate"], "generate");
  if (j.contains("clock")) c.clock = parse_clock(get_as<std::string>(j["clock"], "clock"));
  if (j.contains("synthetic")) {
    const json& s = j["synthetic"];
    reject_unknown(s, {"entities", "queries"}, "synthetic");
    c.synthetic_entities = s.value("entities", c.synthetic_entities);
    c.synthetic_queries = s.value("queries", c.synthetic_queries);
  }
  if (j.contains("index_batch_size")) {
    c.index_batch_size = get_as<std::size_t>(j["index_batch_size"], "index_batch_size");
  }
  return c;
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
  json j;
  try {
    j = read_json_file(path);
  } catch (const DataError& e) {
    throw ConfigError(e.what());
  }
  return apply_config_json(std::move(base), j);
}

// The output directory is left out so that reports written to different
// directories stay byte-comparable.
json to_json(const RunConfig& c) {
  json variants = json::array();
  for (SystemVariant v : c.variants) variants.push_back(std::string(to_string(v)));
  const ChunkPolicy policy = c.effective_chunk_policy();
  json chunking = {{"policy", policy.kind() == ChunkPolicy::Kind::kSentence ? "sentence" : "fixed"}};
  if (policy.kind() == ChunkPolicy::Kind::kFixedWindow) {
    chunking["window"] = policy.window();
    chunking["overlap"] = policy.overlap();
  }
  json j = {{"dataset", std::string(to_string(c.dataset))},
            {"variants", variants},
            {"k", c.k},
            {"chunking", chunking},
            {"corpus", c.corpus_path.string()},
            {"queries", c.queries_path.string()},
            {"index_dir", c.index_dir.string()},
            {"providers",
             {{"embed", provider_to_json(c.embed)},
              {"rerank", provider_to_json(c.rerank)},
              {"chat", provider_to_json(c.chat)}}},
            {"mock_dim", c.mock_dim},
            {"cache", c.cache_path.string()},
            {"prompts",
             {{"decompose", c.decompose_prompt_path.string()},
              {"answer", c.answer_prompt_path.string()}}},
            {"max_subqueries", c.max_subqueries},
            {"sampling",
             {{"temperature", c.sampling.temperature},
              {"top_p", c.sampling.top_p},
              {"max_tokens", c.sampling.max_tokens}}},
            {"seed", c.seed},
            {"workers", c.workers},
            {"limit", c.limit ? json(*c.limit) : json(nullptr)},
            {"trace", c.trace},
            {"global_index", c.global_index},
            {"generate", c.generation_enabled()},
            {"clock", std::string(to_string(c.clock))},
            {"index_batch_size", c.index_batch_size}};
  if (c.dataset == Dataset::kSynthetic) {
    j["synthetic"] = {{"entities", c.synthetic_entities}, {"queries", c.synthetic_queries}};
  }
  return j;
}

}  // namespace qdrag
