#include "qdrag/trace.h"

#include <fstream>

#include "qdrag/error.h"
#include "qdrag/text.h"

namespace qdrag {

using nlohmann::json;

namespace {

json sp_to_json(const std::vector<std::pair<std::string, int>>& sp) {
  json out = json::array();
  for (const auto& [title, idx] : sp) out.push_back(json::array({title, idx}));
  return out;
}

std::vector<std::pair<std::string, int>> sp_from_json(const json& j) {
  std::vector<std::pair<std::string, int>> out;
  for (const json& e : j) out.emplace_back(e.at(0).get<std::string>(), e.at(1).get<int>());
  return out;
}

}  // namespace

json to_json(const TraceRecord& t) {
  json pool = json::array();
  for (const ScoredCandidate& c : t.pool) {
    pool.push_back({{"chunk_id", c.chunk_id},
                    {"position", c.position},
                    {"retrieval_score", c.retrieval_score},
                    {"rerank_score", c.rerank_score ? json(*c.rerank_score) : json(nullptr)},
                    {"origin_query", c.origin_query}});
  }
  return {{"query_id", t.query_id},
          {"variant", t.variant},
          {"question", t.question},
          {"sub_queries", t.sub_queries},
          {"provenance", t.provenance},
          {"pool", pool},
          {"pool_size", t.pool_size},
          {"final", t.final_ids},
          {"final_scores", t.final_scores},
          {"timings",
           {{"decompose", t.timing.decompose},
            {"embed", t.timing.embed},
            {"search", t.timing.search},
            {"rerank", t.timing.rerank},
            {"generate", t.timing.generate},
            {"retrieval", t.timing.retrieval()}}},
          {"answer_text", t.answer_text ? json(*t.answer_text) : json(nullptr)},
          {"question_type", t.question_type},
          {"gold_chunk_ids", t.gold_chunk_ids},
          {"gold_evidence_count", t.gold_evidence_count},
          {"unresolvable", t.unresolvable},
          {"gold_answer", t.gold_answer ? json(*t.gold_answer) : json(nullptr)},
          {"gold_sp", sp_to_json(t.gold_sp)},
          {"predicted_sp", sp_to_json(t.predicted_sp)},
          {"warnings", t.warnings}};
}

TraceRecord trace_from_json(const json& j) {
  TraceRecord t;
  t.query_id = j.at("query_id").get<std::string>();
  t.variant = j.at("variant").get<std::string>();
  t.question = j.at("question").get<std::string>();
  t.sub_queries = j.at("sub_queries").get<std::vector<std::string>>();
  t.provenance = j.at("provenance").get<std::string>();
  for (const json& c : j.at("pool")) {
    ScoredCandidate s;
    s.chunk_id = c.at("chunk_id").get<std::string>();
    s.position = c.at("position").get<std::size_t>();
    s.retrieval_score = c.at("retrieval_score").get<double>();
    if (!c.at("rerank_score").is_null()) s.rerank_score = c.at("rerank_score").get<double>();
    s.origin_query = c.at("origin_query").get<std::string>();
    t.pool.push_back(std::move(s));
  }
  t.pool_size = j.at("pool_size").get<std::size_t>();
  t.final_ids = j.at("final").get<std::vector<std::string>>();
  t.final_scores = j.at("final_scores").get<std::vector<double>>();
  const json& tm = j.at("timings");
  t.timing.decompose = tm.at("decompose").get<double>();
  t.timing.embed = tm.at("embed").get<double>();
  t.timing.search = tm.at("search").get<double>();
  t.timing.rerank = tm.at("rerank").get<double>();
  t.timing.generate = tm.at("generate").get<double>();
  if (!j.at("answer_text").is_null()) t.answer_text = j["answer_text"].get<std::string>();
  t.question_type = j.value("question_type", "");
  t.gold_chunk_ids = j.at("gold_chunk_ids").get<std::vector<std::string>>();
  t.gold_evidence_count = j.at("gold_evidence_count").get<std::size_t>();
  t.unresolvable = j.at("unresolvable").get<bool>();
  if (!j.at("gold_answer").is_null()) t.gold_answer = j["gold_answer"].get<std::string>();
  t.gold_sp = sp_from_json(j.at("gold_sp"));
  t.predicted_sp = sp_from_json(j.at("predicted_sp"));
  t.warnings = j.value("warnings", std::vector<std::string>{});
  return t;
}

void write_traces(const std::filesystem::path& path, const std::vector<TraceRecord>& traces) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const TraceRecord& t : traces) out << to_json(t).dump() << '\n';
}

std::vector<TraceRecord> read_traces(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<TraceRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(trace_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace qdrag
