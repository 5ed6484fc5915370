#include "qdrag/corpus.h"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "qdrag/error.h"
#include "qdrag/text.h"

namespace qdrag {

using nlohmann::json;

namespace {

std::string record_error(std::string_view what, std::size_t index, std::string_view detail) {
  std::ostringstream os;
  os << what << " record " << index << ": " << detail;
  return os.str();
}

std::string required_string(const json& rec, const char* key, std::string_view what,
                            std::size_t index) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string()) {
    throw DataError(record_error(what, index, std::string("missing string field '") + key + "'"));
  }
  return it->get<std::string>();
}

std::string optional_string(const json& rec, const char* key) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string()) return {};
  return it->get<std::string>();
}

const json& require_array(const json& records, std::string_view what) {
  if (!records.is_array()) throw DataError(std::string(what) + ": expected a JSON array");
  if (records.empty()) throw DataError(std::string(what) + ": file contains no records");
  return records;
}

std::string wiki_doc_id(std::string_view title) { return "wiki:" + std::string(title); }

std::string chunk_id_for(std::string_view doc_id, std::size_t ordinal) {
  return std::string(doc_id) + "#" + std::to_string(ordinal);
}

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

}  // namespace

ChunkPolicy ChunkPolicy::fixed_window(std::size_t window, std::size_t overlap) {
  if (window == 0 || window <= overlap) {
    throw ConfigError("fixed-window chunk policy needs window > overlap (window=" +
                      std::to_string(window) + ", overlap=" + std::to_string(overlap) + ")");
  }
  return ChunkPolicy(Kind::kFixedWindow, window, overlap);
}

ChunkPolicy ChunkPolicy::sentence_per_chunk() { return ChunkPolicy(Kind::kSentence, 0, 0); }

std::string ChunkPolicy::describe() const {
  if (kind_ == Kind::kSentence) return "sentence";
  return "fixed-window(" + std::to_string(window_) + "," + std::to_string(overlap_) + ")";
}

std::vector<SourceDocument> parse_multihop_corpus(const json& records) {
  constexpr std::string_view kWhat = "multihop corpus";
  require_array(records, kWhat);
  std::vector<SourceDocument> docs;
  docs.reserve(records.size());
  std::set<std::string> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& rec = records[i];
    if (!rec.is_object()) throw DataError(record_error(kWhat, i, "not a JSON object"));
    SourceDocument doc;
    doc.title = required_string(rec, "title", kWhat, i);
    doc.body = required_string(rec, "body", kWhat, i);
    if (text::trim(doc.body).empty()) throw DataError(record_error(kWhat, i, "empty body"));
    for (const char* key : {"author", "source", "published_at", "category", "url"}) {
      std::string v = optional_string(rec, key);
      if (!v.empty()) doc.source_meta[key] = std::move(v);
    }
    char prefix[32];
    std::snprintf(prefix, sizeof(prefix), "mh-%06zu-", i);
    doc.doc_id = prefix + text::hex64(text::fnv1a64(doc.title)).substr(0, 8);
    if (!seen.insert(doc.doc_id).second) {
      throw DataError(record_error(kWhat, i, "duplicate doc_id " + doc.doc_id));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<SourceDocument> load_multihop_corpus(const std::filesystem::path& path) {
  return parse_multihop_corpus(read_json_file(path));
}

std::vector<QAExample> parse_multihop_queries(const json& records) {
  constexpr std::string_view kWhat = "multihop queries";
  require_array(records, kWhat);
  std::vector<QAExample> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& rec = records[i];
    if (!rec.is_object()) throw DataError(record_error(kWhat, i, "not a JSON object"));
    QAExample ex;
    char id[32];
    std::snprintf(id, sizeof(id), "mhq-%06zu", i);
    ex.query_id = id;
    ex.question = required_string(rec, "query", kWhat, i);
    if (auto it = rec.find("answer"); it != rec.end() && it->is_string()) {
      ex.gold_answer = it->get<std::string>();
    }
    ex.question_type = optional_string(rec, "question_type");
    if (auto it = rec.find("evidence_list"); it != rec.end()) {
      if (!it->is_array()) throw DataError(record_error(kWhat, i, "evidence_list is not an array"));
      for (const json& ev : *it) {
        if (!ev.is_object()) throw DataError(record_error(kWhat, i, "evidence is not an object"));
        EvidenceSpec spec;
        spec.title = required_string(ev, "title", kWhat, i);
        spec.fact = required_string(ev, "fact", kWhat, i);
        ex.gold_evidence.push_back(std::move(spec));
      }
    }
    if (auto it = rec.find("subqueries"); it != rec.end() && it->is_array()) {
      for (const json& s : *it) {
        if (s.is_string()) ex.scripted_subqueries.push_back(s.get<std::string>());
      }
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<QAExample> load_multihop_queries(const std::filesystem::path& path) {
  return parse_multihop_queries(read_json_file(path));
}

HotpotSplit parse_hotpotqa_split(const json& records) {
  constexpr std::string_view kWhat = "hotpotqa";
  require_array(records, kWhat);
  HotpotSplit split;
  split.examples.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& rec = records[i];
    if (!rec.is_object()) throw DataError(record_error(kWhat, i, "not a JSON object"));
    QAExample ex;
    ex.query_id = required_string(rec, "_id", kWhat, i);
    ex.question = required_string(rec, "question", kWhat, i);
    if (auto it = rec.find("answer"); it != rec.end() && it->is_string()) {
      ex.gold_answer = it->get<std::string>();
    }
    ex.question_type = optional_string(rec, "type");

    auto ctx = rec.find("context");
    if (ctx == rec.end() || !ctx->is_array()) {
      throw DataError(record_error(kWhat, i, "missing context array"));
    }
    for (const json& para : *ctx) {
      if (!para.is_array() || para.size() != 2 || !para[0].is_string() || !para[1].is_array()) {
        throw DataError(record_error(kWhat, i, "context paragraph must be [title, [sentences]]"));
      }
      SourceDocument doc;
      doc.title = para[0].get<std::string>();
      doc.doc_id = wiki_doc_id(doc.title);
      for (const json& s : para[1]) {
        if (!s.is_string()) throw DataError(record_error(kWhat, i, "sentence is not a string"));
        doc.sentences.push_back(s.get<std::string>());
        doc.body += doc.sentences.back();
      }
      ex.local_context.push_back(std::move(doc));
    }

    auto sf = rec.find("supporting_facts");
    if (sf != rec.end() && sf->is_array()) {
      for (const json& fact : *sf) {
        if (!fact.is_array() || fact.size() != 2 || !fact[0].is_string() ||
            !fact[1].is_number_integer()) {
          split.warnings.push_back(record_error(kWhat, i, "malformed supporting fact dropped"));
          continue;
        }
        std::string title = fact[0].get<std::string>();
        int sent = fact[1].get<int>();
        auto para = std::find_if(ex.local_context.begin(), ex.local_context.end(),
                                 [&](const SourceDocument& d) { return d.title == title; });
        if (para == ex.local_context.end()) {
          split.warnings.push_back(
              record_error(kWhat, i, "supporting fact title '" + title + "' not in context; dropped"));
          continue;
        }
        if (sent < 0 || static_cast<std::size_t>(sent) >= para->sentences.size()) {
          split.warnings.push_back(record_error(
              kWhat, i,
              "supporting fact ('" + title + "', " + std::to_string(sent) + ") out of range; dropped"));
          continue;
        }
        EvidenceSpec spec;
        spec.title = std::move(title);
        spec.sentence_index = sent;
        if (std::find(ex.gold_evidence.begin(), ex.gold_evidence.end(), spec) ==
            ex.gold_evidence.end()) {
          ex.gold_evidence.push_back(std::move(spec));
        }
      }
    }
    split.examples.push_back(std::move(ex));
  }
  return split;
}

HotpotSplit load_hotpotqa_split(const std::filesystem::path& path) {
  return parse_hotpotqa_split(read_json_file(path));
}

std::vector<std::string> split_sentences(std::string_view body) {
  std::vector<std::string> out;
  std::size_t start = 0;
  std::size_t i = 0;
  auto emit = [&](std::size_t end) {
    std::string_view s = text::trim(body.substr(start, end - start));
    if (!s.empty()) out.emplace_back(s);
    start = end;
  };
  while (i < body.size()) {
    char c = body[i];
    if (c == '.' || c == '!' || c == '?') {
      std::size_t j = i + 1;
      while (j < body.size() && (body[j] == '.' || body[j] == '!' || body[j] == '?' ||
                                 is_closer(body[j]))) {
        ++j;
      }
      if (j == body.size() || std::isspace(static_cast<unsigned char>(body[j]))) {
        emit(j);
      }
      i = j;
      continue;
    }
    ++i;
  }
  emit(body.size());
  return out;
}

std::vector<Chunk> chunk_document(const SourceDocument& doc, const ChunkPolicy& policy) {
  std::vector<Chunk> chunks;
  auto push = [&](std::string body_text) {
    Chunk c;
    c.doc_id = doc.doc_id;
    c.ordinal = chunks.size();
    c.chunk_id = chunk_id_for(doc.doc_id, c.ordinal);
    c.title = doc.title;
    c.text = std::move(body_text);
    chunks.push_back(std::move(c));
  };

  if (policy.kind() == ChunkPolicy::Kind::kSentence) {
    if (!doc.sentences.empty()) {
      // Keep one chunk per given sentence so ordinals equal sentence indices.
      for (const std::string& s : doc.sentences) {
        std::string_view t = text::trim(s);
        push(t.empty() ? doc.title : std::string(t));
      }
    } else {
      for (std::string& s : split_sentences(doc.body)) push(std::move(s));
    }
    return chunks;
  }

  std::vector<std::string_view> tokens = text::split_whitespace(doc.body);
  const std::size_t step = policy.window() - policy.overlap();
  for (std::size_t begin = 0; begin < tokens.size(); begin += step) {
    std::size_t end = std::min(tokens.size(), begin + policy.window());
    std::string joined;
    for (std::size_t t = begin; t < end; ++t) {
      if (t > begin) joined.push_back(' ');
      joined.append(tokens[t]);
    }
    push(std::move(joined));
    if (end == tokens.size()) break;
  }
  return chunks;
}

std::vector<Chunk> chunk_corpus(std::span<const SourceDocument> docs, const ChunkPolicy& policy) {
  std::vector<Chunk> out;
  for (const SourceDocument& d : docs) {
    std::vector<Chunk> c = chunk_document(d, policy);
    out.insert(out.end(), std::make_move_iterator(c.begin()), std::make_move_iterator(c.end()));
  }
  return out;
}

std::string encoder_text(const Chunk& chunk) {
  if (chunk.title.empty()) return chunk.text;
  return chunk.title + "\n" + chunk.text;
}

GoldResolution resolve_gold_chunks(const QAExample& example, std::span<const Chunk> chunks) {
  GoldResolution res;
  std::set<std::string> ids;
  for (const EvidenceSpec& ev : example.gold_evidence) {
    bool matched = false;
    if (ev.sentence_index) {
      for (const Chunk& c : chunks) {
        if (c.title == ev.title && c.ordinal == static_cast<std::size_t>(*ev.sentence_index)) {
          ids.insert(c.chunk_id);
          matched = true;
        }
      }
    } else {
      const std::string fact = text::collapse_whitespace_lower(ev.fact);
      for (const Chunk& c : chunks) {
        if (c.title != ev.title) continue;
        if (!fact.empty() &&
            text::collapse_whitespace_lower(c.text).find(fact) != std::string::npos) {
          ids.insert(c.chunk_id);
          matched = true;
        }
      }
    }
    if (!matched) {
      res.warnings.push_back(example.query_id + ": evidence from '" + ev.title +
                             "' matched no chunk");
    }
  }
  res.chunk_ids.assign(ids.begin(), ids.end());
  res.unresolvable = res.chunk_ids.empty();
  return res;
}

void write_chunk_manifest(const std::filesystem::path& path, std::span<const Chunk> chunks) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write chunk manifest " + path.string());
  for (const Chunk& c : chunks) {
    json line = {{"chunk_id", c.chunk_id},
                 {"doc_id", c.doc_id},
                 {"ordinal", c.ordinal},
                 {"title", c.title},
                 {"text", c.text}};
    out << line.dump() << '\n';
  }
}

std::vector<Chunk> read_chunk_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read chunk manifest " + path.string());
  std::vector<Chunk> chunks;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      json j = json::parse(line);
      Chunk c;
      c.chunk_id = j.at("chunk_id").get<std::string>();
      c.doc_id = j.at("doc_id").get<std::string>();
      c.ordinal = j.at("ordinal").get<std::size_t>();
      c.title = j.at("title").get<std::string>();
      c.text = j.at("text").get<std::string>();
      chunks.push_back(std::move(c));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return chunks;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::filesystem::path& path) {
  std::string content = read_file(path);
  if (text::trim(content).empty()) throw DataError(path.string() + ": file is empty");
  try {
    return json::parse(content);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace qdrag
