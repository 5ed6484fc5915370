#include <fstream>
#include <set>


#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "qdrag/corpus.h"
#include "qdrag/error.h"
#include "test_support.h"

using nlohmann::json;
using namespace qdrag;
using qdrag::testing::testdata;

TEST(MultihopCorpus, LoadsRecordsWithStableIds) {
  const auto docs = load_multihop_corpus(testdata("multihop_corpus.json"));
  ASSERT_EQ(docs.size(), 4u);
  EXPECT_EQ(docs[0].title, "Orbital survey finds new moons");
  EXPECT_EQ(docs[0].source_meta.at("source"), "Space Daily");
  EXPECT_EQ(docs[0].source_meta.at("url"), "https://example.org/moons");
  EXPECT_FALSE(docs[2].source_meta.contains("author"));
  EXPECT_TRUE(docs[1].doc_id.starts_with("mh-000001-"));

  std::set<std::string> ids;
  for (const auto& d : docs) ids.insert(d.doc_id);
  EXPECT_EQ(ids.size(), docs.size());

  const auto again = load_multihop_corpus(testdata("multihop_corpus.json"));
  for (std::size_t i = 0; i < docs.size(); ++i) EXPECT_EQ(docs[i].doc_id, again[i].doc_id);
}

TEST(MultihopCorpus, SameTitleAtDifferentPositionsGetsDistinctIds) {
  json recs = json::array({{{"title", "t"}, {"body", "one."}}, {{"title", "t"}, {"body", "two."}}});
  const auto docs = parse_multihop_corpus(recs);
  EXPECT_NE(docs[0].doc_id, docs[1].doc_id);
}

TEST(MultihopCorpus, MalformedRecordNamesItsIndex) {
  json recs = json::array({{{"title", "ok"}, {"body", "fine."}}, {{"title", "missing body"}}});
  try {
    parse_multihop_corpus(recs);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("record 1"), std::string::npos) << e.what();
  }
}

TEST(MultihopCorpus, EmptyInputsAreErrors) {
  EXPECT_THROW(parse_multihop_corpus(json::array()), DataError);
  EXPECT_THROW(parse_multihop_corpus(json::array({{{"title", "x"}, {"body", "   "}}})), DataError);
  const auto dir = qdrag::testing::scratch_dir();
  std::ofstream(dir / "empty.json") << "";
  EXPECT_THROW(load_multihop_corpus(dir / "empty.json"), DataError);
  EXPECT_THROW(load_multihop_corpus(dir / "absent.json"), DataError);
}

TEST(MultihopQueries, ParsesEvidenceAndAnswers) {
  const auto qs = load_multihop_queries(testdata("multihop_queries.json"));
  ASSERT_EQ(qs.size(), 3u);
  EXPECT_EQ(qs[0].query_id, "mhq-000000");
  EXPECT_EQ(qs[0].gold_answer, "Saturn");
  EXPECT_EQ(qs[0].question_type, "comparison_query");
  ASSERT_EQ(qs[0].gold_evidence.size(), 2u);
  EXPECT_EQ(qs[0].gold_evidence[1].fact, "Saturn has 146 moons");
  EXPECT_FALSE(qs[0].gold_evidence[1].sentence_index.has_value());
  EXPECT_TRUE(qs[2].gold_evidence.empty());
}

TEST(HotpotSplit, LoadsContextAndSupportingFacts) {
  const HotpotSplit split = load_hotpotqa_split(testdata("hotpot_sample.json"));
  ASSERT_EQ(split.examples.size(), 2u);
  const QAExample& ex = split.examples[0];
  EXPECT_EQ(ex.query_id, "5a8b57f25542995d1e6f1371");
  EXPECT_EQ(ex.local_context.size(), 4u);
  EXPECT_EQ(ex.local_context[1].doc_id, "wiki:Scott Derrickson");
  EXPECT_EQ(ex.local_context[1].sentences.size(), 2u);
  ASSERT_EQ(ex.gold_evidence.size(), 2u);
  EXPECT_EQ(ex.gold_evidence[0].title, "Scott Derrickson");
  EXPECT_EQ(ex.gold_evidence[0].sentence_index, 0);
}

TEST(HotpotSplit, OutOfRangeSupportingFactIsDroppedWithWarning) {
  const HotpotSplit split = load_hotpotqa_split(testdata("hotpot_sample.json"));
  // ("Meet Corliss Archer", 7) points past a two-sentence paragraph.
  const QAExample& ex = split.examples[1];
  EXPECT_EQ(ex.gold_evidence.size(), 3u);
  ASSERT_EQ(split.warnings.size(), 1u);
  EXPECT_NE(split.warnings[0].find("Meet Corliss Archer"), std::string::npos);
  EXPECT_NE(split.warnings[0].find("record 1"), std::string::npos);
}

TEST(HotpotSplit, UnknownTitleIsDroppedWithWarning) {
  json recs = json::array({{{"_id", "x"},
                            {"question", "q?"},
                            {"answer", "a"},
                            {"supporting_facts", json::array({json::array({"Nope", 0})})},
                            {"context", json::array({json::array({"T", json::array({"s."})})})}}});
  const HotpotSplit split = parse_hotpotqa_split(recs);
  EXPECT_TRUE(split.examples[0].gold_evidence.empty());
  EXPECT_EQ(split.warnings.size(), 1u);
}

TEST(HotpotSplit, MalformedContextIsAnError) {
  json recs = json::array({{{"_id", "x"}, {"question", "q?"}, {"context", "not an array"}}});
  EXPECT_THROW(parse_hotpotqa_split(recs), DataError);
}

TEST(Sentences, SplitsOnTerminalPunctuation) {
  EXPECT_EQ(split_sentences("One. Two! Three? Four"),
            (std::vector<std::string>{"One.", "Two!", "Three?", "Four"}));
  EXPECT_EQ(split_sentences("He said \"go.\" Then left."),
            (std::vector<std::string>{"He said \"go.\"", "Then left."}));
  EXPECT_EQ(split_sentences("Version 3.14 shipped."), (std::vector<std::string>{"Version 3.14 shipped."}));
  EXPECT_TRUE(split_sentences("   ").empty());
}

TEST(ChunkPolicy, WindowMustExceedOverlap) {
  EXPECT_THROW(ChunkPolicy::fixed_window(4, 4), ConfigError);
  EXPECT_THROW(ChunkPolicy::fixed_window(0, 0), ConfigError);
  EXPECT_NO_THROW(ChunkPolicy::fixed_window(4, 3));
}

TEST(Chunking, FixedWindowCoversEveryTokenWithDenseOrdinals) {
  SourceDocument doc{"d", "Title", "a b c d e f g h i j", {}, {}};
  const auto chunks = chunk_document(doc, ChunkPolicy::fixed_window(4, 1));
  ASSERT_EQ(chunks.size(), 3u);
  EXPECT_EQ(chunks[0].text, "a b c d");
  EXPECT_EQ(chunks[1].text, "d e f g");
  EXPECT_EQ(chunks[2].text, "g h i j");
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    EXPECT_EQ(chunks[i].ordinal, i);
    EXPECT_EQ(chunks[i].title, "Title");
    EXPECT_EQ(chunks[i].doc_id, "d");
  }
  EXPECT_EQ(chunk_document(doc, ChunkPolicy::fixed_window(256)).size(), 1u);
}

TEST(Chunking, SentencePolicyKeepsHotpotIndices) {
  const HotpotSplit split = load_hotpotqa_split(testdata("hotpot_sample.json"));
  const SourceDocument& archer = split.examples[1].local_context[2];
  const auto chunks = chunk_document(archer, ChunkPolicy::sentence_per_chunk());
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(chunks[1].ordinal, 1u);
  EXPECT_FALSE(chunks[1].text.empty());  // empty sentence gets a placeholder
}

TEST(Chunking, CorpusChunkIdsAreUnique) {
  const auto docs = load_multihop_corpus(testdata("multihop_corpus.json"));
  const auto chunks = chunk_corpus(docs, ChunkPolicy::fixed_window(8, 2));
  std::set<std::string> ids;
  std::set<std::pair<std::string, std::size_t>> keys;
  for (const Chunk& c : chunks) {
    ids.insert(c.chunk_id);
    keys.emplace(c.doc_id, c.ordinal);
    EXPECT_FALSE(c.text.empty());
  }
  EXPECT_EQ(ids.size(), chunks.size());
  EXPECT_EQ(keys.size(), chunks.size());
}

TEST(EncoderText, PrefixesTitle) {
  EXPECT_EQ(encoder_text(qdrag::testing::make_chunk("c", "T", "body")), "T\nbody");
}

TEST(GoldResolution, MultihopFactsMapToContainingChunks) {
  const auto docs = load_multihop_corpus(testdata("multihop_corpus.json"));
  const auto qs = load_multihop_queries(testdata("multihop_queries.json"));
  const auto chunks = chunk_corpus(docs, ChunkPolicy::sentence_per_chunk());
  const GoldResolution g = resolve_gold_chunks(qs[0], chunks);
  ASSERT_EQ(g.chunk_ids.size(), 2u);
  EXPECT_FALSE(g.unresolvable);
  EXPECT_EQ(g.chunk_ids[0], docs[0].doc_id + "#0");
  EXPECT_EQ(g.chunk_ids[1], docs[1].doc_id + "#0");

  const GoldResolution none = resolve_gold_chunks(qs[2], chunks);
  EXPECT_TRUE(none.unresolvable);
}

TEST(GoldResolution, UnmatchedEvidenceWarnsAndMayBeUnresolvable) {
  const auto docs = load_multihop_corpus(testdata("multihop_corpus.json"));
  const auto chunks = chunk_corpus(docs, ChunkPolicy::fixed_window(256));
  QAExample ex;
  ex.query_id = "q";
  ex.gold_evidence = {{"Orbital survey finds new moons", "a sentence that is not there", {}}};
  const GoldResolution g = resolve_gold_chunks(ex, chunks);
  EXPECT_TRUE(g.unresolvable);
  EXPECT_EQ(g.warnings.size(), 1u);
}

TEST(GoldResolution, HotpotPairsMapToSentenceChunks) {
  const HotpotSplit split = load_hotpotqa_split(testdata("hotpot_sample.json"));
  const QAExample& ex = split.examples[1];
  const auto chunks = chunk_corpus(ex.local_context, ChunkPolicy::sentence_per_chunk());
  const GoldResolution g = resolve_gold_chunks(ex, chunks);
  EXPECT_EQ(g.chunk_ids, (std::vector<std::string>{"wiki:Kiss and Tell (1945 film)#0",
                                                   "wiki:Shirley Temple#0",
                                                   "wiki:Shirley Temple#1"}));
}

TEST(ChunkManifest, RoundTrips) {
  const auto docs = load_multihop_corpus(testdata("multihop_corpus.json"));
  const auto chunks = chunk_corpus(docs, ChunkPolicy::fixed_window(5, 1));
  const auto path = qdrag::testing::scratch_dir() / "chunks.jsonl";
  write_chunk_manifest(path, chunks);
  EXPECT_EQ(read_chunk_manifest(path), chunks);
}
