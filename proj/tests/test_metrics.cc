#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "oracles.h"
#include "qdrag/error.h"
#include "qdrag/metrics.h"
#include "qdrag/text.h"

using namespace qdrag;

namespace {

RankedResult ranked(std::vector<std::string> ids, std::set<std::string> gold) {
  return RankedResult{"q", std::move(ids), std::move(gold)};
}

std::vector<std::string> tokens(const std::string& s) {
  const std::string normalized = normalize_answer(s);
  std::vector<std::string> out;
  for (std::string_view t : text::split_whitespace(normalized)) out.emplace_back(t);
  return out;
}

}  // namespace

TEST(RankMetrics, HandComputedCases) {
  const auto r = ranked({"x", "g1", "y", "g2", "z"}, {"g1", "g2", "g3"});
  EXPECT_EQ(hits_at_k(r, 1), 0);
  EXPECT_EQ(hits_at_k(r, 2), 1);
  EXPECT_DOUBLE_EQ(mrr_at_10(r), 0.5);
  // (1/2 + 2/4) / 3
  EXPECT_DOUBLE_EQ(map_at_10(r), 1.0 / 3.0);

  const auto none = ranked({"a", "b"}, {"g"});
  EXPECT_EQ(hits_at_k(none, 10), 0);
  EXPECT_EQ(mrr_at_10(none), 0.0);
  EXPECT_EQ(map_at_10(none), 0.0);
  EXPECT_EQ(map_at_10(ranked({"a"}, {})), 0.0);
}

TEST(RankMetrics, IgnoreRanksBeyondTen) {
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) ids.push_back("n" + std::to_string(i));
  ids.push_back("g");
  const auto r = ranked(ids, {"g"});
  EXPECT_EQ(hits_at_k(r, 10), 0);
  EXPECT_EQ(hits_at_k(r, 11), 1);
  EXPECT_EQ(mrr_at_10(r), 0.0);
  EXPECT_EQ(map_at_10(r), 0.0);
}

TEST(RankMetrics, AgreeWithOracleOnRandomRankings) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t universe = 5 + rng() % 30;
    std::vector<std::string> all;
    for (std::size_t i = 0; i < universe; ++i) all.push_back("c" + std::to_string(i));
    std::shuffle(all.begin(), all.end(), rng);
    const std::size_t len = rng() % (universe + 1);
    std::vector<std::string> ids(all.begin(), all.begin() + static_cast<long>(len));
    std::set<std::string> gold;
    const std::size_t n_gold = rng() % 14;
    for (std::size_t i = 0; i < n_gold; ++i) gold.insert(all[rng() % universe]);
    const auto r = ranked(ids, gold);
    for (std::size_t k : {1u, 4u, 10u}) ASSERT_EQ(hits_at_k(r, k), oracle::hits(ids, gold, k));
    ASSERT_NEAR(mrr_at_10(r), oracle::mrr10(ids, gold), 1e-12);
    ASSERT_NEAR(map_at_10(r), oracle::map10(ids, gold), 1e-12);
    ASSERT_GE(map_at_10(r), 0.0);
    ASSERT_LE(map_at_10(r), 1.0);
  }
}

TEST(AnswerNormalization, DropsCasePunctuationAndArticles) {
  EXPECT_EQ(normalize_answer("The Eiffel Tower."), "eiffel tower");
  EXPECT_EQ(normalize_answer("  An   apple, a day "), "apple day");
  // Non-ASCII bytes pass through untouched.
  EXPECT_EQ(normalize_answer("Théâtre!"), "théâtre");
}

TEST(AnswerScores, FixtureValues) {
  const PrfScores partial = answer_scores({"q", "Vincent van Gogh", "van Gogh", {}, {}});
  EXPECT_EQ(partial.em, 0.0);
  EXPECT_NEAR(partial.precision, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(partial.recall, 1.0, 1e-12);
  EXPECT_NEAR(partial.f1, 0.8, 1e-12);

  const PrfScores exact = answer_scores({"q", "The Eiffel Tower.", "eiffel tower", {}, {}});
  EXPECT_EQ(exact.em, 1.0);
  EXPECT_EQ(exact.f1, 1.0);

  const PrfScores miss = answer_scores({"q", "Paris", "London", {}, {}});
  EXPECT_EQ(miss.f1, 0.0);
  EXPECT_EQ(answer_scores({"q", "the", "", {}, {}}).em, 1.0);
  EXPECT_EQ(answer_scores({"q", "", "x", {}, {}}).f1, 0.0);
}

TEST(AnswerScores, AgreeWithMultisetOracle) {
  const std::vector<std::string> vocab = {"red", "blue", "the", "green", "a", "Blue,", "red."};
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    std::string pred, gold;
    for (std::size_t i = 0, n = rng() % 6; i < n; ++i) pred += vocab[rng() % vocab.size()] + " ";
    for (std::size_t i = 0, n = rng() % 6; i < n; ++i) gold += vocab[rng() % vocab.size()] + " ";
    const PrfScores s = answer_scores({"q", pred, gold, {}, {}});
    const oracle::Prf o = oracle::multiset_overlap(tokens(pred), tokens(gold));
    ASSERT_NEAR(s.precision, o.p, 1e-12) << pred << " | " << gold;
    ASSERT_NEAR(s.recall, o.r, 1e-12);
    ASSERT_NEAR(s.f1, o.f1, 1e-12);
  }
}

TEST(SupportingFacts, SetOverlapAndJoint) {
  AnswerJudgment j;
  j.predicted = "Vincent van Gogh";
  j.gold = "van Gogh";
  j.predicted_sp = {{"A", 0}, {"B", 1}, {"C", 0}};
  j.gold_sp = {{"A", 0}, {"B", 1}};
  const PrfScores sp = sp_scores(j);
  EXPECT_EQ(sp.em, 0.0);
  EXPECT_NEAR(sp.precision, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(sp.recall, 1.0);

  const PrfScores ans = answer_scores(j);
  const PrfScores joint = joint_scores(ans, sp);
  EXPECT_NEAR(joint.precision, ans.precision * sp.precision, 1e-12);
  EXPECT_NEAR(joint.recall, ans.recall * sp.recall, 1e-12);
  const double p = 4.0 / 9.0;
  EXPECT_NEAR(joint.f1, 2 * p * 1.0 / (p + 1.0), 1e-12);
  EXPECT_EQ(joint.em, 0.0);

  j.predicted_sp = j.gold_sp;
  EXPECT_EQ(sp_scores(j).em, 1.0);
  j.predicted_sp.clear();
  EXPECT_EQ(sp_scores(j).f1, 0.0);
}

TEST(Correlation, PerfectLinearRelation) {
  const std::vector<double> x = {1, 2, 3};
  const std::vector<double> y = {2, 4, 6};
  const Correlation c = pearson(x, y);
  EXPECT_TRUE(c.defined);
  EXPECT_EQ(c.coefficient, 1.0);
  EXPECT_EQ(c.p_value, 0.0);
  EXPECT_EQ(spearman(x, y).coefficient, 1.0);
  const std::vector<double> neg = {3, 2, 1};
  EXPECT_EQ(pearson(x, neg).coefficient, -1.0);
}

TEST(Correlation, UndefinedCases) {
  const std::vector<double> flat = {2, 2, 2, 2};
  const std::vector<double> y = {1, 2, 3, 4};
  EXPECT_FALSE(pearson(flat, y).defined);
  EXPECT_FALSE(spearman(y, flat).defined);
  const std::vector<double> two = {1, 2};
  EXPECT_FALSE(pearson(two, two).defined);
  const std::vector<double> three = {1, 2, 3};
  EXPECT_THROW(pearson(three, y), DataError);
}

TEST(Correlation, AgreesWithOracles) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + rng() % 60;
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = g(rng);
      y[i] = 0.5 * x[i] + g(rng);
    }
    const Correlation c = pearson(x, y);
    ASSERT_TRUE(c.defined);
    ASSERT_NEAR(c.coefficient, oracle::pearson(x, y), 1e-9);
    ASSERT_NEAR(c.p_value, oracle::pearson_p(c.coefficient, n), 1e-9);
    ASSERT_NEAR(spearman(x, y).coefficient, oracle::spearman_no_ties(x, y), 1e-9);
  }
}

TEST(Correlation, TiesShareAverageRanks) {
  const std::vector<double> x = {10, 20, 20, 30};
  EXPECT_EQ(average_ranks(x), (std::vector<double>{1, 2.5, 2.5, 4}));
  // Small-integer counts as in the sub-query analysis: spearman equals pearson of ranks.
  const std::vector<double> subs = {2, 2, 3, 3, 3, 4};
  const std::vector<double> evid = {2, 3, 3, 3, 4, 4};
  const Correlation s = spearman(subs, evid);
  EXPECT_NEAR(s.coefficient,
              oracle::pearson(average_ranks(subs), average_ranks(evid)), 1e-12);
}

TEST(MetricAccumulator, MeansAndCounts) {
  MetricAccumulator acc;
  acc.add("b", 1.0);
  acc.add("a", 0.0);
  acc.add("b", 0.0);
  EXPECT_EQ(acc.names(), (std::vector<std::string>{"b", "a"}));
  EXPECT_EQ(acc.mean("b"), 0.5);
  EXPECT_EQ(acc.count("b"), 2u);
  EXPECT_EQ(acc.mean("missing"), 0.0);
}
