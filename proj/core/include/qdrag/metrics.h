#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qdrag {

struct RankedResult {
  std::string query_id;
  std::vector<std::string> ranked;  // most relevant first, no duplicates
  std::set<std::string> gold;
};

// (paragraph title, sentence index)
using SupportingFact = std::pair<std::string, int>;

struct AnswerJudgment {
  std::string query_id;
  std::string predicted;
  std::string gold;
  std::set<SupportingFact> predicted_sp;
  std::set<SupportingFact> gold_sp;
};

struct PrfScores {
  double em = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

// 1 iff a gold item occurs in ranked[0, k).
int hits_at_k(const RankedResult& r, std::size_t k);

// Truncated average precision: the sum of precision@i over gold hits at rank
// i <= 10, divided by min(|gold|, 10). 0 for an empty gold set.
double map_at_10(const RankedResult& r);

// 1 / rank of the first gold item within the top 10, else 0.
double mrr_at_10(const RankedResult& r);

// SQuAD-style normalization: lowercase, drop ASCII punctuation, drop the
// articles a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view s);

// Answer EM and bag-of-tokens precision/recall/F1 over normalized tokens.
// Both sides empty scores 1 everywhere; exactly one side empty scores 0.
PrfScores answer_scores(const AnswerJudgment& j);

// Set-overlap scores over supporting facts.
PrfScores sp_scores(const AnswerJudgment& j);

// Per-example products of answer and supporting-fact precision, recall and EM;
// F1 is the harmonic mean of the joint precision and recall.
PrfScores joint_scores(const PrfScores& ans, const PrfScores& sp);

struct Correlation {
  double coefficient = 0.0;
  double p_value = 1.0;
  bool defined = false;  // false when either series has zero variance or n < 3
};

// Product-moment correlation with a two-sided p-value from Student's t on n-2 dof.
Correlation pearson(std::span<const double> xs, std::span<const double> ys);
// Pearson on average ranks (ties share the mean of their positions).
Correlation spearman(std::span<const double> xs, std::span<const double> ys);

std::vector<double> average_ranks(std::span<const double> xs);

// Named per-example values in insertion order, averaged with a fixed summation order.
class MetricAccumulator {
 public:
  void add(const std::string& metric, double value);
  double mean(const std::string& metric) const;
  std::size_t count(const std::string& metric) const;
  std::vector<std::string> names() const { return order_; }

 private:
  std::map<std::string, std::vector<double>> values_;
  std::vector<std::string> order_;
};

// Per-variant metric table: variant -> metric -> mean, plus scored/skipped counts.
struct MetricTable {
  std::map<std::string, std::map<std::string, double>> values;
  std::map<std::string, std::size_t> scored;
  std::map<std::string, std::size_t> skipped;
};

}  // namespace qdrag
