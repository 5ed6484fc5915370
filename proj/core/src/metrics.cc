#include "qdrag/metrics.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "qdrag/error.h"
#include "qdrag/text.h"

namespace qdrag {
namespace {

constexpr std::size_t kCutoff = 10;

bool is_gold(const RankedResult& r, std::size_t rank) { return r.gold.contains(r.ranked[rank]); }

std::vector<std::string> answer_tokens(std::string_view s) {
  const std::string normalized = normalize_answer(s);
  std::vector<std::string> out;
  for (std::string_view tok : text::split_whitespace(normalized)) out.emplace_back(tok);
  return out;
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

Correlation undefined_correlation() {
  return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(),
          false};
}

}  // namespace

int hits_at_k(const RankedResult& r, std::size_t k) {
  const std::size_t limit = std::min(k, r.ranked.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (is_gold(r, i)) return 1;
  }
  return 0;
}

double map_at_10(const RankedResult& r) {
  if (r.gold.empty()) return 0.0;
  const std::size_t limit = std::min(kCutoff, r.ranked.size());
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < limit; ++i) {
    if (!is_gold(r, i)) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(std::min(r.gold.size(), kCutoff));
}

double mrr_at_10(const RankedResult& r) {
  const std::size_t limit = std::min(kCutoff, r.ranked.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (is_gold(r, i)) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

std::string normalize_answer(std::string_view s) {
  std::string stripped;
  stripped.reserve(s.size());
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::ispunct(u)) continue;
    stripped.push_back(static_cast<char>(u < 0x80 ? std::tolower(u) : u));
  }
  std::string out;
  for (std::string_view tok : text::split_whitespace(stripped)) {
    if (tok == "a" || tok == "an" || tok == "the") continue;
    if (!out.empty()) out.push_back(' ');
    out.append(tok);
  }
  return out;
}

PrfScores answer_scores(const AnswerJudgment& j) {
  const std::vector<std::string> pred = answer_tokens(j.predicted);
  const std::vector<std::string> gold = answer_tokens(j.gold);
  PrfScores s;
  s.em = normalize_answer(j.predicted) == normalize_answer(j.gold) ? 1.0 : 0.0;
  if (pred.empty() && gold.empty()) return {1.0, 1.0, 1.0, 1.0};
  if (pred.empty() || gold.empty()) return s;

  std::map<std::string_view, int> gold_counts;
  for (const std::string& t : gold) ++gold_counts[t];
  std::size_t common = 0;
  for (const std::string& t : pred) {
    auto it = gold_counts.find(t);
    if (it != gold_counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return s;
  s.precision = static_cast<double>(common) / static_cast<double>(pred.size());
  s.recall = static_cast<double>(common) / static_cast<double>(gold.size());
  s.f1 = harmonic(s.precision, s.recall);
  return s;
}

PrfScores sp_scores(const AnswerJudgment& j) {
  if (j.predicted_sp.empty() && j.gold_sp.empty()) return {1.0, 1.0, 1.0, 1.0};
  std::size_t tp = 0;
  for (const SupportingFact& f : j.predicted_sp) tp += j.gold_sp.contains(f) ? 1 : 0;
  PrfScores s;
  s.em = j.predicted_sp == j.gold_sp ? 1.0 : 0.0;
  s.precision = j.predicted_sp.empty()
                    ? 0.0
                    : static_cast<double>(tp) / static_cast<double>(j.predicted_sp.size());
  s.recall =
      j.gold_sp.empty() ? 0.0 : static_cast<double>(tp) / static_cast<double>(j.gold_sp.size());
  s.f1 = harmonic(s.precision, s.recall);
  return s;
}

PrfScores joint_scores(const PrfScores& ans, const PrfScores& sp) {
  PrfScores s;
  s.precision = ans.precision * sp.precision;
  s.recall = ans.recall * sp.recall;
  s.f1 = harmonic(s.precision, s.recall);
  s.em = ans.em * sp.em;
  return s;
}

Correlation pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DataError("correlation series differ in length");
  const std::size_t n = xs.size();
  if (n < 3) return undefined_correlation();
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return undefined_correlation();
  Correlation c;
  c.defined = true;
  c.coefficient = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double dof = static_cast<double>(n - 2);
  const double denom = 1.0 - c.coefficient * c.coefficient;
  if (denom <= 0.0) {
    c.p_value = 0.0;
    return c;
  }
  const double t = c.coefficient * std::sqrt(dof / denom);
  boost::math::students_t dist(dof);
  c.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
  return c;
}

std::vector<double> average_ranks(std::span<const double> xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    // Positions i..j (0-based) share rank mean((i+1)..(j+1)).
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

Correlation spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DataError("correlation series differ in length");
  const std::vector<double> rx = average_ranks(xs);
  const std::vector<double> ry = average_ranks(ys);
  return pearson(rx, ry);
}

void MetricAccumulator::add(const std::string& metric, double value) {
  auto [it, inserted] = values_.try_emplace(metric);
  if (inserted) order_.push_back(metric);
  it->second.push_back(value);
}

double MetricAccumulator::mean(const std::string& metric) const {
  auto it = values_.find(metric);
  if (it == values_.end() || it->second.empty()) return 0.0;
  double sum = 0.0;
  for (double v : it->second) sum += v;
  return sum / static_cast<double>(it->second.size());
}

std::size_t MetricAccumulator::count(const std::string& metric) const {
  auto it = values_.find(metric);
  return it == values_.end() ? 0 : it->second.size();
}

}  // namespace qdrag
