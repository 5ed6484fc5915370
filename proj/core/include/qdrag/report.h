#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "qdrag/metrics.h"
#include "qdrag/trace.h"

namespace qdrag {

// Per-example metric values for one trace, keyed by metric name. Retrieval
// metrics are absent for examples whose gold evidence could not be resolved;
// answer metrics need an answer and a gold answer; supporting-fact and joint
// metrics also need supporting-fact annotations.
std::map<std::string, double> example_metrics(const TraceRecord& t);

struct SubqueryStats {
  std::size_t n = 0;
  // (bucket label, percentage of examples) in bucket order; each sums to 100 when n > 0.
  std::vector<std::pair<std::string, double>> subquery_histogram;
  std::vector<std::pair<std::string, double>> evidence_histogram;
  Correlation pearson;
  Correlation spearman;
};

// Sub-query count against gold-evidence count. Evidence buckets are 0, 1, 2, 3, >=4.
SubqueryStats subquery_stats(std::span<const TraceRecord> traces);

struct StageSummary {
  double total = 0.0;
  double per_query = 0.0;
};

struct TimingSummary {
  std::size_t queries = 0;
  double total = 0.0;      // retrieval only: decompose + embed + search + rerank
  double per_query = 0.0;
  std::map<std::string, StageSummary> stages;  // includes "generate" for reference
};

TimingSummary timing_report(std::span<const TraceRecord> traces);

struct EvalReport {
  nlohmann::json config;
  std::string clock;  // "virtual" or "steady"
  MetricTable table;
  std::map<std::string, TimingSummary> timing;
  std::map<std::string, SubqueryStats> subqueries;
  std::map<std::string, std::size_t> provider_calls;
  std::vector<std::string> warnings;
  std::size_t failures = 0;
};

// Aggregates traces (any mix of variants) into a report. Variant rows keep the
// canonical naive, qd, rr, qd_rr order.
EvalReport build_report(std::span<const TraceRecord> traces, nlohmann::json config,
                        std::string clock);

nlohmann::json to_json(const EvalReport& r);
// Plain-text tables shaped like the retrieval, answer, distribution, timing and
// correlation tables.
std::string render_text(const EvalReport& r);

// One JSON line per (variant, example): {"query_id", "variant", metrics...}.
std::string metrics_jsonl(std::span<const TraceRecord> traces);

}  // namespace qdrag
