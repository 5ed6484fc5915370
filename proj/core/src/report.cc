#include "qdrag/report.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "qdrag/pipeline.h"

namespace qdrag {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 5> kStages = {"decompose", "embed", "search", "rerank",
                                                     "generate"};

double stage_value(const StageTimings& t, std::string_view stage) {
  if (stage == "decompose") return t.decompose;
  if (stage == "embed") return t.embed;
  if (stage == "search") return t.search;
  if (stage == "rerank") return t.rerank;
  return t.generate;
}

void add_prf(std::map<std::string, double>& m, const std::string& prefix, const PrfScores& s) {
  m[prefix + "_em"] = s.em;
  m[prefix + "_f1"] = s.f1;
  m[prefix + "_precision"] = s.precision;
  m[prefix + "_recall"] = s.recall;
}

// Variant names in canonical order, then anything unrecognized alphabetically.
std::vector<std::string> variant_order(std::span<const TraceRecord> traces) {
  std::set<std::string> present;
  for (const TraceRecord& t : traces) present.insert(t.variant);
  std::vector<std::string> out;
  for (SystemVariant v : kAllVariants) {
    const std::string name(to_string(v));
    if (present.erase(name) > 0) out.push_back(name);
  }
  out.insert(out.end(), present.begin(), present.end());
  return out;
}

std::vector<TraceRecord> of_variant(std::span<const TraceRecord> traces, const std::string& v) {
  std::vector<TraceRecord> out;
  for (const TraceRecord& t : traces) {
    if (t.variant == v) out.push_back(t);
  }
  return out;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

std::string pad_right(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

json correlation_json(const Correlation& c) {
  if (!c.defined) return {{"defined", false}, {"coefficient", nullptr}, {"p_value", nullptr}};
  return {{"defined", true}, {"coefficient", c.coefficient}, {"p_value", c.p_value}};
}

std::string correlation_text(const Correlation& c) {
  if (!c.defined) return pad("undefined", 22);
  return pad(fmt("%.3f", c.coefficient) + " (p=" + fmt("%.3g", c.p_value) + ")", 22);
}

json histogram_json(const std::vector<std::pair<std::string, double>>& h) {
  json out = json::array();
  for (const auto& [bucket, pct] : h) out.push_back({{"bucket", bucket}, {"percent", pct}});
  return out;
}

}  // namespace

std::map<std::string, double> example_metrics(const TraceRecord& t) {
  std::map<std::string, double> m;
  if (!t.unresolvable && !t.gold_chunk_ids.empty()) {
    RankedResult r{t.query_id, t.final_ids, {t.gold_chunk_ids.begin(), t.gold_chunk_ids.end()}};
    m["hits@4"] = hits_at_k(r, 4);
    m["hits@10"] = hits_at_k(r, 10);
    m["map@10"] = map_at_10(r);
    m["mrr@10"] = mrr_at_10(r);
    std::size_t found = 0;
    for (const std::string& id : t.final_ids) found += r.gold.contains(id) ? 1 : 0;
    m["gold_recall"] = static_cast<double>(found) / static_cast<double>(r.gold.size());
  }
  if (t.answer_text && t.gold_answer) {
    AnswerJudgment j;
    j.query_id = t.query_id;
    j.predicted = *t.answer_text;
    j.gold = *t.gold_answer;
    j.predicted_sp = {t.predicted_sp.begin(), t.predicted_sp.end()};
    j.gold_sp = {t.gold_sp.begin(), t.gold_sp.end()};
    const PrfScores ans = answer_scores(j);
    add_prf(m, "answer", ans);
    if (!t.gold_sp.empty()) {
      const PrfScores sp = sp_scores(j);
      add_prf(m, "sp", sp);
      add_prf(m, "joint", joint_scores(ans, sp));
    }
  }
  return m;
}

SubqueryStats subquery_stats(std::span<const TraceRecord> traces) {
  SubqueryStats s;
  s.n = traces.size();
  std::vector<double> subs;
  std::vector<double> evidence;
  std::size_t max_subs = 0;
  for (const TraceRecord& t : traces) {
    subs.push_back(static_cast<double>(t.sub_queries.size()));
    evidence.push_back(static_cast<double>(t.gold_evidence_count));
    max_subs = std::max(max_subs, t.sub_queries.size());
  }
  const auto percent = [&](std::size_t count) {
    return s.n == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(s.n);
  };
  for (std::size_t b = 0; b <= max_subs; ++b) {
    const auto count = static_cast<std::size_t>(
        std::count_if(traces.begin(), traces.end(),
                      [&](const TraceRecord& t) { return t.sub_queries.size() == b; }));
    s.subquery_histogram.emplace_back(std::to_string(b), percent(count));
  }
  for (std::size_t b = 0; b <= 4; ++b) {
    const auto count = static_cast<std::size_t>(
        std::count_if(traces.begin(), traces.end(), [&](const TraceRecord& t) {
          return b == 4 ? t.gold_evidence_count >= 4 : t.gold_evidence_count == b;
        }));
    s.evidence_histogram.emplace_back(b == 4 ? ">=4" : std::to_string(b), percent(count));
  }
  s.pearson = pearson(subs, evidence);
  s.spearman = spearman(subs, evidence);
  return s;
}

TimingSummary timing_report(std::span<const TraceRecord> traces) {
  TimingSummary s;
  s.queries = traces.size();
  for (std::string_view stage : kStages) {
    StageSummary st;
    for (const TraceRecord& t : traces) st.total += stage_value(t.timing, stage);
    st.per_query = s.queries == 0 ? 0.0 : st.total / static_cast<double>(s.queries);
    s.stages[std::string(stage)] = st;
  }
  for (const TraceRecord& t : traces) s.total += t.timing.retrieval();
  s.per_query = s.queries == 0 ? 0.0 : s.total / static_cast<double>(s.queries);
  return s;
}

EvalReport build_report(std::span<const TraceRecord> traces, json config, std::string clock) {
  EvalReport r;
  r.config = std::move(config);
  r.clock = std::move(clock);
  for (const std::string& v : variant_order(traces)) {
    const std::vector<TraceRecord> rows = of_variant(traces, v);
    MetricAccumulator acc;
    std::size_t skipped = 0;
    std::map<std::string, std::size_t> warning_counts;
    for (const TraceRecord& t : rows) {
      for (const auto& [name, value] : example_metrics(t)) acc.add(name, value);
      if (t.unresolvable) ++skipped;
      for (const std::string& w : t.warnings) ++warning_counts[w];
    }
    for (const std::string& name : acc.names()) r.table.values[v][name] = acc.mean(name);
    r.table.scored[v] = acc.count("hits@10");
    r.table.skipped[v] = skipped;
    r.timing[v] = timing_report(rows);
    r.subqueries[v] = subquery_stats(rows);
    if (skipped > 0) {
      r.warnings.push_back(v + ": " + std::to_string(skipped) +
                           " example(s) with unresolvable gold evidence excluded from retrieval "
                           "metrics");
    }
    for (const auto& [w, n] : warning_counts) {
      r.warnings.push_back(v + ": " + w + " (x" + std::to_string(n) + ")");
    }
  }
  return r;
}

json to_json(const EvalReport& r) {
  json metrics = json::object();
  for (const auto& [v, row] : r.table.values) metrics[v] = row;
  json counts = json::object();
  for (const auto& [v, n] : r.table.scored) {
    counts[v] = {{"scored", n}, {"skipped", r.table.skipped.at(v)}};
  }
  json timing = json::object();
  for (const auto& [v, t] : r.timing) {
    json stages = json::object();
    for (const auto& [name, st] : t.stages) {
      stages[name] = {{"total_s", st.total}, {"per_query_s", st.per_query}};
    }
    timing[v] = {{"queries", t.queries},
                 {"total_s", t.total},
                 {"per_query_s", t.per_query},
                 {"stages", stages}};
  }
  json subq = json::object();
  for (const auto& [v, s] : r.subqueries) {
    subq[v] = {{"n", s.n},
               {"subqueries", histogram_json(s.subquery_histogram)},
               {"gold_evidences", histogram_json(s.evidence_histogram)},
               {"pearson", correlation_json(s.pearson)},
               {"spearman", correlation_json(s.spearman)}};
  }
  return {{"config", r.config},
          {"clock", r.clock},
          {"metrics", metrics},
          {"counts", counts},
          {"timing", timing},
          {"subquery_analysis", subq},
          {"provider_calls", r.provider_calls},
          {"warnings", r.warnings},
          {"failures", r.failures}};
}

std::string render_text(const EvalReport& r) {
  std::string out;
  const auto line = [&](const std::string& s) { out += s + "\n"; };
  const auto value = [&](const std::string& v, const std::string& metric, double scale,
                         const char* spec, std::size_t width) {
    auto row = r.table.values.find(v);
    if (row == r.table.values.end()) return pad("-", width);
    auto it = row->second.find(metric);
    return pad(it == row->second.end() ? "-" : fmt(spec, it->second * scale), width);
  };
  std::vector<std::string> variants;
  for (const auto& [v, t] : r.timing) variants.push_back(v);
  std::sort(variants.begin(), variants.end(), [](const std::string& a, const std::string& b) {
    const auto rank = [](const std::string& s) {
      for (std::size_t i = 0; i < kAllVariants.size(); ++i) {
        if (to_string(kAllVariants[i]) == s) return i;
      }
      return kAllVariants.size();
    };
    return rank(a) != rank(b) ? rank(a) < rank(b) : a < b;
  });

  line("dataset: " + r.config.value("dataset", std::string("?")) +
       "   k: " + r.config.value("k", json(0)).dump() + "   clock: " + r.clock);
  line("");
  line("Retrieval");
  line(pad_right("System", 10) + pad("Hits@4", 9) + pad("Hits@10", 9) + pad("MAP@10", 9) +
       pad("MRR@10", 9) + pad("Recall", 9) + pad("scored", 8));
  for (const std::string& v : variants) {
    line(pad_right(v, 10) + value(v, "hits@4", 1.0, "%.3f", 9) +
         value(v, "hits@10", 1.0, "%.3f", 9) + value(v, "map@10", 1.0, "%.3f", 9) +
         value(v, "mrr@10", 1.0, "%.3f", 9) + value(v, "gold_recall", 1.0, "%.3f", 9) +
         pad(std::to_string(r.table.scored.count(v) ? r.table.scored.at(v) : 0), 8));
  }

  bool any_answer = false;
  bool any_sp = false;
  for (const auto& [v, row] : r.table.values) {
    any_answer = any_answer || row.contains("answer_f1");
    any_sp = any_sp || row.contains("sp_f1");
  }
  if (any_answer) {
    for (const char* block : {"answer", "sp", "joint"}) {
      if (std::string_view(block) != "answer" && !any_sp) continue;
      line("");
      line(std::string(block == std::string_view("answer")  ? "Answer metrics (%)"
                       : block == std::string_view("sp")    ? "Supporting-fact metrics (%)"
                                                            : "Joint metrics (%)"));
      line(pad_right("System", 10) + pad("EM", 8) + pad("F1", 8) + pad("P", 8) + pad("R", 8));
      const std::string b(block);
      for (const std::string& v : variants) {
        line(pad_right(v, 10) + value(v, b + "_em", 100.0, "%.1f", 8) +
             value(v, b + "_f1", 100.0, "%.1f", 8) + value(v, b + "_precision", 100.0, "%.1f", 8) +
             value(v, b + "_recall", 100.0, "%.1f", 8));
      }
    }
  }

  std::vector<std::string> decomposed;
  for (const std::string& v : variants) {
    if (v == "qd" || v == "qd_rr") decomposed.push_back(v);
  }
  if (!decomposed.empty()) {
    line("");
    line("Gold evidences vs. sub-queries (% of queries)");
    for (const std::string& v : decomposed) {
      const SubqueryStats& s = r.subqueries.at(v);
      std::string ev = pad_right(v, 10) + "evidences:";
      for (const auto& [b, pct] : s.evidence_histogram) ev += " " + b + "=" + fmt("%.1f", pct);
      line(ev);
      std::string sq = pad_right("", 10) + "subqueries:";
      for (const auto& [b, pct] : s.subquery_histogram) sq += " " + b + "=" + fmt("%.1f", pct);
      line(sq);
    }
  }

  line("");
  line("Retrieval time (generation excluded)");
  line(pad_right("System", 10) + pad("Total (s)", 12) + pad("Per-query (s)", 15) +
       pad("decompose", 11) + pad("embed", 9) + pad("search", 9) + pad("rerank", 9) +
       pad("queries", 9));
  for (const std::string& v : variants) {
    const TimingSummary& t = r.timing.at(v);
    line(pad_right(v, 10) + pad(fmt("%.2f", t.total), 12) + pad(fmt("%.3f", t.per_query), 15) +
         pad(fmt("%.3f", t.stages.at("decompose").per_query), 11) +
         pad(fmt("%.3f", t.stages.at("embed").per_query), 9) +
         pad(fmt("%.4f", t.stages.at("search").per_query), 9) +
         pad(fmt("%.3f", t.stages.at("rerank").per_query), 9) + pad(std::to_string(t.queries), 9));
  }

  if (!decomposed.empty()) {
    line("");
    line("Correlation: sub-query count vs. gold-evidence count");
    line(pad_right("System", 10) + pad("Pearson r", 22) + pad("Spearman rho", 22));
    for (const std::string& v : decomposed) {
      const SubqueryStats& s = r.subqueries.at(v);
      line(pad_right(v, 10) + correlation_text(s.pearson) + correlation_text(s.spearman));
    }
  }

  if (!r.provider_calls.empty()) {
    line("");
    std::string calls = "provider calls:";
    for (const auto& [name, n] : r.provider_calls) calls += " " + name + "=" + std::to_string(n);
    line(calls);
  }
  if (r.failures > 0) {
    line("");
    line("FAILURES: " + std::to_string(r.failures) + " (see failures.json)");
  }
  if (!r.warnings.empty()) {
    line("");
    line("warnings:");
    for (const std::string& w : r.warnings) line("  " + w);
  }
  return out;
}

std::string metrics_jsonl(std::span<const TraceRecord> traces) {
  std::string out;
  for (const TraceRecord& t : traces) {
    json j = {{"query_id", t.query_id}, {"variant", t.variant}};
    for (const auto& [name, v] : example_metrics(t)) j[name] = v;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace qdrag
