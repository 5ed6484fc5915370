// qdrag: build indexes, run retrieval variants, recompute reports, emit the synthetic suite.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "qdrag/error.h"
#include "qdrag/harness.h"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> dataset;
  std::optional<std::string> variant;
  std::optional<std::size_t> k;
  std::optional<std::size_t> limit;
  std::optional<std::uint64_t> seed;
  bool mock = false;
  std::optional<std::string> out;
  bool trace = false;
  std::optional<std::size_t> workers;
  bool global_index = false;
  std::optional<std::string> corpus;
  std::optional<std::string> queries;
  std::optional<std::string> index_dir;
  std::optional<std::string> cache;
  std::optional<bool> generate;
  std::optional<std::string> clock;
  std::optional<std::size_t> entities;
  std::optional<std::size_t> n_queries;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "JSON run configuration");
  app->add_option("--dataset", o.dataset, "multihop_rag, hotpotqa or synthetic");
  app->add_option("--variant", o.variant, "naive, qd, rr, qd_rr, a comma list, or all");
  app->add_option("--k", o.k, "passages kept per query")->check(CLI::PositiveNumber);
  app->add_option("--limit", o.limit, "first N examples in file order")->check(CLI::PositiveNumber);
  app->add_option("--seed", o.seed, "seed for mocks and the synthetic suite");
  app->add_flag("--mock", o.mock, "use offline mock providers for every role");
  app->add_option("--out", o.out, "output directory");
  app->add_flag("--trace", o.trace, "archive provider requests and responses");
  app->add_option("--workers", o.workers, "parallel query workers")->check(CLI::PositiveNumber);
  app->add_flag("--global-index", o.global_index, "HotpotQA: one index over all paragraphs");
  app->add_option("--corpus", o.corpus, "MultiHop-RAG corpus file");
  app->add_option("--queries", o.queries, "MultiHop-RAG queries file or HotpotQA split");
  app->add_option("--index-dir", o.index_dir, "persisted index from `qdrag index`");
  app->add_option("--cache", o.cache, "sub-query cache (JSON lines)");
  app->add_option("--generate", o.generate, "run answer generation (true/false)");
  app->add_option("--clock", o.clock, "auto, virtual or steady");
  app->add_option("--entities", o.entities, "synthetic suite: number of entities");
  app->add_option("--synthetic-queries", o.n_queries, "synthetic suite: number of questions");
}

qdrag::RunConfig resolve(const Overrides& o) {
  qdrag::RunConfig c;
  if (!o.config.empty()) c = qdrag::load_config_file(o.config, c);
  if (o.dataset) c.dataset = qdrag::parse_dataset(*o.dataset);
  if (o.variant) c.variants = qdrag::parse_variant_list(*o.variant);
  if (o.k) c.k = *o.k;
  if (o.limit) c.limit = *o.limit;
  if (o.seed) c.seed = *o.seed;
  if (o.mock) {
    c.embed.mock = true;
    c.rerank.mock = true;
    c.chat.mock = true;
  }
  if (o.out) c.out_dir = *o.out;
  if (o.trace) c.trace = true;
  if (o.workers) c.workers = *o.workers;
  if (o.global_index) c.global_index = true;
  if (o.corpus) c.corpus_path = *o.corpus;
  if (o.queries) c.queries_path = *o.queries;
  if (o.index_dir) c.index_dir = *o.index_dir;
  if (o.cache) c.cache_path = *o.cache;
  if (o.generate) c.generate = *o.generate;
  if (o.clock) c = qdrag::apply_config_json(c, {{"clock", *o.clock}});
  if (o.entities) c.synthetic_entities = *o.entities;
  if (o.n_queries) c.synthetic_queries = *o.n_queries;
  return c;
}

void write_setup_failure(const qdrag::RunConfig& c, const std::string& message) {
  std::error_code ec;
  std::filesystem::create_directories(c.out_dir, ec);
  if (ec) return;
  std::ofstream out(c.out_dir / "failures.json", std::ios::trunc);
  const nlohmann::json j = {
      {"count", 1},
      {"failures", {{{"query_id", nullptr}, {"variant", nullptr}, {"stage", "setup"},
                     {"error", message}}}}};
  out << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qdrag: question decomposition and reranking for multi-hop retrieval"};
  app.require_subcommand(1);
  app.fallthrough();
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "progress logging");

  Overrides o;
  CLI::App* index_cmd = app.add_subcommand("index", "build and persist the corpus index");
  CLI::App* run_cmd = app.add_subcommand("run", "execute variants over a dataset");
  CLI::App* report_cmd = app.add_subcommand("report", "recompute metrics from traces.jsonl");
  CLI::App* synth_cmd = app.add_subcommand("synth", "write the synthetic suite as corpus/queries files");
  for (CLI::App* sub : {index_cmd, run_cmd, synth_cmd}) add_common(sub, o);
  std::string traces_path;
  report_cmd->add_option("traces", traces_path, "traces.jsonl from a run")->required();
  report_cmd->add_option("--out", o.out, "output directory (default: next to the traces)");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::info : spdlog::level::warn);

  qdrag::RunConfig config;
  try {
    if (report_cmd->parsed()) {
      const std::filesystem::path dir =
          o.out ? std::filesystem::path(*o.out) : std::filesystem::path(traces_path).parent_path();
      const qdrag::EvalReport r = qdrag::report_from_traces(traces_path, dir.empty() ? "." : dir);
      std::cout << qdrag::render_text(r);
      return 0;
    }
    if (o.out) config.out_dir = *o.out;  // where a setup failure is reported
    config = resolve(o);
    if (index_cmd->parsed()) {
      const std::filesystem::path dir = o.out ? std::filesystem::path(*o.out) : config.out_dir;
      const std::size_t n = qdrag::build_and_save_index(config, dir);
      std::cout << "indexed " << n << " chunks into " << dir.string() << "\n";
      return 0;
    }
    if (synth_cmd->parsed()) {
      qdrag::write_synthetic_suite(config, config.out_dir);
      std::cout << "wrote corpus.json and queries.json to " << config.out_dir.string() << "\n";
      return 0;
    }
    const qdrag::RunResult result = qdrag::run_experiment(config);
    std::cout << qdrag::render_text(result.report);
    if (!result.failures.empty()) {
      std::cerr << result.failures.size() << " query failure(s); see "
                << (config.out_dir / "failures.json").string() << "\n";
    }
    return result.exit_code();
  } catch (const qdrag::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (run_cmd->parsed()) write_setup_failure(config, e.what());
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    if (run_cmd->parsed()) write_setup_failure(config, e.what());
    return 3;
  }
}
