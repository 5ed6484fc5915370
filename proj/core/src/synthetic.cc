#include "qdrag/synthetic.h"

#include <algorithm>
#include <array>
#include <cstdio>
#include <random>
#include <set>

#include "qdrag/error.h"

namespace qdrag {
namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 6> kAttributes = {"moons",   "rings",  "craters",
                                                         "volcanoes", "rivers", "glaciers"};
constexpr std::array<std::string_view, 16> kSyllables = {"zor", "vel", "qua", "mir", "tan", "oph",
                                                         "lex", "dra", "kin", "sul", "bre", "ny",
                                                         "gat", "rho", "ven", "ix"};
constexpr std::array<std::string_view, 40> kFiller = {
    "report",  "analysis", "survey",   "overview", "summary",   "records", "archive",
    "catalog", "study",    "notes",    "table",    "figures",   "counts",  "values",
    "editors", "compiled", "sources",  "updated",  "revision",  "index",   "section",
    "chapter", "appendix", "measured", "observed", "estimates", "review",  "listing",
    "entries", "reference", "volume",  "series",   "collection", "digest", "bulletin",
    "registry", "ledger",  "journal",  "almanac",  "compendium"};

constexpr int kQuestionRepeats = 5;
constexpr std::size_t kFillerTokens = 60;

std::size_t draw(std::mt19937_64& rng, std::size_t n) { return static_cast<std::size_t>(rng() % n); }

std::string make_name(std::mt19937_64& rng) {
  std::string name;
  const std::size_t parts = 2 + draw(rng, 2);
  for (std::size_t i = 0; i < parts; ++i) name += kSyllables[draw(rng, kSyllables.size())];
  name[0] = static_cast<char>(name[0] - 'a' + 'A');
  return name;
}

std::string fact_sentence(const std::string& entity, std::string_view attribute, int value) {
  return entity + " has " + std::to_string(value) + " " + std::string(attribute);
}

std::string comparison_question(const std::vector<std::string>& names, std::string_view attr) {
  if (names.size() == 2) {
    return "Which has more " + std::string(attr) + ", " + names[0] + " or " + names[1] + "?";
  }
  std::string q = "Which has the most " + std::string(attr) + ", ";
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i + 1 == names.size()) q += "or ";
    q += names[i];
    q += i + 1 == names.size() ? "?" : ", ";
  }
  return q;
}

}  // namespace

SyntheticSuite make_synthetic_multihop(std::size_t n_entities, std::size_t n_queries,
                                       std::uint64_t seed) {
  if (n_entities < 2) throw ConfigError("synthetic suite needs at least 2 entities");
  std::mt19937_64 rng(seed);

  std::vector<std::string> names;
  std::set<std::string> used;
  while (names.size() < n_entities) {
    std::string n = make_name(rng);
    if (used.insert(n).second) names.push_back(std::move(n));
  }
  std::vector<std::array<int, kAttributes.size()>> values(n_entities);
  for (auto& row : values) {
    for (int& v : row) v = 1 + static_cast<int>(draw(rng, 999));
  }

  json corpus = json::array();
  for (std::size_t e = 0; e < n_entities; ++e) {
    std::string body;
    for (std::size_t a = 0; a < kAttributes.size(); ++a) {
      if (!body.empty()) body += " ";
      body += fact_sentence(names[e], kAttributes[a], values[e][a]) + ".";
    }
    corpus.push_back({{"title", names[e]},
                      {"body", body},
                      {"source", "synthetic"},
                      {"category", "entity"}});
  }

  json queries = json::array();
  std::size_t made = 0;
  while (made < n_queries) {
    const std::size_t arity = n_entities >= 3 && draw(rng, 3) == 0 ? 3 : 2;
    std::vector<std::size_t> picked;
    while (picked.size() < arity) {
      std::size_t e = draw(rng, n_entities);
      if (std::find(picked.begin(), picked.end(), e) == picked.end()) picked.push_back(e);
    }
    const std::size_t attr = draw(rng, kAttributes.size());
    std::set<int> distinct;
    for (std::size_t e : picked) distinct.insert(values[e][attr]);
    if (distinct.size() != picked.size()) continue;  // the answer must be unique

    std::vector<std::string> picked_names;
    std::size_t best = picked.front();
    for (std::size_t e : picked) {
      picked_names.push_back(names[e]);
      if (values[e][attr] > values[best][attr]) best = e;
    }
    const std::string question = comparison_question(picked_names, kAttributes[attr]);

    json evidence = json::array();
    json subs = json::array();
    for (std::size_t e : picked) {
      evidence.push_back({{"title", names[e]},
                          {"fact", fact_sentence(names[e], kAttributes[attr], values[e][attr])}});
      subs.push_back("How many " + std::string(kAttributes[attr]) + " does " + names[e] + " have?");
    }
    queries.push_back({{"query", question},
                       {"answer", names[best]},
                       {"question_type", "comparison_query"},
                       {"evidence_list", std::move(evidence)},
                       {"subqueries", std::move(subs)}});

    std::string notes;
    for (int r = 0; r < kQuestionRepeats; ++r) notes += question + " ";
    for (std::size_t f = 0; f < kFillerTokens; ++f) {
      notes += kFiller[draw(rng, kFiller.size())];
      notes += f + 1 == kFillerTokens ? "." : " ";
    }
    char title[48];
    std::snprintf(title, sizeof(title), "Comparison notes %zu", made);
    corpus.push_back({{"title", title},
                      {"body", notes},
                      {"source", "synthetic"},
                      {"category", "notes"}});
    ++made;
  }

  SyntheticSuite suite;
  suite.documents = parse_multihop_corpus(corpus);
  suite.examples = parse_multihop_queries(queries);
  suite.corpus_json = std::move(corpus);
  suite.queries_json = std::move(queries);
  return suite;
}

}  // namespace qdrag
