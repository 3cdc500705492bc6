#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "curio/action.hpp"
#include "curio/appcards.hpp"
#include "curio/errors.hpp"
#include "curio/gate.hpp"
#include "curio/retrieval.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using curio::Action;
using curio::AppAccumulator;
using curio::AppCard;
using curio::GateConfig;
using curio::KnowledgeUnit;
using curio::RetrievalQuery;
using curio::SourceKind;

namespace {

std::filesystem::path corpus(const std::string& part) {
  return std::filesystem::path(CURIO_FIXTURE_DIR) / "corpus" / part;
}

RetrievalQuery query_for(const std::string& app, std::vector<std::string> focus,
                         int max_units = curio::kDefaultMaxUnits) {
  RetrievalQuery query;
  query.app_id = app;
  query.u_value = 2.0;
  query.tau = 1.0;
  query.focus_terms = std::move(focus);
  query.max_units = max_units;
  return query;
}

AppAccumulator fired_accumulator(const std::string& app, const GateConfig& config) {
  AppAccumulator acc = curio::make_accumulator(app);
  acc = curio::record(acc, config.tau + 0.5, config);
  return acc;
}

class FailingClient : public curio::SourceClient {
 public:
  SourceKind kind() const override { return SourceKind::web_docs; }
  std::vector<KnowledgeUnit> fetch(const RetrievalQuery&) const override {
    curio::raise(curio::Errc::source_unavailable, "injected failure");
  }
};

class WrongKindClient : public curio::SourceClient {
 public:
  SourceKind kind() const override { return SourceKind::git_history; }
  std::vector<KnowledgeUnit> fetch(const RetrievalQuery& query) const override {
    KnowledgeUnit unit;
    unit.source_kind = SourceKind::web_docs;  // lies about its kind
    unit.locator = "bogus";
    unit.excerpt = query.app_id;
    unit.relevance = 1.0;
    return {unit};
  }
};

}  // namespace

TEST_CASE("build_query takes top contributions then action names") {
  GateConfig config;
  config.tau = 0.4;
  config.decay_base = 1.0;
  const AppAccumulator acc = fired_accumulator("markor", config);

  curio::InfoGainReport report;
  report.contributions = {{"save", 0.3}, {"note", 0.1}, {curio::kOtherToken, 0.05}};
  const std::vector<Action> actions = {Action::tap_by_text("Save")};

  const RetrievalQuery query = curio::build_query(acc, config, report, actions);
  CHECK(query.app_id == "markor");
  CHECK(query.u_value == acc.u_value);
  CHECK(query.tau == config.tau);
  REQUIRE(query.focus_terms.size() == 3);
  CHECK(query.focus_terms[0] == "save");
  CHECK(query.focus_terms[1] == "note");
  CHECK(query.focus_terms[2] == "tap_by_text");
}

TEST_CASE("build_query keeps at most eight contribution tokens and dedups") {
  GateConfig config;
  config.tau = 0.1;
  config.decay_base = 1.0;
  const AppAccumulator acc = fired_accumulator("app", config);

  curio::InfoGainReport report;
  for (int i = 0; i < 12; ++i) {
    report.contributions.emplace_back("tok" + std::to_string(i), 1.0 - 0.01 * i);
  }
  const std::vector<Action> actions = {Action::tap_by_index(1), Action::tap_by_index(2)};
  const RetrievalQuery query = curio::build_query(acc, config, report, actions);
  REQUIRE(query.focus_terms.size() == 9);  // 8 tokens + one deduplicated action name
  for (int i = 0; i < 8; ++i) CHECK(query.focus_terms[static_cast<std::size_t>(i)] == "tok" + std::to_string(i));
  CHECK(query.focus_terms.back() == "tap_by_index");
}

TEST_CASE("build_query falls back to action names when OTHER dominates") {
  GateConfig config;
  config.tau = 0.1;
  config.decay_base = 1.0;
  const AppAccumulator acc = fired_accumulator("app", config);
  curio::InfoGainReport report;
  report.contributions = {{curio::kOtherToken, 0.9}};
  const RetrievalQuery query =
      curio::build_query(acc, config, report, {Action::swipe(curio::Direction::up)});
  REQUIRE(query.focus_terms.size() == 1);
  CHECK(query.focus_terms[0] == "swipe");
}

TEST_CASE("build_query without a fired gate is an error") {
  GateConfig config;
  const AppAccumulator acc = curio::make_accumulator("app");
  try {
    curio::build_query(acc, config, {}, {});
    FAIL("query built without trigger");
  } catch (const curio::Error& e) {
    CHECK(e.code() == curio::Errc::gate_not_triggered);
  }
}

TEST_CASE("docs client matches the grep-and-count oracle") {
  curio::DocsCorpusClient client(corpus("docs"));
  const auto units = client.fetch(query_for("markor", {"markor", "note"}));
  REQUIRE_FALSE(units.empty());
  for (const auto& unit : units) {
    CHECK(unit.source_kind == SourceKind::web_docs);
    CHECK(unit.relevance > 0.0);
    CHECK(unit.relevance <= 1.0);

    const auto tokens = oracle::tokenize(unit.excerpt);
    int hits = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i] == "markor" || tokens[i] == "note") ++hits;
    }
    CHECK(hits > 0);
    CHECK(unit.relevance ==
          doctest::Approx(static_cast<double>(hits) / static_cast<double>(tokens.size()))
              .epsilon(1e-12));
  }
  const auto locators = [&] {
    std::vector<std::string> names;
    for (const auto& unit : units) names.push_back(unit.locator);
    return names;
  }();
  CHECK(std::find(locators.begin(), locators.end(), "markor_notes.txt") != locators.end());
  CHECK(std::find(locators.begin(), locators.end(), "osmand_markers.txt") == locators.end());
}

TEST_CASE("docs client over an empty corpus returns nothing") {
  testutil::TempDir dir("curio-empty-docs");
  curio::DocsCorpusClient client(dir.path());
  CHECK(client.fetch(query_for("x", {"anything"})).empty());
}

TEST_CASE("missing corpus directory is SourceUnavailable") {
  curio::DocsCorpusClient client("/nonexistent/curio-docs");
  try {
    client.fetch(query_for("x", {"term"}));
    FAIL("missing corpus accepted");
  } catch (const curio::Error& e) {
    CHECK(e.code() == curio::Errc::source_unavailable);
  }
}

TEST_CASE("binary content in the docs corpus is MalformedCorpus") {
  testutil::TempDir dir("curio-bin-docs");
  dir.file("bad.txt", std::string("text with a NUL\0byte", 20));
  curio::DocsCorpusClient client(dir.path());
  try {
    client.fetch(query_for("x", {"text"}));
    FAIL("binary corpus accepted");
  } catch (const curio::Error& e) {
    CHECK(e.code() == curio::Errc::malformed_corpus);
    CHECK(std::string(e.what()).find("bad.txt") != std::string::npos);
  }
}

TEST_CASE("git client reads commit messages and enforces the export schema") {
  curio::GitExportClient client(corpus("git") / "export.jsonl");
  const auto units = client.fetch(query_for("pro_expense", {"expense"}));
  REQUIRE(units.size() == 1);
  CHECK(units[0].source_kind == SourceKind::git_history);
  CHECK(units[0].locator == "export.jsonl@a1f9c2d");
  CHECK(units[0].excerpt.find("parse shared text") != std::string::npos);

  testutil::TempDir dir("curio-bad-git");
  const auto bad = dir.file("export.jsonl", "{\"commit\":\"abc\"}\n");
  curio::GitExportClient broken(bad);
  try {
    broken.fetch(query_for("x", {"term"}));
    FAIL("schema violation accepted");
  } catch (const curio::Error& e) {
    CHECK(e.code() == curio::Errc::malformed_corpus);
    CHECK(std::string(e.what()).find(":1:") != std::string::npos);
  }
}

TEST_CASE("trajectory client surfaces the expense task for expense queries") {
  curio::TrajectoryCorpusClient client(corpus("traj"));
  const auto units = client.fetch(query_for("pro_expense", {"expense"}));
  REQUIRE(units.size() == 1);
  CHECK(units[0].source_kind == SourceKind::trajectories);
  CHECK(units[0].locator == "Expense Add Multiple From Gallery");
  CHECK(units[0].excerpt.find("gallery --tap_by_text--> pro_expense") != std::string::npos);

  const auto marker_units = client.fetch(query_for("osmand", {"osmand", "marker"}));
  REQUIRE(marker_units.size() == 1);
  CHECK(marker_units[0].locator == "OsmAnd Marker");
}

TEST_CASE("fetch respects max_units and descending relevance") {
  curio::DocsCorpusClient client(corpus("docs"));
  const auto units = client.fetch(query_for("any", {"the", "a", "and", "save"}, 2));
  CHECK(units.size() <= 2);
  for (std::size_t i = 1; i < units.size(); ++i) {
    CHECK(units[i - 1].relevance >= units[i].relevance);
  }
}

TEST_CASE("merge_units sorts, dedups, and caps") {
  KnowledgeUnit a{SourceKind::web_docs, "doc1", "alpha text", 0.5};
  KnowledgeUnit b{SourceKind::git_history, "repo@1", "beta text", 0.9};
  KnowledgeUnit dup = a;
  KnowledgeUnit tie{SourceKind::trajectories, "traj1", "gamma text", 0.5};

  const auto merged = curio::merge_units({{a, dup}, {b, tie}});
  REQUIRE(merged.size() == 3);
  CHECK(merged[0].locator == "repo@1");
  CHECK(merged[1].locator == "doc1");       // web_docs sorts before trajectories on ties
  CHECK(merged[2].locator == "traj1");

  std::vector<std::vector<KnowledgeUnit>> many(1);
  for (int i = 0; i < 50; ++i) {
    KnowledgeUnit unit{SourceKind::web_docs, "doc" + std::to_string(i),
                       "excerpt " + std::to_string(i), 1.0 - 0.001 * i};
    many[0].push_back(unit);
  }
  CHECK(curio::merge_units(many).size() == static_cast<std::size_t>(curio::kMergedUnitCap));
}

TEST_CASE("consolidator builds provenance-complete categorized cards") {
  KnowledgeUnit create{SourceKind::web_docs, "guide.txt", "CreateNote: tap + then Save", 0.8};
  const curio::TemplateConsolidator consolidator;
  const AppCard single = consolidator.consolidate("markor", {create});
  REQUIRE(single.entries.size() == 1);
  CHECK(single.entries[0].title == "CreateNote");
  CHECK(single.entries[0].body == "CreateNote: tap + then Save");
  REQUIRE_FALSE(single.provenance.empty());
  CHECK(single.provenance[0].find("web_docs:guide.txt") != std::string::npos);

  KnowledgeUnit semantics{SourceKind::web_docs, "a", "Home. main screen lists items", 0.9};
  KnowledgeUnit io{SourceKind::web_docs, "b", "Settings. configure the theme", 0.8};
  KnowledgeUnit ui{SourceKind::web_docs, "c", "Select. long-press a thumbnail", 0.7};
  KnowledgeUnit errors{SourceKind::web_docs, "d", "Recovery. on error restore backup", 0.6};
  const AppCard card = consolidator.consolidate("app", {errors, ui, io, semantics});
  REQUIRE(card.entries.size() == 4);
  CHECK(card.entries[0].category == curio::CardCategory::functional_semantics);
  CHECK(card.entries[1].category == curio::CardCategory::io_constraints);
  CHECK(card.entries[2].category == curio::CardCategory::ui_function_mapping);
  CHECK(card.entries[3].category == curio::CardCategory::interaction_patterns);
  CHECK(card.provenance.size() == 4);
}

TEST_CASE("consolidating verbatim Markor excerpts yields substrings of the original") {
  const std::string original = testutil::slurp(
      std::filesystem::path(CURIO_FIXTURE_DIR) / "cards" / "Markor.card");
  const AppCard markor = curio::parse_card(original);
  std::vector<KnowledgeUnit> units;
  for (const auto& entry : markor.entries) {
    KnowledgeUnit unit;
    unit.source_kind = SourceKind::trajectories;
    unit.locator = "markor-log";
    unit.excerpt = entry.title + ": " + entry.body;
    unit.relevance = 0.5;
    units.push_back(unit);
  }
  const curio::TemplateConsolidator consolidator;
  const AppCard draft = consolidator.consolidate("Markor", units);
  const std::string canonical = curio::canonicalize_card_text(original);
  REQUIRE(draft.entries.size() == markor.entries.size());
  for (const auto& entry : draft.entries) {
    CHECK(canonical.find(entry.body) != std::string::npos);
    CHECK(canonical.find(entry.title) != std::string::npos);
  }
}

TEST_CASE("consolidate wrapper reports empty unit lists and wraps plugin failures") {
  const curio::TemplateConsolidator consolidator;
  try {
    curio::consolidate("app", {}, consolidator);
    FAIL("empty units accepted");
  } catch (const curio::Error& e) {
    CHECK(e.code() == curio::Errc::no_units);
  }

  class ThrowingConsolidator : public curio::Consolidator {
   public:
    AppCard consolidate(const std::string&, const std::vector<KnowledgeUnit>&) const override {
      throw std::runtime_error("plugin exploded");
    }
  };
  KnowledgeUnit unit{SourceKind::web_docs, "x", "text", 0.5};
  try {
    curio::consolidate("app", {unit}, ThrowingConsolidator());
    FAIL("plugin failure not wrapped");
  } catch (const curio::Error& e) {
    CHECK(e.code() == curio::Errc::consolidator_failure);
    CHECK(std::string(e.what()).find("plugin exploded") != std::string::npos);
  }
}

TEST_CASE("retrieve_and_update is deterministic and versions increment") {
  GateConfig config;
  config.tau = 0.4;
  config.decay_base = 1.0;

  curio::DocsCorpusClient docs(corpus("docs"));
  curio::GitExportClient git(corpus("git") / "export.jsonl");
  curio::TrajectoryCorpusClient traj(corpus("traj"));
  const std::vector<const curio::SourceClient*> clients = {&docs, &git, &traj};
  const curio::TemplateConsolidator consolidator;

  curio::InfoGainReport report;
  report.contributions = {{"expense", 0.4}, {"gallery", 0.2}};

  std::vector<std::string> renders;
  for (int run = 0; run < 3; ++run) {
    curio::CardStore store;
    AppAccumulator acc = fired_accumulator("pro_expense", config);
    const AppCard card = curio::retrieve_and_update("pro_expense", acc, config, report, {},
                                                    clients, consolidator, store);
    renders.push_back(curio::render_card(card));
    CHECK(card.version == 1);
    CHECK(store.total_versions() == 1);
    CHECK(acc.u_value == 0.0);
    CHECK(acc.trigger_count == 1);
  }
  CHECK(renders[0] == renders[1]);
  CHECK(renders[1] == renders[2]);

  curio::CardStore store;
  AppAccumulator acc = fired_accumulator("pro_expense", config);
  curio::retrieve_and_update("pro_expense", acc, config, report, {}, clients, consolidator,
                             store);
  acc = curio::record(acc, config.tau + 0.5, config);
  const AppCard second = curio::retrieve_and_update("pro_expense", acc, config, report, {},
                                                    clients, consolidator, store);
  CHECK(second.version == 2);
  CHECK(store.versions("pro_expense").size() == 2);
}

TEST_CASE("retrieve_and_update failure leaves store and accumulator unchanged") {
  GateConfig config;
  config.tau = 0.4;
  config.decay_base = 1.0;
  const FailingClient failing;
  const std::vector<const curio::SourceClient*> clients = {&failing};
  const curio::TemplateConsolidator consolidator;

  curio::CardStore store;
  store.put(curio::parse_card("### pro_expense:\n1. Seed: entry."));
  AppAccumulator acc = fired_accumulator("pro_expense", config);
  const AppAccumulator before = acc;
  const std::size_t versions_before = store.total_versions();

  try {
    curio::retrieve_and_update("pro_expense", acc, config, {}, {}, clients, consolidator, store);
    FAIL("failing source accepted");
  } catch (const curio::Error& e) {
    CHECK(e.code() == curio::Errc::source_unavailable);
  }
  CHECK(store.total_versions() == versions_before);
  CHECK(acc == before);
}

TEST_CASE("a client emitting foreign-kind units is rejected") {
  GateConfig config;
  config.tau = 0.4;
  config.decay_base = 1.0;
  const WrongKindClient wrong;
  const std::vector<const curio::SourceClient*> clients = {&wrong};
  const curio::TemplateConsolidator consolidator;

  curio::CardStore store;
  AppAccumulator acc = fired_accumulator("app", config);
  CHECK_THROWS_AS(curio::retrieve_and_update("app", acc, config, {}, {}, clients, consolidator,
                                             store),
                  curio::Error);
  CHECK(store.total_versions() == 0);
}
