#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "curio/appcards.hpp"
#include "curio/divergence.hpp"
#include "curio/episode_io.hpp"
#include "curio/errors.hpp"
#include "curio/harness.hpp"
#include "curio/retrieval.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

using curio::Action;
using curio::AppAccumulator;
using curio::EpisodeReport;
using curio::GateConfig;
using curio::MockModelClient;
using curio::StepDistribution;
using curio::TransitionRecord;
using curio::UiState;

namespace {

UiState state(const std::string& id, const std::string& app) {
  UiState s;
  s.state_id = id;
  s.app_id = app;
  s.a11y_text = "screen " + id + " of " + app;
  return s;
}

// Two-token transition whose posterior mixes d of the mass away from the
// prior's certain token; js_star grows smoothly with d.
TransitionRecord drift_transition(const std::string& app, int step, double d,
                                  const std::string& kept = "a",
                                  const std::string& drifted = "b") {
  TransitionRecord record;
  record.state = state("s" + std::to_string(step), app);
  record.action = Action::tap_by_index(step);
  record.next_state = state("s" + std::to_string(step + 1), app);
  record.prior_steps = {curio::step_from_logprobs({{kept, 0.0}}, 2, 0)};
  record.posterior_steps = {
      curio::step_from_logprobs({{kept, std::log(1.0 - d)}, {drifted, std::log(d)}}, 2, 0)};
  return record;
}

TransitionRecord identity_transition(const std::string& app, int step) {
  TransitionRecord record;
  record.state = state("s" + std::to_string(step), app);
  record.action = Action::tap_by_index(step);
  record.next_state = state("s" + std::to_string(step + 1), app);
  const StepDistribution fixed =
      curio::step_from_logprobs({{"a", std::log(0.5)}, {"b", std::log(0.5)}}, 2, 0);
  record.prior_steps = {fixed};
  record.posterior_steps = {fixed};
  return record;
}

}  // namespace

TEST_CASE("identity episode keeps U at zero with no gate events") {
  std::vector<TransitionRecord> episode;
  for (int i = 0; i < 5; ++i) episode.push_back(identity_transition("markor", i));
  GateConfig config;
  const EpisodeReport report = curio::replay(episode, config, 0.5);
  CHECK(report.transitions.size() == 5);
  CHECK(report.gate_events.empty());
  CHECK(report.cards_injected.empty());
  CHECK_FALSE(report.partial);
  REQUIRE(report.final_accumulators.count("markor") == 1);
  CHECK(report.final_accumulators.at("markor").u_value == 0.0);
  for (const auto& point : report.u_traces.at("markor")) CHECK(point.u_after == 0.0);
}

TEST_CASE("oracle-scripted drift episode crosses exactly at step seven") {
  GateConfig config;
  config.decay_base = 0.95;

  std::vector<TransitionRecord> episode;
  std::vector<double> gains;
  for (int i = 0; i < 10; ++i) {
    const double d = 0.18 + 0.004 * i;
    episode.push_back(drift_transition("osmand", i, d));
    gains.push_back(
        curio::info_gain(episode.back().prior_steps, episode.back().posterior_steps, 0.5)
            .js_star_bits);
  }

  // Pick tau between the cumulative values at steps 6 and 7 so the fold
  // crosses exactly once, at step 7.
  const auto closed = oracle::gate_fold(gains, 1e9, config.decay_base, 1.0, true);
  const double u6 = closed.u_after[5];
  const double u7 = closed.u_after[6];
  REQUIRE(u7 > u6);
  config.tau = 0.5 * (u6 + u7);

  const auto fold = oracle::gate_fold(gains, config.tau, config.decay_base, 1.0, true);
  REQUIRE(fold.triggers == 1);
  REQUIRE(fold.trigger_steps == std::vector<int>{7});

  const EpisodeReport report = curio::replay(episode, config, 0.5);
  REQUIRE(report.gate_events.size() == 1);
  CHECK(report.gate_events[0].step == 7);
  CHECK(report.gate_events[0].app_id == "osmand");
  CHECK(report.gate_events[0].u_at_fire > config.tau);

  const auto& trace = report.u_traces.at("osmand");
  REQUIRE(trace.size() == 10);
  CHECK(trace[6].u_after == 0.0);  // reset lands inside the same step
  for (std::size_t i = 0; i < trace.size(); ++i) {
    CHECK(trace[i].u_after == doctest::Approx(fold.u_after[i]).epsilon(1e-12));
  }
}

TEST_CASE("interleaved apps accumulate independently") {
  GateConfig config;
  config.tau = 1e9;
  config.decay_base = 0.95;

  std::vector<TransitionRecord> episode;
  std::vector<double> gallery_gains;
  std::vector<double> expense_gains;
  for (int i = 0; i < 8; ++i) {
    const bool gallery = i % 2 == 0;
    const std::string app = gallery ? "gallery" : "pro_expense";
    const double d = gallery ? 0.2 + 0.01 * i : 0.3 + 0.02 * i;
    episode.push_back(drift_transition(app, i, d));
    const double gain =
        curio::info_gain(episode.back().prior_steps, episode.back().posterior_steps, 0.5)
            .js_star_bits;
    (gallery ? gallery_gains : expense_gains).push_back(gain);
  }

  const EpisodeReport report = curio::replay(episode, config, 0.5);
  const auto gallery_fold =
      oracle::gate_fold(gallery_gains, config.tau, config.decay_base, 1.0, true);
  const auto expense_fold =
      oracle::gate_fold(expense_gains, config.tau, config.decay_base, 1.0, true);

  CHECK(report.final_accumulators.at("gallery").u_value ==
        doctest::Approx(gallery_fold.u).epsilon(1e-12));
  CHECK(report.final_accumulators.at("pro_expense").u_value ==
        doctest::Approx(expense_fold.u).epsilon(1e-12));
  CHECK(report.u_traces.at("gallery").size() == 4);
  CHECK(report.u_traces.at("pro_expense").size() == 4);
}

TEST_CASE("a replay with the gate disabled by an infinite tau changes nothing") {
  GateConfig config;
  config.tau = std::numeric_limits<double>::infinity();
  std::vector<TransitionRecord> episode;
  for (int i = 0; i < 6; ++i) episode.push_back(drift_transition("vlc", i, 0.4));

  curio::CardStore store;
  store.put(curio::parse_card("### vlc:\n1. Seed: entry."));
  const std::size_t versions = store.total_versions();
  const curio::TemplateConsolidator consolidator;
  const EpisodeReport report = curio::replay(episode, config, 0.5, store, {}, consolidator);
  CHECK(report.gate_events.empty());
  CHECK(store.total_versions() == versions);
}

TEST_CASE("replay is bit-deterministic") {
  GateConfig config;
  config.tau = 0.9;
  std::vector<TransitionRecord> episode;
  for (int i = 0; i < 10; ++i) episode.push_back(drift_transition("app", i, 0.25));

  const EpisodeReport a = curio::replay(episode, config, 0.5);
  const EpisodeReport b = curio::replay(episode, config, 0.5);
  REQUIRE(a.transitions.size() == b.transitions.size());
  for (std::size_t i = 0; i < a.transitions.size(); ++i) {
    CHECK(a.transitions[i].report.js_star_bits == b.transitions[i].report.js_star_bits);
  }
  CHECK(a.final_accumulators == b.final_accumulators);
  CHECK(a.gate_events.size() == b.gate_events.size());
}

TEST_CASE("reports are self-verifying against their stored distributions") {
  GateConfig config;
  config.tau = 1e9;
  std::vector<TransitionRecord> episode;
  auto rng = gen::rng(321);
  for (int i = 0; i < 6; ++i) {
    TransitionRecord record;
    record.state = state("s" + std::to_string(i), "app");
    record.action = Action::input_text("text");
    record.next_state = state("s" + std::to_string(i + 1), "app");
    record.prior_steps = gen::step_list(rng);
    record.posterior_steps = gen::step_list(rng);
    episode.push_back(record);
  }
  const EpisodeReport report = curio::replay(episode, config, 0.5);
  for (std::size_t i = 0; i < episode.size(); ++i) {
    const auto again =
        curio::info_gain(episode[i].prior_steps, episode[i].posterior_steps, 0.5);
    CHECK(report.transitions[i].report.js_bits == doctest::Approx(again.js_bits).epsilon(1e-9));
  }
}

TEST_CASE("a bad transition mid-episode yields a partial report") {
  GateConfig config;
  std::vector<TransitionRecord> episode;
  for (int i = 0; i < 4; ++i) episode.push_back(drift_transition("app", i, 0.2));
  episode[2].prior_steps.clear();  // violates the non-empty invariant

  const EpisodeReport report = curio::replay(episode, config, 0.5);
  CHECK(report.partial);
  REQUIRE(report.failed_step.has_value());
  CHECK(*report.failed_step == 3);
  CHECK(report.transitions.size() == 2);
  CHECK_FALSE(report.failure_message.empty());
}

TEST_CASE("replay with sources injects a card when the gate fires") {
  GateConfig config;
  config.tau = 0.3;
  config.decay_base = 1.0;

  std::vector<TransitionRecord> episode;
  for (int i = 0; i < 3; ++i) {
    episode.push_back(drift_transition("pro_expense", i, 0.35, "expense", "category"));
  }

  curio::CardStore store;
  curio::DocsCorpusClient docs(std::filesystem::path(CURIO_FIXTURE_DIR) / "corpus" / "docs");
  const std::vector<const curio::SourceClient*> clients = {&docs};
  const curio::TemplateConsolidator consolidator;

  const EpisodeReport report = curio::replay(episode, config, 0.5, store, clients, consolidator);
  REQUIRE_FALSE(report.gate_events.empty());
  REQUIRE_FALSE(report.cards_injected.empty());
  CHECK(report.cards_injected[0].app_id == "pro_expense");
  CHECK(report.cards_injected[0].version == 1);
  CHECK(store.total_versions() >= 1);
  CHECK(store.current("pro_expense").has_value());
}

TEST_CASE("the mock model is deterministic and within bounds") {
  const MockModelClient model(42);
  const UiState from = state("home", "markor");
  const UiState to = state("editor", "markor");
  const Action action = Action::tap_by_text("New");

  const auto [record, report] = curio::live_step(model, from, action, to, 0.5);
  const auto [record2, report2] = curio::live_step(model, from, action, to, 0.5);
  CHECK(report.js_bits == report2.js_bits);
  CHECK(report.js_star_bits == report2.js_star_bits);
  CHECK(record.prior_steps.size() == record2.prior_steps.size());

  const MockModelClient other_seed(43);
  const auto [record3, report3] = curio::live_step(other_seed, from, action, to, 0.5);
  CHECK(report3.js_bits != report.js_bits);

  auto rng = gen::rng(555);
  const MockModelClient sweep(7);
  for (int i = 0; i < 100; ++i) {
    const UiState a = state("s" + std::to_string(rng() % 50), "app" + std::to_string(rng() % 3));
    const UiState b = state("s" + std::to_string(rng() % 50), a.app_id);
    const Action act = Action::tap_by_index(static_cast<int>(rng() % 10));
    const auto [rec, rep] = curio::live_step(sweep, a, act, b, 0.5);
    CHECK(rep.js_bits >= 0.0);
    CHECK(rep.js_bits <= 1.0);
    for (const auto& step : rec.prior_steps) CHECK_NOTHROW(curio::validate_step(step));
    for (const auto& step : rec.posterior_steps) CHECK_NOTHROW(curio::validate_step(step));
  }
}

TEST_CASE("invalid model output is quarantined") {
  class BrokenModel : public curio::ModelClient {
   public:
    std::vector<StepDistribution> prior(const UiState&, const Action&) const override {
      StepDistribution step;
      step.step_index = 0;
      step.entries = {{"a", 0.8}};
      step.other_mass = 0.1;  // totals 0.9: invalid
      return {step};
    }
    std::vector<StepDistribution> posterior(const UiState&, const Action&,
                                            const UiState&) const override {
      return prior(UiState{}, Action::tap_by_index(0));
    }
  };
  const BrokenModel model;
  try {
    curio::live_step(model, state("a", "app"), Action::tap_by_index(0), state("b", "app"), 0.5);
    FAIL("invalid model output accepted");
  } catch (const curio::InvalidModelOutput& e) {
    CHECK(e.code() == curio::Errc::invalid_model_output);
    CHECK_FALSE(e.quarantined().empty());
    CHECK(e.quarantined().find("0.8") != std::string::npos);
  }
}

TEST_CASE("assemble_prompt composes selection and injection") {
  curio::CardStore store;
  CHECK(curio::assemble_prompt("base", "any task", store, 2) == "base");

  const std::filesystem::path cards = std::filesystem::path(CURIO_FIXTURE_DIR) / "cards";
  store.put(curio::parse_card(testutil::slurp(cards / "Markor.card")));
  store.put(curio::parse_card(testutil::slurp(cards / "Gallery.card")));

  const std::string out = curio::assemble_prompt("base", "create a note in Markor", store, 2);
  CHECK(out.find("### Markor:") != std::string::npos);

  const std::string one = curio::assemble_prompt("base", "note image share view", store, 1);
  std::size_t blocks = 0;
  for (std::size_t pos = one.find("### "); pos != std::string::npos;
       pos = one.find("### ", pos + 1)) {
    ++blocks;
  }
  CHECK(blocks == 1);
}

TEST_CASE("episode logs round-trip through the JSONL format") {
  testutil::TempDir dir("curio-episode");
  GateConfig config;
  config.tau = 1e9;

  std::vector<TransitionRecord> episode;
  std::string log;
  for (int i = 0; i < 4; ++i) {
    TransitionRecord record = drift_transition("markor", i, 0.3);
    episode.push_back(record);
    std::vector<curio::StepRecord> prior;
    std::vector<curio::StepRecord> posterior;
    for (const auto& step : record.prior_steps) {
      curio::StepRecord sr;
      sr.step = step.step_index;
      for (const auto& [token, prob] : step.entries) sr.entries.push_back({token, std::log(prob)});
      prior.push_back(sr);
    }
    for (const auto& step : record.posterior_steps) {
      curio::StepRecord sr;
      sr.step = step.step_index;
      for (const auto& [token, prob] : step.entries) sr.entries.push_back({token, std::log(prob)});
      posterior.push_back(sr);
    }
    log += curio::transition_to_log_line(record.state, record.action, record.next_state, prior,
                                         posterior) +
           "\n";
  }
  const auto path = dir.file("episode.jsonl", log);
  const curio::EpisodeLoadResult loaded = curio::load_episode_log(path, 19);
  CHECK_FALSE(loaded.truncated);
  REQUIRE(loaded.transitions.size() == episode.size());
  for (std::size_t i = 0; i < episode.size(); ++i) {
    CHECK(loaded.transitions[i].state == episode[i].state);
    CHECK(loaded.transitions[i].action == episode[i].action);
    CHECK(loaded.transitions[i].next_state == episode[i].next_state);
  }

  const EpisodeReport a = curio::replay(episode, config, 0.5);
  const EpisodeReport b = curio::replay(loaded.transitions, config, 0.5);
  for (std::size_t i = 0; i < a.transitions.size(); ++i) {
    CHECK(a.transitions[i].report.js_star_bits ==
          doctest::Approx(b.transitions[i].report.js_star_bits).epsilon(1e-12));
  }
}

TEST_CASE("a corrupt line truncates the load but keeps the prefix") {
  testutil::TempDir dir("curio-truncated");
  const TransitionRecord good = drift_transition("app", 0, 0.3);
  std::vector<curio::StepRecord> steps = {{0, {{"a", -0.5}}}};
  const std::string line =
      curio::transition_to_log_line(good.state, good.action, good.next_state, steps, steps);
  const auto path = dir.file("episode.jsonl", line + "\n" + line + "\nnot json at all\n");
  const curio::EpisodeLoadResult loaded = curio::load_episode_log(path, 19);
  CHECK(loaded.truncated);
  CHECK(loaded.truncated_line == 3);
  CHECK(loaded.transitions.size() == 2);
  CHECK_FALSE(loaded.truncation_message.empty());
}

TEST_CASE("episode report JSON has the documented shape") {
  GateConfig config;
  config.tau = 0.3;
  config.decay_base = 1.0;
  std::vector<TransitionRecord> episode;
  for (int i = 0; i < 3; ++i) episode.push_back(drift_transition("app", i, 0.35));
  const EpisodeReport report = curio::replay(episode, config, 0.5);
  const std::string json = curio::episode_report_to_json(report);
  CHECK(json.find("\"gate\"") != std::string::npos);
  CHECK(json.find("\"lambda\"") != std::string::npos);
  CHECK(json.find("\"transitions\"") != std::string::npos);
  CHECK(json.find("\"u_traces\"") != std::string::npos);
  CHECK(json.find("\"gate_events\"") != std::string::npos);
  CHECK(json.find("\"final_u\"") != std::string::npos);
  CHECK(json.find("\"status\": \"clean\"") != std::string::npos);
}
