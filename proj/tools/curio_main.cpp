#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "curio/appcards.hpp"
#include "curio/config.hpp"
#include "curio/episode_io.hpp"
#include "curio/errors.hpp"
#include "curio/gate.hpp"
#include "curio/harness.hpp"
#include "curio/logprob_io.hpp"
#include "curio/retrieval.hpp"

namespace {

std::string num(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", value);
  return buf;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) curio::raise(curio::Errc::io_error, "cannot open file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) curio::raise(curio::Errc::io_error, "cannot write file: " + path.string());
  out << text;
  if (!out) curio::raise(curio::Errc::io_error, "write failed: " + path.string());
}

struct ClientSet {
  std::vector<std::unique_ptr<curio::SourceClient>> owned;
  std::vector<const curio::SourceClient*> pointers;
};

ClientSet make_clients(const curio::RunConfig& cfg) {
  ClientSet set;
  if (!cfg.corpus_docs.empty()) {
    set.owned.push_back(std::make_unique<curio::DocsCorpusClient>(cfg.corpus_docs));
  }
  if (!cfg.corpus_git.empty()) {
    set.owned.push_back(std::make_unique<curio::GitExportClient>(cfg.corpus_git));
  }
  if (!cfg.corpus_traj.empty()) {
    set.owned.push_back(std::make_unique<curio::TrajectoryCorpusClient>(cfg.corpus_traj));
  }
  for (const auto& client : set.owned) set.pointers.push_back(client.get());
  return set;
}

void echo_config(const curio::RunConfig& cfg) {
  std::cerr << "config: " << curio::run_config_to_json(cfg) << "\n";
}

int run_score(const curio::RunConfig& cfg, const std::string& prior_path,
              const std::string& posterior_path) {
  std::vector<curio::StepRecord> prior;
  std::vector<curio::StepRecord> posterior;
  if (posterior_path.empty()) {
    curio::DumpPair pair = curio::load_logprob_pair(prior_path, cfg.logprob_base10);
    prior = std::move(pair.prior);
    posterior = std::move(pair.posterior);
  } else {
    prior = curio::load_logprob_jsonl(prior_path, cfg.logprob_base10);
    posterior = curio::load_logprob_jsonl(posterior_path, cfg.logprob_base10);
  }
  const auto prior_steps = curio::build_steps(prior, cfg.k);
  const auto posterior_steps = curio::build_steps(posterior, cfg.k);
  const curio::InfoGainReport report = curio::info_gain(prior_steps, posterior_steps, cfg.lambda);
  echo_config(cfg);
  std::cout << curio::report_to_json(report, 2) << "\n";
  return 0;
}

int run_cards_validate(const std::string& card_path) {
  const std::string text = read_file(card_path);
  const curio::AppCard card = curio::parse_card(text);
  const std::string canonical = curio::canonicalize_card_text(text);
  const std::string rendered = curio::render_card(card);
  if (rendered != canonical) {
    curio::raise(curio::Errc::invalid_card,
                 "round-trip is not canonical for " + card_path);
  }
  const curio::AppCard again = curio::parse_card(rendered);
  if (!(again == card)) {
    curio::raise(curio::Errc::invalid_card, "parse of rendered card differs for " + card_path);
  }
  std::cout << "ok: " << card.app_name << " (" << card.entries.size() << " entries)\n";
  return 0;
}

int run_cards_render(const std::string& card_path, bool as_json) {
  const curio::AppCard card = curio::parse_card(read_file(card_path));
  if (as_json) {
    std::cout << curio::card_to_json(card, 2) << "\n";
  } else {
    std::cout << curio::render_card(card);
  }
  return 0;
}

int run_cards_list(const curio::RunConfig& cfg) {
  if (cfg.store_root.empty()) {
    curio::raise(curio::Errc::invalid_argument, "cards list requires --store-root");
  }
  const curio::CardStore store = curio::CardStore::load(cfg.store_root);
  for (const curio::AppCard& card : store.all_current()) {
    std::cout << card.app_name << "\tv" << card.version << "\t" << card.entries.size()
              << " entries\n";
  }
  return 0;
}

int run_replay(const curio::RunConfig& cfg, const std::string& episode_path,
               std::string out_path, const std::string& gate_state_out) {
  const curio::EpisodeLoadResult loaded =
      curio::load_episode_log(episode_path, cfg.k, cfg.logprob_base10);
  if (loaded.transitions.empty()) {
    curio::raise(curio::Errc::malformed_dump,
                 "no usable transitions in " + episode_path +
                     (loaded.truncated ? " (" + loaded.truncation_message + ")" : ""));
  }

  curio::CardStore store;
  if (!cfg.store_root.empty() && std::filesystem::exists(cfg.store_root)) {
    store = curio::CardStore::load(cfg.store_root);
  }
  ClientSet clients = make_clients(cfg);
  curio::TemplateConsolidator consolidator;

  curio::EpisodeReport report =
      curio::replay(loaded.transitions, cfg.gate, cfg.lambda, store, clients.pointers,
                    consolidator);
  if (loaded.truncated) {
    report.partial = true;
    if (report.failure_message.empty()) {
      report.failure_message = loaded.truncation_message;
    }
  }

  if (out_path.empty()) {
    std::filesystem::path p(episode_path);
    p.replace_extension(".report.json");
    out_path = p.string();
  }
  write_file(out_path, curio::episode_report_to_json(report, 2) + "\n");
  if (!gate_state_out.empty()) {
    write_file(gate_state_out, curio::accumulators_to_json(report.final_accumulators, 2) + "\n");
  }
  if (!cfg.store_root.empty() && !report.cards_injected.empty()) {
    store.save(cfg.store_root);
  }

  echo_config(cfg);
  std::cout << "transitions: " << report.transitions.size() << "\n";
  std::cout << "final U:\n";
  for (const auto& [app, acc] : report.final_accumulators) {
    std::cout << "  " << app << ": u=" << num(acc.u_value) << " steps=" << acc.steps_recorded
              << " triggers=" << acc.trigger_count << "\n";
  }
  std::cout << "gate events: " << report.gate_events.size() << "\n";
  for (const auto& event : report.gate_events) {
    std::cout << "  step " << event.step << ": " << event.app_id << " u=" << num(event.u_at_fire)
              << "\n";
  }
  std::cout << "cards injected: " << report.cards_injected.size() << "\n";
  for (const auto& injection : report.cards_injected) {
    std::cout << "  step " << injection.step << ": " << injection.app_id << " v"
              << injection.version << "\n";
  }
  std::cout << "report: " << out_path << "\n";
  if (report.partial) {
    std::cout << "status: partial";
    if (report.failed_step) std::cout << " (failed at step " << *report.failed_step << ")";
    std::cout << "\n";
    if (!report.failure_message.empty()) std::cerr << "error: " << report.failure_message << "\n";
    return 3;
  }
  std::cout << "status: clean\n";
  return 0;
}

int run_retrieve(const curio::RunConfig& cfg, const std::string& app, bool force,
                 const std::string& gate_state_path, const std::string& out_path) {
  if (cfg.store_root.empty()) {
    curio::raise(curio::Errc::invalid_argument, "retrieve requires --store-root");
  }
  curio::CardStore store;
  if (std::filesystem::exists(cfg.store_root)) {
    store = curio::CardStore::load(cfg.store_root);
  }

  std::map<std::string, curio::AppAccumulator> gate_state;
  if (!gate_state_path.empty() && std::filesystem::exists(gate_state_path)) {
    gate_state = curio::accumulators_from_json(read_file(gate_state_path));
  }
  curio::AppAccumulator acc = gate_state.count(app) ? gate_state.at(app)
                                                    : curio::make_accumulator(app);

  ClientSet clients = make_clients(cfg);
  curio::TemplateConsolidator consolidator;
  const curio::InfoGainReport no_report;

  curio::AppCard card;
  if (force) {
    if (clients.pointers.empty()) {
      curio::raise(curio::Errc::source_unavailable, "no source clients configured");
    }
    curio::RetrievalQuery query;
    query.app_id = app;
    query.u_value = acc.u_value;
    query.tau = cfg.gate.tau;
    query.focus_terms = {app};
    query.max_units = cfg.max_units;
    std::vector<std::vector<curio::KnowledgeUnit>> per_client;
    for (const curio::SourceClient* client : clients.pointers) {
      per_client.push_back(client->fetch(query));
    }
    const auto units = curio::merge_units(per_client);
    card = curio::consolidate(app, units, consolidator);
    card.provenance.push_back("forced: gate bypassed (u=" + num(acc.u_value) +
                              ", tau=" + num(cfg.gate.tau) + ")");
    store.put(card);
    card = *store.current(app);
    std::cerr << "warning: --force bypassed the gate (u=" << num(acc.u_value)
              << ", tau=" << num(cfg.gate.tau) << ")\n";
  } else {
    if (!curio::should_trigger(acc, cfg.gate)) {
      curio::raise(curio::Errc::gate_not_triggered,
                   "app '" + app + "' has u=" + num(acc.u_value) + " with tau=" +
                       num(cfg.gate.tau) + "; pass --force to bypass");
    }
    card = curio::retrieve_and_update(app, acc, cfg.gate, no_report, {}, clients.pointers,
                                      consolidator, store, cfg.max_units);
  }

  store.save(cfg.store_root);
  if (!gate_state_path.empty()) {
    gate_state[app] = acc;
    write_file(gate_state_path, curio::accumulators_to_json(gate_state, 2) + "\n");
  }

  echo_config(cfg);
  std::cerr << "stored: " << card.app_name << " v" << card.version << " under "
            << cfg.store_root.string() << "\n";
  const std::string rendered = curio::render_card(card);
  std::cout << rendered;
  if (!out_path.empty()) write_file(out_path, rendered);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curiosity-gated knowledge tooling for UI agents"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  int k = 0;
  double lambda = 0.0;
  double tau = 0.0;
  double decay_base = 0.0;
  double difficulty_weight = 0.0;
  bool no_reset = false;
  int max_units = 0;
  std::string store_root;
  std::string corpus_docs;
  std::string corpus_git;
  std::string corpus_traj;
  bool base10 = false;

  auto* opt_config = app.add_option("--config", config_path, "Sectioned key=value config file");
  auto* opt_k = app.add_option("--k", k, "Top-k tokens kept per step");
  auto* opt_lambda = app.add_option("--lambda", lambda, "Tail-adjustment weight");
  auto* opt_tau = app.add_option("--tau", tau, "Gate threshold");
  auto* opt_decay = app.add_option("--decay-base", decay_base, "Per-step decay base");
  auto* opt_weight =
      app.add_option("--difficulty-weight", difficulty_weight, "Difficulty weight multiplier");
  auto* opt_no_reset =
      app.add_flag("--no-reset", no_reset, "Keep the accumulator value after a trigger");
  auto* opt_max_units = app.add_option("--max-units", max_units, "Per-source unit cap");
  auto* opt_store = app.add_option("--store-root", store_root, "Card store directory");
  auto* opt_docs = app.add_option("--corpus-docs", corpus_docs, "Docs corpus directory");
  auto* opt_git = app.add_option("--corpus-git", corpus_git, "Repository export JSONL file");
  auto* opt_traj = app.add_option("--corpus-traj", corpus_traj, "Trajectory corpus directory");
  auto* opt_base10 =
      app.add_flag("--logprob-base10", base10, "Treat dump logprobs as base-10 values");

  auto* score = app.add_subcommand("score", "Score a prior/posterior logprob dump pair");
  std::string score_prior;
  std::string score_posterior;
  score->add_option("prior", score_prior,
                    "Prior dump (JSONL), or a combined {\"prior\",\"posterior\"} JSON file")
      ->required();
  score->add_option("posterior", score_posterior, "Posterior dump (JSONL)");

  auto* cards = app.add_subcommand("cards", "Validate, render, and list knowledge cards");
  cards->require_subcommand(1);
  auto* cards_validate = cards->add_subcommand("validate", "Parse a card file and check round-trip");
  std::string validate_path;
  cards_validate->add_option("card", validate_path, "Card file")->required();
  auto* cards_render = cards->add_subcommand("render", "Print the canonical form of a card file");
  std::string render_path;
  bool render_json = false;
  cards_render->add_option("card", render_path, "Card file")->required();
  cards_render->add_flag("--json", render_json, "Emit JSON instead of card text");
  auto* cards_list = cards->add_subcommand("list", "List current cards in the store");

  auto* replay = app.add_subcommand("replay", "Replay a recorded episode through the gate");
  std::string episode_path;
  std::string replay_out;
  std::string gate_state_out;
  replay->add_option("episode", episode_path, "Episode log (JSONL)")->required();
  replay->add_option("--out", replay_out, "Report path (default: <episode>.report.json)");
  replay->add_option("--gate-state-out", gate_state_out, "Write final accumulators as JSON");

  auto* retrieve = app.add_subcommand("retrieve", "Fetch, consolidate, and store a card");
  std::string retrieve_app;
  std::string gate_state_path;
  std::string retrieve_out;
  bool force = false;
  retrieve->add_option("--app", retrieve_app, "Application id")->required();
  retrieve->add_option("--gate-state", gate_state_path, "Accumulator state JSON (read and updated)");
  retrieve->add_option("--out", retrieve_out, "Also write the rendered card here");
  retrieve->add_flag("--force", force, "Bypass the gate check (audited in provenance)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    curio::RunConfig cfg;
    if (opt_config->count() > 0) cfg.apply_file(config_path);
    if (opt_k->count() > 0) cfg.k = k;
    if (opt_lambda->count() > 0) cfg.lambda = lambda;
    if (opt_tau->count() > 0) cfg.gate.tau = tau;
    if (opt_decay->count() > 0) cfg.gate.decay_base = decay_base;
    if (opt_weight->count() > 0) cfg.gate.difficulty_weight = difficulty_weight;
    if (opt_no_reset->count() > 0) cfg.gate.reset_on_trigger = !no_reset;
    if (opt_max_units->count() > 0) cfg.max_units = max_units;
    if (opt_store->count() > 0) cfg.store_root = store_root;
    if (opt_docs->count() > 0) cfg.corpus_docs = corpus_docs;
    if (opt_git->count() > 0) cfg.corpus_git = corpus_git;
    if (opt_traj->count() > 0) cfg.corpus_traj = corpus_traj;
    if (opt_base10->count() > 0) cfg.logprob_base10 = base10;
    cfg.validate();

    if (score->parsed()) return run_score(cfg, score_prior, score_posterior);
    if (cards->parsed()) {
      if (cards_validate->parsed()) return run_cards_validate(validate_path);
      if (cards_render->parsed()) return run_cards_render(render_path, render_json);
      if (cards_list->parsed()) return run_cards_list(cfg);
    }
    if (replay->parsed()) return run_replay(cfg, episode_path, replay_out, gate_state_out);
    if (retrieve->parsed()) {
      return run_retrieve(cfg, retrieve_app, force, gate_state_path, retrieve_out);
    }
    std::cerr << "error: no command selected\n";
    return 2;
  } catch (const curio::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == curio::Errc::gate_not_triggered ? 4 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
