#include "curio/harness.hpp"

#include <mutex>
#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"

#include "curio/errors.hpp"

namespace curio {
namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::uint64_t hash, std::string_view bytes) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= kFnvPrime;
  }
  // Field separator: hashing ("ab", "c") must differ from ("a", "bc").
  hash ^= 0x1f;
  hash *= kFnvPrime;
  return hash;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform double in [0, 1) from the top 53 bits; exact on every platform.
double unit_interval(std::uint64_t value) {
  return static_cast<double>(value >> 11) * 0x1.0p-53;
}

std::string quarantine_json(const char* which, const std::vector<StepDistribution>& steps) {
  nlohmann::ordered_json doc;
  doc["which"] = which;
  auto list = nlohmann::ordered_json::array();
  for (const auto& step : steps) {
    nlohmann::ordered_json item;
    item["step"] = step.step_index;
    auto entries = nlohmann::ordered_json::array();
    for (const auto& [token, prob] : step.entries) {
      entries.push_back(nlohmann::ordered_json::array({token, prob}));
    }
    item["entries"] = std::move(entries);
    item["other"] = step.other_mass;
    list.push_back(std::move(item));
  }
  doc["steps"] = std::move(list);
  return doc.dump();
}

void check_model_output(const char* which, const std::vector<StepDistribution>& steps) {
  if (steps.empty()) {
    throw InvalidModelOutput(std::string("model returned no ") + which + " steps",
                             quarantine_json(which, steps));
  }
  for (const auto& step : steps) {
    try {
      validate_step(step);
    } catch (const Error& e) {
      throw InvalidModelOutput(std::string("model returned an invalid ") + which +
                                   " step: " + e.what(),
                               quarantine_json(which, steps));
    }
  }
}

std::vector<Action> recent_actions(const std::vector<Action>& actions) {
  const std::size_t window = static_cast<std::size_t>(kRecentActionWindow);
  const std::size_t start = actions.size() > window ? actions.size() - window : 0;
  return std::vector<Action>(actions.begin() + static_cast<std::ptrdiff_t>(start), actions.end());
}

EpisodeReport run_replay(const std::vector<TransitionRecord>& episode,
                         const GateConfig& gate_config, double lambda, CardStore* store,
                         const std::vector<const SourceClient*>& clients,
                         const Consolidator* consolidator) {
  gate_config.validate();
  if (!(lambda > 0.0)) raise(Errc::non_positive_lambda, "lambda must be > 0");
  if (episode.empty()) raise(Errc::invalid_argument, "episode has no transitions");

  EpisodeReport report;
  report.gate_config = gate_config;
  report.lambda = lambda;

  std::map<std::string, AppAccumulator> accumulators;
  std::map<std::string, std::vector<Action>> actions_by_app;

  for (std::size_t i = 0; i < episode.size(); ++i) {
    const int step = static_cast<int>(i) + 1;
    const TransitionRecord& transition = episode[i];
    try {
      transition.state.validate();
      transition.next_state.validate();
      transition.action.validate();
      const std::string& app = transition.state.app_id;

      const InfoGainReport gain =
          info_gain(transition.prior_steps, transition.posterior_steps, lambda);

      auto [it, inserted] = accumulators.try_emplace(app, make_accumulator(app));
      (void)inserted;
      AppAccumulator& acc = it->second;
      acc = record(std::move(acc), gain.js_star_bits, gate_config);
      actions_by_app[app].push_back(transition.action);

      report.transitions.push_back({step, app, gain});

      if (should_trigger(acc, gate_config)) {
        report.gate_events.push_back({step, app, acc.u_value});
        if (!clients.empty()) {
          const AppCard card =
              retrieve_and_update(app, acc, gate_config, gain, recent_actions(actions_by_app[app]),
                                  clients, *consolidator, *store);
          report.cards_injected.push_back({step, app, card.version});
        } else {
          acc = mark_triggered(std::move(acc), gate_config);
        }
      }
      report.u_traces[app].push_back({step, acc.u_value});
    } catch (const Error& e) {
      report.partial = true;
      report.failed_step = step;
      report.failure_message = e.what();
      break;
    }
  }

  report.final_accumulators = std::move(accumulators);
  return report;
}

}  // namespace

void UiState::validate() const {
  if (state_id.empty()) raise(Errc::invalid_argument, "state_id is empty");
  if (a11y_text.empty()) {
    raise(Errc::invalid_argument, "a11y_text is empty for state '" + state_id + "'");
  }
  if (app_id.empty()) raise(Errc::invalid_argument, "app_id is empty for state '" + state_id + "'");
}

MockModelClient::MockModelClient(std::uint64_t seed, int k, int steps_per_generation)
    : seed_(seed), k_(k), steps_(steps_per_generation) {
  if (k < 1) raise(Errc::invalid_argument, "k must be >= 1");
  if (steps_per_generation < 1) raise(Errc::invalid_argument, "steps_per_generation must be >= 1");
}

std::vector<StepDistribution> MockModelClient::prior(const UiState& state,
                                                     const Action& action) const {
  state.validate();
  action.validate();
  std::uint64_t hash = kFnvOffset ^ seed_;
  hash = fnv1a(hash, "prior");
  hash = fnv1a(hash, state.state_id);
  hash = fnv1a(hash, action_kind_name(action.kind));
  hash = fnv1a(hash, action.payload_text());
  return generate(hash);
}

std::vector<StepDistribution> MockModelClient::posterior(const UiState& state,
                                                         const Action& action,
                                                         const UiState& next_state) const {
  state.validate();
  next_state.validate();
  action.validate();
  std::uint64_t hash = kFnvOffset ^ seed_;
  hash = fnv1a(hash, "posterior");
  hash = fnv1a(hash, state.state_id);
  hash = fnv1a(hash, action_kind_name(action.kind));
  hash = fnv1a(hash, action.payload_text());
  hash = fnv1a(hash, next_state.state_id);
  return generate(hash);
}

std::vector<StepDistribution> MockModelClient::generate(std::uint64_t hash) const {
  constexpr int kVocabulary = 32;
  std::vector<StepDistribution> steps;
  steps.reserve(static_cast<std::size_t>(steps_));
  std::uint64_t rng = hash;
  for (int step = 0; step < steps_; ++step) {
    // Pick k distinct vocabulary ids, then weights for them.
    std::vector<int> ids;
    ids.reserve(static_cast<std::size_t>(k_));
    while (static_cast<int>(ids.size()) < std::min(k_, kVocabulary)) {
      const int id = static_cast<int>(splitmix64(rng) % kVocabulary);
      if (std::find(ids.begin(), ids.end(), id) == ids.end()) ids.push_back(id);
    }
    std::vector<double> weights;
    weights.reserve(ids.size());
    double total = 0.0;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const double w = 0.05 + unit_interval(splitmix64(rng));
      weights.push_back(w);
      total += w;
    }
    const double other = 0.02 + 0.08 * unit_interval(splitmix64(rng));
    std::vector<TokenEntry> entries;
    entries.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      char token[8];
      std::snprintf(token, sizeof token, "t%02d", ids[i]);
      const double prob = weights[i] / total * (1.0 - other);
      entries.push_back({token, std::log(prob)});
    }
    steps.push_back(step_from_logprobs(entries, k_, step));
  }
  return steps;
}

EpisodeReport replay(const std::vector<TransitionRecord>& episode, const GateConfig& gate_config,
                     double lambda, CardStore& store,
                     const std::vector<const SourceClient*>& clients,
                     const Consolidator& consolidator) {
  return run_replay(episode, gate_config, lambda, &store, clients, &consolidator);
}

EpisodeReport replay(const std::vector<TransitionRecord>& episode, const GateConfig& gate_config,
                     double lambda) {
  return run_replay(episode, gate_config, lambda, nullptr, {}, nullptr);
}

std::pair<TransitionRecord, InfoGainReport> live_step(const ModelClient& model,
                                                      const UiState& state, const Action& action,
                                                      const UiState& next_state, double lambda) {
  state.validate();
  next_state.validate();
  action.validate();
  std::vector<StepDistribution> prior;
  std::vector<StepDistribution> posterior;
  try {
    prior = model.prior(state, action);
    posterior = model.posterior(state, action, next_state);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(Errc::model_unavailable, std::string("model client failed: ") + e.what());
  }
  check_model_output("prior", prior);
  check_model_output("posterior", posterior);

  TransitionRecord record;
  record.state = state;
  record.action = action;
  record.next_state = next_state;
  record.prior_steps = std::move(prior);
  record.posterior_steps = std::move(posterior);
  InfoGainReport gain = info_gain(record.prior_steps, record.posterior_steps, lambda);
  return {std::move(record), std::move(gain)};
}

std::string assemble_prompt(const std::string& base_prompt, const std::string& task_description,
                            const CardStore& store, int limit) {
  if (base_prompt.empty()) raise(Errc::invalid_argument, "base prompt is empty");
  return inject(base_prompt, select_cards(task_description, store, limit));
}

}  // namespace curio
