#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "curio/action.hpp"
#include "curio/appcards.hpp"
#include "curio/distributions.hpp"
#include "curio/divergence.hpp"
#include "curio/gate.hpp"
#include "curio/retrieval.hpp"

namespace curio {

// How many of an app's most recent actions feed retrieval focus terms.
inline constexpr int kRecentActionWindow = 5;

struct UiState {
  std::string state_id;
  std::optional<std::string> screenshot_ref;
  std::string a11y_text;
  std::string app_id;

  void validate() const;

  bool operator==(const UiState&) const = default;
};

// One logged step: the model's kept-token distributions before and after
// observing the action's outcome.
struct TransitionRecord {
  UiState state;
  Action action;
  UiState next_state;
  std::vector<StepDistribution> prior_steps;
  std::vector<StepDistribution> posterior_steps;
};

struct TransitionReport {
  int step = 0;  // 1-based position in the episode
  std::string app_id;
  InfoGainReport report;
};

struct GateEvent {
  int step = 0;
  std::string app_id;
  double u_at_fire = 0.0;
};

struct CardInjection {
  int step = 0;
  std::string app_id;
  int version = 0;
};

struct UTracePoint {
  int step = 0;
  double u_after = 0.0;  // post-transition value, so 0 right after a reset
};

// Everything a replay produces. When a transition fails the report is marked
// partial and carries results up to (excluding) the failing step.
struct EpisodeReport {
  std::vector<TransitionReport> transitions;
  std::map<std::string, std::vector<UTracePoint>> u_traces;
  std::vector<GateEvent> gate_events;
  std::vector<CardInjection> cards_injected;
  std::map<std::string, AppAccumulator> final_accumulators;
  GateConfig gate_config;
  double lambda = kDefaultLambda;
  bool partial = false;
  std::optional<int> failed_step;
  std::string failure_message;
};

// Produces prior/posterior token distributions for a transition. Live
// backends sit behind this interface; replay never needs one.
class ModelClient {
 public:
  virtual ~ModelClient() = default;
  virtual std::vector<StepDistribution> prior(const UiState& state,
                                              const Action& action) const = 0;
  virtual std::vector<StepDistribution> posterior(const UiState& state, const Action& action,
                                                  const UiState& next_state) const = 0;
};

// Deterministic stand-in model: distributions are derived from a stable
// 64-bit hash of (state_id, action) so identical inputs give bit-identical
// outputs on every platform. The posterior also hashes next_state.state_id,
// so observing a new state shifts the distribution.
class MockModelClient : public ModelClient {
 public:
  explicit MockModelClient(std::uint64_t seed = 0, int k = 7, int steps_per_generation = 3);

  std::vector<StepDistribution> prior(const UiState& state, const Action& action) const override;
  std::vector<StepDistribution> posterior(const UiState& state, const Action& action,
                                          const UiState& next_state) const override;

 private:
  std::vector<StepDistribution> generate(std::uint64_t hash) const;

  std::uint64_t seed_;
  int k_;
  int steps_;
};

// Replays logged transitions through scoring and gating, performing a full
// retrieval transaction whenever the gate fires. Accumulators are keyed by
// state.app_id, so interleaved apps stay isolated. Per-transition failures
// end the replay with a partial report instead of throwing.
EpisodeReport replay(const std::vector<TransitionRecord>& episode, const GateConfig& gate_config,
                     double lambda, CardStore& store,
                     const std::vector<const SourceClient*>& clients,
                     const Consolidator& consolidator);

// Gate-only replay: gate events are recorded and trigger resets applied, but
// no retrieval runs and no store is touched.
EpisodeReport replay(const std::vector<TransitionRecord>& episode, const GateConfig& gate_config,
                     double lambda = kDefaultLambda);

// Scores one live transition through a model client without touching any
// gate state. Invalid model output raises InvalidModelOutput carrying the
// offending distributions serialized as JSON.
std::pair<TransitionRecord, InfoGainReport> live_step(const ModelClient& model,
                                                      const UiState& state, const Action& action,
                                                      const UiState& next_state,
                                                      double lambda = kDefaultLambda);

// select_cards + inject against a base prompt.
std::string assemble_prompt(const std::string& base_prompt, const std::string& task_description,
                            const CardStore& store, int limit);

}  // namespace curio
