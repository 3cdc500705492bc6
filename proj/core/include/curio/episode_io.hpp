#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "curio/harness.hpp"
#include "curio/logprob_io.hpp"

namespace curio {

// Episode logs are append-only JSONL, one transition per line:
//   {"state": {"state_id", "app_id", "a11y_text", "screenshot_ref"?},
//    "action": {"kind", "index" | "target" | "text" | "direction"},
//    "next_state": {...},
//    "prior": [step records], "posterior": [step records]}
// Step records use the logprob dump shape. A partially written trailing
// line (or any corrupt line) truncates the episode at the last complete
// record instead of failing the load.

struct EpisodeLoadResult {
  std::vector<TransitionRecord> transitions;
  bool truncated = false;
  int truncated_line = 0;
  std::string truncation_message;
};

EpisodeLoadResult load_episode_log(const std::filesystem::path& path, int k,
                                   bool base10 = false);

// Serializes one transition to a log line (no trailing newline). The
// inverse of one load_episode_log record up to floating-point rounding of
// the logprobs.
std::string transition_to_log_line(const UiState& state, const Action& action,
                                   const UiState& next_state,
                                   const std::vector<StepRecord>& prior,
                                   const std::vector<StepRecord>& posterior);

// Report JSON: {"config"?, "gate", "lambda", "transitions", "u_traces",
// "gate_events", "cards_injected", "final_u", "status", ...}.
std::string episode_report_to_json(const EpisodeReport& report, int indent = 2);

}  // namespace curio
