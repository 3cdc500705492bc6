#pragma once

#include <filesystem>
#include <string>

#include "curio/distributions.hpp"
#include "curio/divergence.hpp"
#include "curio/gate.hpp"
#include "curio/retrieval.hpp"

namespace curio {

// Runtime knobs shared by the tools. Loaded from a sectioned key=value file,
// then overridden by CLI flags; unknown sections or keys are rejected so
// typos fail loudly. File shape:
//
//   # comment
//   [scoring]
//   k = 19
//   lambda = 0.5
//   logprob_base10 = false
//
//   [gate]
//   tau = 1.0
//   decay_base = 0.95
//   difficulty_weight = 1.0
//   reset_on_trigger = true
//
//   [retrieval]
//   max_units = 16
//
//   [paths]
//   store_root = /path/to/cards
//   corpus_docs = /path/to/docs
//   corpus_git = /path/to/export.jsonl
//   corpus_traj = /path/to/trajectories
struct RunConfig {
  int k = kDefaultTopK;
  double lambda = kDefaultLambda;
  bool logprob_base10 = false;
  GateConfig gate;
  int max_units = kDefaultMaxUnits;
  std::filesystem::path store_root;
  std::filesystem::path corpus_docs;
  std::filesystem::path corpus_git;
  std::filesystem::path corpus_traj;

  void validate() const;

  // Parses `path` and overlays its values onto *this.
  void apply_file(const std::filesystem::path& path);

  static RunConfig from_file(const std::filesystem::path& path);
};

// Effective-config echo for reports and diagnostics.
std::string run_config_to_json(const RunConfig& config, int indent = -1);

}  // namespace curio
