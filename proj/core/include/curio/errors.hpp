#pragma once

#include <stdexcept>
#include <string>

namespace curio {

// Every failure the library reports deliberately. Codes are stable API;
// messages are diagnostics and may change.
enum class Errc {
  // token distributions
  empty_entries,
  duplicate_token,
  invalid_token,
  mass_overflow,
  empty_step_list,
  // divergence
  unaligned_supports,
  non_positive_lambda,
  // uncertainty gate
  negative_gain,
  trigger_without_threshold,
  // app cards
  missing_header,
  non_contiguous_indices,
  malformed_entry,
  empty_entry,
  empty_card,
  invalid_card,
  // retrieval
  gate_not_triggered,
  source_unavailable,
  malformed_corpus,
  no_units,
  consolidator_failure,
  // episode harness
  model_unavailable,
  invalid_model_output,
  // file ingestion
  malformed_dump,
  io_error,
  // configuration and argument validation
  invalid_config,
  invalid_argument,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void raise(Errc code, const std::string& message);

// Raised when a model client hands back distributions that violate the step
// invariants. Carries the offending output serialized as JSON so it can be
// inspected without re-running the model.
class InvalidModelOutput : public Error {
 public:
  InvalidModelOutput(const std::string& message, std::string quarantined_json);

  const std::string& quarantined() const { return quarantined_; }

 private:
  std::string quarantined_;
};

}  // namespace curio
