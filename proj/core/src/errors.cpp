#include "curio/errors.hpp"

namespace curio {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::empty_entries: return "EmptyEntries";
    case Errc::duplicate_token: return "DuplicateToken";
    case Errc::invalid_token: return "InvalidToken";
    case Errc::mass_overflow: return "MassOverflow";
    case Errc::empty_step_list: return "EmptyStepList";
    case Errc::unaligned_supports: return "UnalignedSupports";
    case Errc::non_positive_lambda: return "NonPositiveLambda";
    case Errc::negative_gain: return "NegativeGain";
    case Errc::trigger_without_threshold: return "TriggerWithoutThreshold";
    case Errc::missing_header: return "MissingHeader";
    case Errc::non_contiguous_indices: return "NonContiguousIndices";
    case Errc::malformed_entry: return "MalformedEntry";
    case Errc::empty_entry: return "EmptyEntry";
    case Errc::empty_card: return "EmptyCard";
    case Errc::invalid_card: return "InvalidCard";
    case Errc::gate_not_triggered: return "GateNotTriggered";
    case Errc::source_unavailable: return "SourceUnavailable";
    case Errc::malformed_corpus: return "MalformedCorpus";
    case Errc::no_units: return "NoUnits";
    case Errc::consolidator_failure: return "ConsolidatorFailure";
    case Errc::model_unavailable: return "ModelUnavailable";
    case Errc::invalid_model_output: return "InvalidModelOutput";
    case Errc::malformed_dump: return "MalformedDump";
    case Errc::io_error: return "IoError";
    case Errc::invalid_config: return "InvalidConfig";
    case Errc::invalid_argument: return "InvalidArgument";
  }
  return "UnknownError";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

void raise(Errc code, const std::string& message) { throw Error(code, message); }

InvalidModelOutput::InvalidModelOutput(const std::string& message, std::string quarantined_json)
    : Error(Errc::invalid_model_output, message), quarantined_(std::move(quarantined_json)) {}

}  // namespace curio
