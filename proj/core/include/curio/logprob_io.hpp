#pragma once

#include <filesystem>
#include <vector>

#include "curio/distributions.hpp"

namespace curio {

// One line of a logprob dump: {"step": N, "entries": [{"token", "logprob"}]}.
// Extra keys in a record are tolerated; providers attach all sorts of
// metadata. Logprobs are natural log unless base10 conversion is requested,
// in which case values are multiplied by ln(10) on ingest.
struct StepRecord {
  int step = 0;
  std::vector<TokenEntry> entries;
};

// Reads a JSONL dump, one step record per line. Malformed lines raise
// MalformedDump with "path:line:" in the message.
std::vector<StepRecord> load_logprob_jsonl(const std::filesystem::path& path,
                                           bool base10 = false);

// Reads a combined file: a single JSON object {"prior": [...], "posterior":
// [...]} holding the two step-record arrays.
struct DumpPair {
  std::vector<StepRecord> prior;
  std::vector<StepRecord> posterior;
};
DumpPair load_logprob_pair(const std::filesystem::path& path, bool base10 = false);

// Applies step_from_logprobs to every record.
std::vector<StepDistribution> build_steps(const std::vector<StepRecord>& records, int k);

}  // namespace curio
