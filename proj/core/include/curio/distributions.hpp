#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

namespace curio {

// Reserved token naming the residual probability bucket: everything the model
// considered but that fell outside the kept top-K. Spelled with mathematical
// angle brackets so no tokenizer output can collide with it.
inline const std::string kOtherToken = "⟨OTHER⟩";

// Default number of kept top tokens per decoding step.
inline constexpr int kDefaultTopK = 19;

// One provider logprob entry: a token and its natural-log probability.
struct TokenEntry {
  std::string token;
  double logprob = 0.0;  // must be <= 0
};

// Truncated next-token distribution for a single decoding step. Entries are
// ordered by probability descending (ties broken by token ascending) and
// other_mass holds the residual 1 - sum(kept).
struct StepDistribution {
  int step_index = 0;
  std::vector<std::pair<std::string, double>> entries;
  double other_mass = 0.0;

  double total_mass() const;
};

// Per-token probabilities averaged over the decoding steps of one generation.
// The map always contains kOtherToken; absent tokens carry exact zero mass.
struct AggregateDistribution {
  std::map<std::string, double> mass;
  int step_count = 0;

  double total_mass() const;
  // Probability of `token`, 0.0 when the token is not in the support.
  double at(const std::string& token) const;
  bool same_support(const AggregateDistribution& other) const;
};

// Builds the kept-versus-other step distribution from raw provider logprobs:
// probabilities are exp(logprob), the k largest are kept, and the residual
// becomes other_mass. Kept sums in (1, 1 + 1e-4] are treated as provider
// rounding noise and renormalized; anything larger is a MassOverflow error.
StepDistribution step_from_logprobs(const std::vector<TokenEntry>& entries, int k,
                                    int step_index = 0);

// Averages step distributions into a generation-level distribution over the
// union vocabulary: mass(w) = sum_t p_t(w) / step_count.
AggregateDistribution aggregate(const std::vector<StepDistribution>& steps);

// Extends both distributions onto the union of their supports, filling the
// missing tokens with exact zeros. Total mass on each side is unchanged.
std::pair<AggregateDistribution, AggregateDistribution> align(const AggregateDistribution& p,
                                                              const AggregateDistribution& q);

// Checks the step invariants (token validity, masses in range, total within
// 1e-6 of one) and throws on violation.
void validate_step(const StepDistribution& step);

}  // namespace curio
