#include "curio/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "curio/errors.hpp"

namespace curio {
namespace {

// Kept mass up to this much above 1.0 is treated as rounding noise from the
// provider and renormalized away instead of rejected.
constexpr double kMassSlack = 1e-4;

// Kept sums at least this close to 1.0 snap the residual bucket to exact zero.
constexpr double kOtherSnap = 1e-12;

std::string format_mass(double value) {
  std::ostringstream os;
  os.precision(12);
  os << value;
  return os.str();
}

}  // namespace

double StepDistribution::total_mass() const {
  double total = other_mass;
  for (const auto& [token, prob] : entries) {
    (void)token;
    total += prob;
  }
  return total;
}

double AggregateDistribution::total_mass() const {
  double total = 0.0;
  for (const auto& [token, prob] : mass) {
    (void)token;
    total += prob;
  }
  return total;
}

double AggregateDistribution::at(const std::string& token) const {
  auto it = mass.find(token);
  return it == mass.end() ? 0.0 : it->second;
}

bool AggregateDistribution::same_support(const AggregateDistribution& other) const {
  if (mass.size() != other.mass.size()) return false;
  auto a = mass.begin();
  auto b = other.mass.begin();
  for (; a != mass.end(); ++a, ++b) {
    if (a->first != b->first) return false;
  }
  return true;
}

StepDistribution step_from_logprobs(const std::vector<TokenEntry>& entries, int k,
                                    int step_index) {
  if (entries.empty()) {
    raise(Errc::empty_entries, "no logprob entries for step " + std::to_string(step_index));
  }
  if (k < 1) raise(Errc::invalid_argument, "k must be >= 1, got " + std::to_string(k));
  if (step_index < 0) {
    raise(Errc::invalid_argument, "step_index must be >= 0, got " + std::to_string(step_index));
  }

  struct Candidate {
    std::string token;
    double prob;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(entries.size());
  std::set<std::string> seen;
  for (const auto& entry : entries) {
    if (entry.token.empty()) {
      raise(Errc::invalid_token, "empty token at step " + std::to_string(step_index));
    }
    if (entry.token == kOtherToken) {
      raise(Errc::invalid_token,
            "token collides with the reserved sentinel " + kOtherToken);
    }
    if (!(entry.logprob <= 0.0)) {  // also rejects NaN
      raise(Errc::invalid_token, "logprob for token '" + entry.token +
                                     "' must be <= 0, got " + format_mass(entry.logprob));
    }
    if (!seen.insert(entry.token).second) {
      raise(Errc::duplicate_token, "duplicate token '" + entry.token + "' at step " +
                                       std::to_string(step_index));
    }
    candidates.push_back({entry.token, std::exp(entry.logprob)});
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.prob != b.prob) return a.prob > b.prob;
    return a.token < b.token;
  });
  if (candidates.size() > static_cast<std::size_t>(k)) {
    candidates.resize(static_cast<std::size_t>(k));
  }

  double kept = 0.0;
  for (const auto& candidate : candidates) kept += candidate.prob;
  if (kept > 1.0 + kMassSlack) {
    raise(Errc::mass_overflow, "kept probability mass " + format_mass(kept) +
                                   " exceeds 1 at step " + std::to_string(step_index));
  }
  if (kept > 1.0) {
    for (auto& candidate : candidates) candidate.prob /= kept;
    kept = 1.0;
  }

  StepDistribution step;
  step.step_index = step_index;
  step.entries.reserve(candidates.size());
  for (auto& candidate : candidates) {
    step.entries.emplace_back(std::move(candidate.token), candidate.prob);
  }
  step.other_mass = (kept >= 1.0 - kOtherSnap) ? 0.0 : 1.0 - kept;
  return step;
}

AggregateDistribution aggregate(const std::vector<StepDistribution>& steps) {
  if (steps.empty()) raise(Errc::empty_step_list, "cannot aggregate zero steps");

  AggregateDistribution result;
  result.step_count = static_cast<int>(steps.size());
  auto& mass = result.mass;
  mass[kOtherToken] = 0.0;
  for (const auto& step : steps) {
    for (const auto& [token, prob] : step.entries) mass[token] += prob;
    mass[kOtherToken] += step.other_mass;
  }
  const double count = static_cast<double>(steps.size());
  for (auto& [token, prob] : mass) {
    (void)token;
    prob /= count;
  }
  return result;
}

std::pair<AggregateDistribution, AggregateDistribution> align(const AggregateDistribution& p,
                                                              const AggregateDistribution& q) {
  AggregateDistribution ap = p;
  AggregateDistribution aq = q;
  ap.mass.emplace(kOtherToken, 0.0);
  aq.mass.emplace(kOtherToken, 0.0);
  for (const auto& [token, prob] : p.mass) {
    (void)prob;
    aq.mass.emplace(token, 0.0);
  }
  for (const auto& [token, prob] : q.mass) {
    (void)prob;
    ap.mass.emplace(token, 0.0);
  }
  return {std::move(ap), std::move(aq)};
}

void validate_step(const StepDistribution& step) {
  if (step.step_index < 0) {
    raise(Errc::invalid_argument, "step_index must be >= 0, got " +
                                      std::to_string(step.step_index));
  }
  std::set<std::string> seen;
  for (const auto& [token, prob] : step.entries) {
    if (token.empty()) raise(Errc::invalid_token, "empty token in step distribution");
    if (token == kOtherToken) {
      raise(Errc::invalid_token, "kept entries may not use the reserved sentinel " + kOtherToken);
    }
    if (!seen.insert(token).second) {
      raise(Errc::duplicate_token, "duplicate token '" + token + "' in step distribution");
    }
    if (!(prob >= 0.0 && prob <= 1.0)) {
      raise(Errc::invalid_token,
            "probability for token '" + token + "' out of range: " + format_mass(prob));
    }
  }
  if (!(step.other_mass >= 0.0 && step.other_mass <= 1.0)) {
    raise(Errc::mass_overflow, "other_mass out of range: " + format_mass(step.other_mass));
  }
  const double total = step.total_mass();
  if (std::abs(total - 1.0) > 1e-6) {
    raise(Errc::mass_overflow, "step mass " + format_mass(total) + " is not within 1e-6 of 1");
  }
}

}  // namespace curio
