#pragma once

#include <string>
#include <utility>
#include <vector>

#include "curio/distributions.hpp"

namespace curio {

// Default weight of the residual-bucket adjustment in js_tail_adjusted.
inline constexpr double kDefaultLambda = 0.5;

// Score for one prior/posterior pair. js_star_bits is the gating signal:
// js_bits plus lambda times the mean residual mass of the two sides.
struct InfoGainReport {
  double js_bits = 0.0;
  double js_star_bits = 0.0;
  double prior_other = 0.0;
  double posterior_other = 0.0;
  double lambda_used = kDefaultLambda;
  // Per-token share of js_bits, sorted descending (ties by token ascending).
  std::vector<std::pair<std::string, double>> contributions;
};

// Kullback-Leibler divergence KL(p || q) in bits over aligned supports.
// Terms with p(w) = 0 contribute nothing; any token with p(w) > 0 and
// q(w) = 0 makes the divergence infinite, reported as +inf rather than
// raised as an error.
double kl(const AggregateDistribution& p, const AggregateDistribution& q);

// Jensen-Shannon divergence in bits against the pointwise midpoint. Always
// finite and within [0, 1]; zero exactly when the inputs agree pointwise.
double js(const AggregateDistribution& p, const AggregateDistribution& q);

// Splits js(p, q) into one non-negative term per token; the terms sum back
// to js(p, q). Sorted by contribution descending, ties by token ascending.
std::vector<std::pair<std::string, double>> token_contributions(const AggregateDistribution& p,
                                                                const AggregateDistribution& q);

// js plus the residual-bucket adjustment: js_star = js + lambda * (p_other +
// q_other) / 2. The adjustment keeps divergence visible when both sides push
// probability into the unkept tail. lambda must be positive.
InfoGainReport js_tail_adjusted(const AggregateDistribution& p, const AggregateDistribution& q,
                                double lambda = kDefaultLambda);

// Full scoring pipeline for one transition: aggregate both step lists, align
// them, and score with js_tail_adjusted.
InfoGainReport info_gain(const std::vector<StepDistribution>& prior_steps,
                         const std::vector<StepDistribution>& posterior_steps,
                         double lambda = kDefaultLambda);

// Serializes a report to its documented JSON shape:
// {"js_bits", "js_star_bits", "prior_other", "posterior_other", "lambda",
//  "contributions": [[token, value], ...]}.
std::string report_to_json(const InfoGainReport& report, int indent = -1);

}  // namespace curio
