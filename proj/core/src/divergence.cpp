#include "curio/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"

#include "curio/errors.hpp"

namespace curio {
namespace {

void require_aligned(const AggregateDistribution& p, const AggregateDistribution& q) {
  if (p.same_support(q)) return;
  for (const auto& [token, prob] : p.mass) {
    (void)prob;
    if (q.mass.find(token) == q.mass.end()) {
      raise(Errc::unaligned_supports, "token '" + token + "' missing from the second support");
    }
  }
  for (const auto& [token, prob] : q.mass) {
    (void)prob;
    if (p.mass.find(token) == p.mass.end()) {
      raise(Errc::unaligned_supports, "token '" + token + "' missing from the first support");
    }
  }
  raise(Errc::unaligned_supports, "supports differ");
}

// Contribution of one token to js(p, q). Non-negative up to rounding noise
// by the log-sum inequality; tiny negative noise is snapped to zero so the
// decomposition stays a sum of non-negative terms.
double js_term(double pw, double qw) {
  const double mid = 0.5 * (pw + qw);
  if (mid <= 0.0) return 0.0;
  double term = 0.0;
  if (pw > 0.0) term += 0.5 * pw * std::log2(pw / mid);
  if (qw > 0.0) term += 0.5 * qw * std::log2(qw / mid);
  return term < 0.0 ? 0.0 : term;
}

}  // namespace

double kl(const AggregateDistribution& p, const AggregateDistribution& q) {
  require_aligned(p, q);
  double total = 0.0;
  auto qi = q.mass.begin();
  for (const auto& [token, pw] : p.mass) {
    (void)token;
    const double qw = (qi++)->second;
    if (pw <= 0.0) continue;
    if (qw <= 0.0) return std::numeric_limits<double>::infinity();
    total += pw * std::log2(pw / qw);
  }
  return total < 0.0 ? 0.0 : total;
}

double js(const AggregateDistribution& p, const AggregateDistribution& q) {
  require_aligned(p, q);
  double total = 0.0;
  auto qi = q.mass.begin();
  for (const auto& [token, pw] : p.mass) {
    (void)token;
    total += js_term(pw, (qi++)->second);
  }
  return total > 1.0 ? 1.0 : total;
}

std::vector<std::pair<std::string, double>> token_contributions(const AggregateDistribution& p,
                                                                const AggregateDistribution& q) {
  require_aligned(p, q);
  std::vector<std::pair<std::string, double>> contributions;
  contributions.reserve(p.mass.size());
  auto qi = q.mass.begin();
  for (const auto& [token, pw] : p.mass) {
    contributions.emplace_back(token, js_term(pw, (qi++)->second));
  }
  std::sort(contributions.begin(), contributions.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  return contributions;
}

InfoGainReport js_tail_adjusted(const AggregateDistribution& p, const AggregateDistribution& q,
                                double lambda) {
  if (!(lambda > 0.0)) {  // also rejects NaN
    raise(Errc::non_positive_lambda, "lambda must be > 0");
  }
  InfoGainReport report;
  report.js_bits = js(p, q);
  report.prior_other = p.at(kOtherToken);
  report.posterior_other = q.at(kOtherToken);
  report.lambda_used = lambda;
  report.js_star_bits =
      report.js_bits + lambda * 0.5 * (report.prior_other + report.posterior_other);
  report.contributions = token_contributions(p, q);
  return report;
}

InfoGainReport info_gain(const std::vector<StepDistribution>& prior_steps,
                         const std::vector<StepDistribution>& posterior_steps, double lambda) {
  const AggregateDistribution prior = aggregate(prior_steps);
  const AggregateDistribution posterior = aggregate(posterior_steps);
  auto [p, q] = align(prior, posterior);
  return js_tail_adjusted(p, q, lambda);
}

std::string report_to_json(const InfoGainReport& report, int indent) {
  nlohmann::ordered_json doc;
  doc["js_bits"] = report.js_bits;
  doc["js_star_bits"] = report.js_star_bits;
  doc["prior_other"] = report.prior_other;
  doc["posterior_other"] = report.posterior_other;
  doc["lambda"] = report.lambda_used;
  auto contributions = nlohmann::ordered_json::array();
  for (const auto& [token, value] : report.contributions) {
    contributions.push_back(nlohmann::ordered_json::array({token, value}));
  }
  doc["contributions"] = std::move(contributions);
  return doc.dump(indent);
}

}  // namespace curio
