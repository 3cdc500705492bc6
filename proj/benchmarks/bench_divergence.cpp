#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "curio/distributions.hpp"
#include "curio/divergence.hpp"

namespace {

std::vector<curio::TokenEntry> synthetic_entries(std::mt19937_64& rng, int count) {
  std::uniform_real_distribution<double> weight(0.05, 1.0);
  std::vector<double> weights(static_cast<std::size_t>(count));
  double sum = 0.0;
  for (double& w : weights) {
    w = weight(rng);
    sum += w;
  }
  const double scale = 0.98 / sum;
  std::vector<curio::TokenEntry> entries;
  entries.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    entries.push_back(
        {"tok" + std::to_string(i), std::log(weights[static_cast<std::size_t>(i)] * scale)});
  }
  return entries;
}

std::vector<curio::StepDistribution> synthetic_steps(std::uint64_t seed, int steps, int vocab,
                                                     int k) {
  std::mt19937_64 rng(seed);
  std::vector<curio::StepDistribution> list;
  list.reserve(static_cast<std::size_t>(steps));
  for (int t = 0; t < steps; ++t) {
    list.push_back(curio::step_from_logprobs(synthetic_entries(rng, vocab), k, t));
  }
  return list;
}

void BM_step_from_logprobs(benchmark::State& state) {
  std::mt19937_64 rng(7);
  const auto entries = synthetic_entries(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(curio::step_from_logprobs(entries, 19, 0));
  }
}
BENCHMARK(BM_step_from_logprobs)->Arg(32)->Arg(128)->Arg(512);

void BM_aggregate(benchmark::State& state) {
  const auto steps =
      synthetic_steps(11, static_cast<int>(state.range(0)), 64, 19);
  for (auto _ : state) {
    benchmark::DoNotOptimize(curio::aggregate(steps));
  }
}
BENCHMARK(BM_aggregate)->Arg(4)->Arg(16)->Arg(64);

void BM_js(benchmark::State& state) {
  const auto prior = curio::aggregate(synthetic_steps(21, 8, 64, 19));
  const auto posterior = curio::aggregate(synthetic_steps(22, 8, 64, 19));
  const auto [p, q] = curio::align(prior, posterior);
  for (auto _ : state) {
    benchmark::DoNotOptimize(curio::js(p, q));
  }
}
BENCHMARK(BM_js);

void BM_token_contributions(benchmark::State& state) {
  const auto prior = curio::aggregate(synthetic_steps(21, 8, 64, 19));
  const auto posterior = curio::aggregate(synthetic_steps(22, 8, 64, 19));
  const auto [p, q] = curio::align(prior, posterior);
  for (auto _ : state) {
    benchmark::DoNotOptimize(curio::token_contributions(p, q));
  }
}
BENCHMARK(BM_token_contributions);

void BM_info_gain(benchmark::State& state) {
  const int steps = static_cast<int>(state.range(0));
  const auto prior = synthetic_steps(31, steps, 64, 19);
  const auto posterior = synthetic_steps(32, steps, 64, 19);
  for (auto _ : state) {
    benchmark::DoNotOptimize(curio::info_gain(prior, posterior, 0.5));
  }
}
BENCHMARK(BM_info_gain)->Arg(1)->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
