#include <benchmark/benchmark.h>

#include <cmath>
#include <string>
#include <vector>

#include "curio/distributions.hpp"
#include "curio/gate.hpp"
#include "curio/harness.hpp"

namespace {

std::vector<curio::TransitionRecord> synthetic_episode(int transitions) {
  std::vector<curio::TransitionRecord> episode;
  episode.reserve(static_cast<std::size_t>(transitions));
  for (int i = 0; i < transitions; ++i) {
    const double d = 0.1 + 0.3 * (static_cast<double>(i % 7) / 7.0);
    curio::TransitionRecord record;
    record.state = {"s" + std::to_string(i), {}, "screen", "app" + std::to_string(i % 3)};
    record.action = curio::Action::tap_by_index(i % 5);
    record.next_state = {"s" + std::to_string(i + 1), {}, "screen",
                         "app" + std::to_string(i % 3)};
    record.prior_steps = {curio::step_from_logprobs({{"a", 0.0}}, 2, 0)};
    record.posterior_steps = {
        curio::step_from_logprobs({{"a", std::log(1.0 - d)}, {"b", std::log(d)}}, 2, 0)};
    episode.push_back(std::move(record));
  }
  return episode;
}

void BM_replay_gate_only(benchmark::State& state) {
  const auto episode = synthetic_episode(static_cast<int>(state.range(0)));
  curio::GateConfig config;
  config.tau = 1e9;
  for (auto _ : state) {
    benchmark::DoNotOptimize(curio::replay(episode, config, 0.5));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_replay_gate_only)->Arg(16)->Arg(128)->Arg(1024);

void BM_gate_fold_100(benchmark::State& state) {
  curio::GateConfig config;
  config.tau = 1e9;
  for (auto _ : state) {
    curio::AppAccumulator acc = curio::make_accumulator("app");
    for (int i = 0; i < 100; ++i) acc = curio::record(std::move(acc), 0.25, config);
    benchmark::DoNotOptimize(acc.u_value);
  }
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_gate_fold_100);

void BM_live_step_mock(benchmark::State& state) {
  const curio::MockModelClient model(42);
  const curio::UiState from{"home", {}, "home screen", "markor"};
  const curio::UiState to{"editor", {}, "note editor", "markor"};
  const curio::Action action = curio::Action::tap_by_text("New");
  for (auto _ : state) {
    benchmark::DoNotOptimize(curio::live_step(model, from, action, to, 0.5));
  }
}
BENCHMARK(BM_live_step_mock);

}  // namespace

BENCHMARK_MAIN();
