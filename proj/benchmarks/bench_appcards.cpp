#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "curio/appcards.hpp"

namespace {

std::string sample_card_text(int entries) {
  std::string text = "### Sample App:\n";
  for (int i = 1; i <= entries; ++i) {
    text += std::to_string(i) + ". Feature " + std::to_string(i) +
            ": tap the button, fill the form, and save the result.\n";
    text += "   Continuation line with further detail for entry " + std::to_string(i) + ".\n";
  }
  return text;
}

curio::CardStore sample_store(int apps) {
  curio::CardStore store;
  for (int a = 0; a < apps; ++a) {
    std::vector<curio::CardEntry> entries;
    for (int i = 1; i <= 8; ++i) {
      curio::CardEntry entry;
      entry.index = i;
      entry.title = "Feature " + std::to_string(i);
      entry.body = "open the list, search for an item, and share the result";
      entry.category = curio::infer_category(entry.title, entry.body);
      entries.push_back(std::move(entry));
    }
    store.put(curio::make_card("App " + std::to_string(a), std::move(entries)));
  }
  return store;
}

void BM_parse_card(benchmark::State& state) {
  const std::string text = sample_card_text(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(curio::parse_card(text));
  }
}
BENCHMARK(BM_parse_card)->Arg(4)->Arg(16)->Arg(64);

void BM_render_card(benchmark::State& state) {
  const curio::AppCard card = curio::parse_card(sample_card_text(static_cast<int>(state.range(0))));
  for (auto _ : state) {
    benchmark::DoNotOptimize(curio::render_card(card));
  }
}
BENCHMARK(BM_render_card)->Arg(4)->Arg(16)->Arg(64);

void BM_canonicalize(benchmark::State& state) {
  std::string text = sample_card_text(16);
  text += "   trailing detail  \r\n";
  for (auto _ : state) {
    benchmark::DoNotOptimize(curio::canonicalize_card_text(text));
  }
}
BENCHMARK(BM_canonicalize);

void BM_select_cards(benchmark::State& state) {
  const curio::CardStore store = sample_store(static_cast<int>(state.range(0)));
  const std::string task = "search the list and share an item from app 3";
  for (auto _ : state) {
    benchmark::DoNotOptimize(curio::select_cards(task, store, 2));
  }
}
BENCHMARK(BM_select_cards)->Arg(4)->Arg(32)->Arg(128);

void BM_inject(benchmark::State& state) {
  const curio::CardStore store = sample_store(4);
  const auto cards = store.all_current();
  const std::string prompt(2048, 'p');
  for (auto _ : state) {
    benchmark::DoNotOptimize(curio::inject(prompt, cards));
  }
}
BENCHMARK(BM_inject);

}  // namespace

BENCHMARK_MAIN();
