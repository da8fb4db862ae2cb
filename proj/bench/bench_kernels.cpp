#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "ise/kernels.hpp"

namespace {

using namespace ise;

struct SimSetup {
  embedding::EmbeddingStore store{384};
  kernels::SentenceBatch batch;
  std::vector<std::size_t> goals;

  explicit SimSetup(std::size_t reviews) {
    std::mt19937_64 rng(1);
    std::normal_distribution<float> z;
    const std::size_t n_sentences = 4096;
    std::vector<float> v(384);
    for (std::size_t i = 0; i < n_sentences + 8; ++i) {
      for (auto& x : v) x = z(rng);
      store.add("k" + std::to_string(i), v);
    }
    for (std::size_t g = 0; g < 8; ++g) goals.push_back(n_sentences + g);
    for (std::size_t r = 0; r < reviews; ++r) {
      const auto n = 1 + rng() % 5;
      for (std::size_t s = 0; s < n; ++s) batch.rows.push_back(rng() % n_sentences);
      batch.offsets.push_back(batch.rows.size());
    }
  }
};

template <bool Parallel>
void BM_MaxSimilarity(benchmark::State& state) {
  SimSetup s(static_cast<std::size_t>(state.range(0)));
  std::vector<kernels::MaxSim> out(s.batch.reviews() * s.goals.size());
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::max_similarity(s.store, s.batch, s.goals, out);
    } else {
      kernels::max_similarity_serial(s.store, s.batch, s.goals, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(out.size()));
}

template <bool Parallel>
void BM_ShuffledRbo(benchmark::State& state) {
  std::vector<std::uint32_t> universe(static_cast<std::size_t>(state.range(0)));
  std::iota(universe.begin(), universe.end(), 0u);
  std::vector<std::uint32_t> reference(universe.begin(), universe.begin() + universe.size() / 2);
  std::vector<double> out(1000);
  for (auto _ : state) {
    if constexpr (Parallel) {
      kernels::shuffled_rbo(universe, reference, {}, 42, out);
    } else {
      kernels::shuffled_rbo_serial(universe, reference, {}, 42, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(out.size()));
}

template <bool Parallel>
void BM_StubEmbed(benchmark::State& state) {
  std::vector<std::string> texts;
  for (int i = 0; i < state.range(0); ++i) {
    texts.push_back("the pay is good and the hours are flexible number " + std::to_string(i));
  }
  for (auto _ : state) {
    auto v = Parallel ? kernels::stub_embed_all(texts, 384, 7) : kernels::stub_embed_all_serial(texts, 384, 7);
    benchmark::DoNotOptimize(v.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_MaxSimilarity<false>)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MaxSimilarity<true>)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ShuffledRbo<false>)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ShuffledRbo<true>)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StubEmbed<false>)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StubEmbed<true>)->Arg(2000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
