#include <benchmark/benchmark.h>

#include "embkit/embstore.hpp"

using namespace embkit;

namespace {

embstore::EmbeddingSpace bench_space(std::size_t words, std::size_t dim) {
  corpus::Vocabulary vocab;
  num::Matrix m(words + 1, dim);
  num::Rng rng(5);
  for (std::size_t i = 0; i < words; ++i) vocab.add("w" + std::to_string(i), 1);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return {std::move(vocab), std::move(m), "bench"};
}

void bm_neighbors(benchmark::State& state) {
  const auto words = static_cast<std::size_t>(state.range(0));
  const auto space = bench_space(words, 128);
  space.normalized();  // build outside the timed loop
  for (auto _ : state) {
    benchmark::DoNotOptimize(embstore::neighbors(space, "w0", 10));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(words));
}

}  // namespace

BENCHMARK(bm_neighbors)->Arg(1000)->Arg(10000)->Arg(50000);
