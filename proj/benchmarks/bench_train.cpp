#include <benchmark/benchmark.h>

#include "embkit/corpus.hpp"
#include "embkit/nmt.hpp"
#include "embkit/skipgram.hpp"

using namespace embkit;

namespace {

std::shared_ptr<corpus::Vocabulary> bench_vocab(std::size_t n) {
  auto vocab = std::make_shared<corpus::Vocabulary>();
  for (std::size_t i = 0; i < n; ++i) vocab->add("w" + std::to_string(i), 10);
  return vocab;
}

void bm_sgns_step(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  auto vocab = bench_vocab(1000);
  num::Rng init(1);
  auto model = skipgram::init_model(vocab, dim, init);
  const skipgram::NoiseDistribution noise(*vocab, 0.75);
  num::Rng rng(2);
  for (auto _ : state) {
    const skipgram::TrainingPair pair{1 + static_cast<int>(rng.below(1000)),
                                      1 + static_cast<int>(rng.below(1000))};
    benchmark::DoNotOptimize(skipgram::sgns_step(model, pair, 5, noise, rng, 0.025));
  }
}

void bm_sequence_loss_grad(benchmark::State& state) {
  const bool attention = state.range(0) != 0;
  nmt::Config config;
  config.variant = attention ? nmt::Variant::attention : nmt::Variant::plain;
  config.dim = 32;
  config.hidden = 64;
  num::Rng init(3);
  auto model = nmt::init_model(bench_vocab(200), bench_vocab(200), config, init);
  num::Rng rng(4);
  std::vector<int> src, tgt;
  for (int i = 0; i < 8; ++i) {
    src.push_back(1 + static_cast<int>(rng.below(200)));
    tgt.push_back(1 + static_cast<int>(rng.below(200)));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(nmt::sequence_loss_grad(model, src, tgt, {}));
    model.params.zero_grads();
  }
}

}  // namespace

BENCHMARK(bm_sgns_step)->Arg(64)->Arg(128)->Arg(300);
BENCHMARK(bm_sequence_loss_grad)->Arg(0)->Arg(1);
