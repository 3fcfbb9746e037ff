#include <benchmark/benchmark.h>

#include "embkit/numerics.hpp"

using namespace embkit;

namespace {

void fill_random(num::ParamSet& ps, num::Rng& rng) {
  for (std::size_t h = 0; h < ps.count(); ++h) {
    auto& m = ps.value(h);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-0.5, 0.5);
  }
}

void bm_softmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  num::Rng rng(1);
  num::Vector logits(n);
  for (double& x : logits) x = rng.uniform(-5.0, 5.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(num::softmax(logits));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(n));
}

void bm_gru_step(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  num::ParamSet ps;
  const auto gru = num::make_gru(ps, "g", h, h);
  num::Rng rng(2);
  fill_random(ps, rng);
  num::Vector x(h), hidden(h);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  for (double& v : hidden) v = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(num::gru_step(ps, gru, x, hidden));
  }
}

void bm_gru_backward(benchmark::State& state) {
  const auto h = static_cast<std::size_t>(state.range(0));
  num::ParamSet ps;
  const auto gru = num::make_gru(ps, "g", h, h);
  num::Rng rng(3);
  fill_random(ps, rng);
  num::Vector x(h), hidden(h), dh(h, 1.0);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  for (double& v : hidden) v = rng.uniform(-1.0, 1.0);
  num::GruCache cache;
  num::gru_step(ps, gru, x, hidden, &cache);
  num::Vector dx(h), dh_prev(h);
  for (auto _ : state) {
    std::fill(dx.begin(), dx.end(), 0.0);
    std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
    num::gru_backward(ps, gru, cache, dh, dx, dh_prev);
    benchmark::DoNotOptimize(dx.data());
    ps.zero_grads();
  }
}

}  // namespace

BENCHMARK(bm_softmax)->Arg(64)->Arg(1024)->Arg(16384);
BENCHMARK(bm_gru_step)->Arg(32)->Arg(128)->Arg(256);
BENCHMARK(bm_gru_backward)->Arg(32)->Arg(128)->Arg(256);
