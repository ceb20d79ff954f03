#include <benchmark/benchmark.h>

#include <vector>

#include "pdboo/quantile.hpp"
#include "pdboo/rng.hpp"

namespace {

std::vector<double> random_vector(std::size_t n, pdboo::Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-10.0, 10.0);
  return v;
}

void bench_loss_plain(benchmark::State& state) {
  pdboo::Rng rng(7);
  const auto pred = random_vector(200, rng);
  const auto targets = random_vector(200, rng);
  const pdboo::HuberParams p;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pdboo::quantile_huber_grad(pred, targets, p));
  }
}
BENCHMARK(bench_loss_plain);

void bench_loss_fast(benchmark::State& state) {
  pdboo::Rng rng(7);
  const auto pred = random_vector(200, rng);
  const auto targets = random_vector(200, rng);
  const auto sorted = pdboo::SortedTargets::build(targets);
  const pdboo::HuberParams p;
  std::vector<double> grad(pred.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(pdboo::quantile_huber_fast(pred, sorted, p, grad));
  }
}
BENCHMARK(bench_loss_fast);

}  // namespace

BENCHMARK_MAIN();
