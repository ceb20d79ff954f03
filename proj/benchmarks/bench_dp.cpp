#include <benchmark/benchmark.h>

#include <vector>

#include "pdboo/dp.hpp"
#include "pdboo/mdp.hpp"
#include "pdboo/perturbation.hpp"
#include "pdboo/rng.hpp"

namespace {

pdboo::TabularMDP default_chain() {
  return pdboo::nchain_make(10.0, 0.1, pdboo::RewardDist::half_half(5.0, 13.0, 0.1));
}

void bench_projection(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  pdboo::Rng rng(11);
  pdboo::ParticleSet set;
  set.particles.resize(static_cast<std::size_t>(8 * n));
  const double w = 1.0 / static_cast<double>(set.particles.size());
  for (auto& p : set.particles) p = {rng.uniform(-10.0, 10.0), w};
  for (auto _ : state) {
    benchmark::DoNotOptimize(pdboo::project_to_quantiles(set, n));
  }
}
BENCHMARK(bench_projection)->Arg(64)->Arg(200)->Arg(512);

void bench_operator_apply(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto mdp = default_chain();
  const auto rewards = pdboo::discretize_all_rewards(mdp, 64);
  pdboo::Rng rng(11);
  auto table = pdboo::DistTable::zeros(mdp.n_states, mdp.n_actions, n);
  const auto xi =
      pdboo::make_xi(pdboo::sample_simplex(pdboo::DirichletParams{}, n, rng), 0.01);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pdboo::pdboo_apply(table, xi, mdp, rewards));
  }
}
BENCHMARK(bench_operator_apply)->Arg(64)->Arg(200)->Arg(512);

}  // namespace
