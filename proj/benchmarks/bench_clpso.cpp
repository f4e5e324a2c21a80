#include <benchmark/benchmark.h>

#include <cmath>
#include <span>
#include <vector>

#include "entrofuse/clpso.hpp"

using namespace entrofuse;

namespace {

double sphere(std::span<const double> x) {
  double sum = 0.0;
  for (double v : x) sum += v * v;
  return -sum;
}

double rastrigin(std::span<const double> x) {
  constexpr double two_pi = 6.283185307179586476925286766559;
  double sum = 10.0 * static_cast<double>(x.size());
  for (double v : x) {
    sum += v * v - 10.0 * std::cos(two_pi * v);
  }
  return -sum;
}

// Cost of the swarm machinery itself: exemplar upkeep, velocity updates,
// bookkeeping. The fitness functions are nearly free, so time per iteration
// is dominated by the optimizer.
void BM_SwarmIteration(benchmark::State& state) {
  const std::size_t dim = static_cast<std::size_t>(state.range(0));
  SwarmConfig config;
  config.pop_size = static_cast<std::size_t>(state.range(1));
  config.max_iter = 100;
  config.seed = 42;
  const Box box = Box::uniform(dim, -5.0, 5.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_clpso(config, dim, box, sphere));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(config.max_iter) *
                          static_cast<std::int64_t>(config.pop_size));
}
BENCHMARK(BM_SwarmIteration)
    ->Args({3, 10})
    ->Args({10, 10})
    ->Args({30, 40})
    ->Unit(benchmark::kMillisecond);

void BM_SwarmRastrigin(benchmark::State& state) {
  const std::size_t dim = static_cast<std::size_t>(state.range(0));
  SwarmConfig config;
  config.pop_size = 10;
  config.max_iter = 200;
  config.seed = 7;
  const Box box = Box::uniform(dim, -5.12, 5.12);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_clpso(config, dim, box, rastrigin));
  }
}
BENCHMARK(BM_SwarmRastrigin)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_ExemplarAssignment(benchmark::State& state) {
  const std::size_t pop = static_cast<std::size_t>(state.range(0));
  SwarmConfig config;
  config.pop_size = pop;
  config.max_iter = 1;
  config.seed = 3;
  const std::size_t dim = 10;
  Swarm swarm(config, Box::uniform(dim, 0.0, 1.0), sphere);
  swarm.initialize();
  std::size_t index = 0;
  for (auto _ : state) {
    swarm.assign_exemplar(index);
    index = (index + 1) % pop;
  }
}
BENCHMARK(BM_ExemplarAssignment)->Arg(10)->Arg(40);

} // namespace
