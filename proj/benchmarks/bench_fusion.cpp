#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "entrofuse/fusion.hpp"
#include "entrofuse/pipeline.hpp"
#include "entrofuse/rng.hpp"
#include "entrofuse/synthetic.hpp"
#include "entrofuse/types.hpp"

using namespace entrofuse;

namespace {

ProbabilityStack demo_stack(std::size_t k_models, std::size_t side) {
  RandomStream rng(1, 0);
  const LabelMask truth = random_shape_mask(side, side, 2, rng);
  std::vector<SyntheticPredictorSpec> specs;
  for (std::size_t k = 0; k < k_models; ++k) {
    specs.push_back({"m" + std::to_string(k), 0.6 + 0.05 * k, 3.0 + k, 0,
                     100 + k});
  }
  return synthesize_stack(truth, specs, 2, 0, 0);
}

ThresholdVector mid_thresholds(std::size_t k_models) {
  return ThresholdVector(std::vector<double>(k_models, 0.5 * std::log(2.0)));
}

void BM_ShannonEntropy(benchmark::State& state) {
  const std::size_t m = static_cast<std::size_t>(state.range(0));
  std::vector<double> row(m, 1.0 / static_cast<double>(m));
  for (auto _ : state) {
    benchmark::DoNotOptimize(shannon_entropy(row));
  }
}
BENCHMARK(BM_ShannonEntropy)->Arg(2)->Arg(5)->Arg(19);

void BM_FusePixel(benchmark::State& state) {
  const std::size_t k = static_cast<std::size_t>(state.range(0));
  RandomStream rng(7);
  std::vector<double> rows(k * 2);
  for (std::size_t i = 0; i < k; ++i) {
    const double p = rng.uniform(0.05, 0.95);
    rows[i * 2] = p;
    rows[i * 2 + 1] = 1.0 - p;
  }
  const std::vector<double> thresholds(k, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fuse_pixel(rows, thresholds, 2));
  }
}
BENCHMARK(BM_FusePixel)->Arg(3)->Arg(9);

// Deployment path: renormalize + entropy + gate + argmax over a full image.
void BM_FuseStack(benchmark::State& state) {
  const std::size_t k = static_cast<std::size_t>(state.range(0));
  const std::size_t side = static_cast<std::size_t>(state.range(1));
  const ProbabilityStack stack = demo_stack(k, side);
  const ThresholdVector thresholds = mid_thresholds(k);
  const unsigned threads = static_cast<unsigned>(state.range(2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fuse_stack(stack, thresholds, threads));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(stack.pixel_count()));
}
BENCHMARK(BM_FuseStack)
    ->Args({3, 128, 1})
    ->Args({3, 128, 4})
    ->Args({9, 256, 1})
    ->Args({9, 256, 4})
    ->Unit(benchmark::kMillisecond);

// Training path: one fitness evaluation on a prepared prediction matrix
// (entropies precomputed, only gate + tally remain).
void BM_FitnessEvaluation(benchmark::State& state) {
  const std::size_t k = static_cast<std::size_t>(state.range(0));
  const std::size_t images = static_cast<std::size_t>(state.range(1));
  PredictionMatrix matrix;
  matrix.k_models = k;
  matrix.m_classes = 2;
  std::vector<SyntheticPredictorSpec> specs;
  for (std::size_t i = 0; i < k; ++i) {
    specs.push_back({"m" + std::to_string(i), 0.6 + 0.04 * i, 3.0 + i, 0,
                     200 + i});
  }
  for (std::size_t n = 0; n < images; ++n) {
    RandomStream rng(2, n);
    const LabelMask truth = random_shape_mask(64, 64, 2, rng);
    matrix.images.push_back(matrix_image_from(
        synthesize_stack(truth, specs, 2, n % 5, n), truth,
        "img" + std::to_string(n), n % 5));
  }
  const ThresholdVector thresholds = mid_thresholds(k);
  const unsigned threads = static_cast<unsigned>(state.range(2));
  for (auto _ : state) {
    benchmark::DoNotOptimize(fitness_of(thresholds, matrix, threads));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(matrix.pixel_count()));
}
BENCHMARK(BM_FitnessEvaluation)
    ->Args({3, 20, 1})
    ->Args({3, 20, 4})
    ->Args({9, 20, 1})
    ->Args({9, 20, 4})
    ->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
