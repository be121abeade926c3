// Serial reference against the OpenMP kernels. Arg 1 selects the backend
// (0 serial, 1 parallel).

#include "covfield/kernels.hpp"
#include "covfield/sampling.hpp"

#include <benchmark/benchmark.h>

using namespace covfield;

namespace {

Backend backend_of(const benchmark::State& state) {
  return state.range(1) ? Backend::Parallel : Backend::Serial;
}

void BM_YMatrix(benchmark::State& state) {
  Rng rng(1);
  const auto m = Manifold::sphere2();
  const auto n = static_cast<int>(state.range(0));
  const auto support = random_points(rng, m, n, 2.0), obs = random_points(rng, m, n, 2.0);
  const Amplitude r = Amplitude::one_minus_over_t(1.0);
  for (auto _ : state) benchmark::DoNotOptimize(y_matrix(support, obs, r, backend_of(state)));
  state.SetItemsProcessed(state.iterations() * n * n);
}

void BM_PairwiseStats(benchmark::State& state) {
  const EmpiricalSample s = sample_uniform_sphere(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(pairwise_trace_stats(s.points, Amplitude::unit(), backend_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * (state.range(0) - 1) / 2);
}

void BM_SampleTraceField(benchmark::State& state) {
  Rng rng(3);
  const auto m = Manifold::sphere2();
  const auto at = random_points(rng, m, 64, 1.0);
  const Mat sample = pack_points(random_points(rng, m, static_cast<int>(state.range(0)), 1.0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample_trace_field_with_variance(at, sample, Amplitude::unit(), backend_of(state)));
  }
  state.SetItemsProcessed(state.iterations() * 64 * state.range(0));
}

void BM_FieldGrid(benchmark::State& state) {
  Rng rng(4);
  const auto m = Manifold::hyperbolic2();
  const Pmf f(random_points(rng, m, 200, 1.5), random_simplex(rng, 200));
  const auto grid = random_points(rng, m, static_cast<int>(state.range(0)), 1.5);
  for (auto _ : state) benchmark::DoNotOptimize(field_grid(f, grid, Amplitude::unit(), backend_of(state)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_YMatrix)->ArgsProduct({{64, 512}, {0, 1}});
BENCHMARK(BM_PairwiseStats)->ArgsProduct({{500, 2000}, {0, 1}});
BENCHMARK(BM_SampleTraceField)->ArgsProduct({{10000, 100000}, {0, 1}});
BENCHMARK(BM_FieldGrid)->ArgsProduct({{64, 512}, {0, 1}});

BENCHMARK_MAIN();
