#include <jawgrasp/net.hpp>
#include <jawgrasp/rng.hpp>

#include <benchmark/benchmark.h>

using namespace jawgrasp;

namespace {

Batch random_batch(int batch, int n) {
  Rng rng(5);
  Batch b;
  b.batch = static_cast<std::size_t>(batch);
  b.n_points = static_cast<std::size_t>(n);
  b.points.resize(batch * n, 3);
  for (Eigen::Index i = 0; i < b.points.rows(); ++i)
    for (int k = 0; k < 3; ++k) b.points(i, k) = rng.uniform(-0.05, 0.05);
  b.labels.assign(static_cast<std::size_t>(batch), 0);
  return b;
}

}  // namespace

static void BM_ForwardDefault(benchmark::State& state) {
  const NetParams p = init_params(NetConfig{});
  const Batch b = random_batch(static_cast<int>(state.range(0)), 1000);
  for (auto _ : state) benchmark::DoNotOptimize(forward(p, b, false, 0));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardDefault)->Arg(1)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_ForwardBackwardDefault(benchmark::State& state) {
  const NetParams p = init_params(NetConfig{});
  const Batch b = random_batch(8, 1000);
  for (auto _ : state) {
    ForwardCache cache;
    forward(p, b, true, 1, &cache);
    benchmark::DoNotOptimize(backward(p, b, cache));
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_ForwardBackwardDefault)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
