#include <jawgrasp/mesh.hpp>
#include <jawgrasp/metrics.hpp>
#include <jawgrasp/rng.hpp>

#include <benchmark/benchmark.h>

#include <vector>

using namespace jawgrasp;

static void BM_ForceClosure(benchmark::State& state) {
  const PointCloud s = sample_surface(make_cylinder(0.03, 0.1, 48), 1024, 2);
  const FrictionGrid grid;
  Rng rng(3);
  std::vector<ContactPair> pairs;
  for (int i = 0; i < 1024; ++i) {
    const auto a = rng.below(s.size()), b = rng.below(s.size());
    if (a != b) pairs.push_back({s.points[a], s.points[b], s.normals[a], s.normals[b]});
  }
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(q_fc(pairs[i++ % pairs.size()], grid));
}
BENCHMARK(BM_ForceClosure);

static void BM_GraspScore(benchmark::State& state) {
  const TriMesh mesh = make_sphere(0.03, 48);
  MetricsConfig cfg;
  const SurfacePatches patches(mesh, cfg.dense_samples, cfg.seed);
  const ContactPair c = contacts_on_mesh(mesh, Vec3(-0.03, 0, 0), Vec3(0.03, 0, 0), 2e-3);
  for (auto _ : state) benchmark::DoNotOptimize(score_grasp(c, mesh, patches, cfg));
}
BENCHMARK(BM_GraspScore)->Unit(benchmark::kMicrosecond);
