#include <jawgrasp/hull.hpp>
#include <jawgrasp/mesh.hpp>
#include <jawgrasp/raycast.hpp>
#include <jawgrasp/rng.hpp>

#include <benchmark/benchmark.h>

#include <vector>

using namespace jawgrasp;

static void BM_ConvexHull(benchmark::State& state) {
  Rng rng(1);
  std::vector<Vec3> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = Vec3(rng.normal(), rng.normal(), rng.normal());
  for (auto _ : state) benchmark::DoNotOptimize(convex_hull(pts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConvexHull)->Arg(64)->Arg(512)->Arg(4096);

static void BM_RaycastSphere(benchmark::State& state) {
  const TriMesh sphere = make_sphere(0.05, static_cast<int>(state.range(0)));
  const RigidTransform pose = look_at(Vec3(0.3, 0.0, 0.2), Vec3::Zero());
  CameraIntrinsics cam;
  cam.width = 320;
  cam.height = 240;
  cam.fx = cam.fy = 262.5;
  cam.cx = 159.5;
  cam.cy = 119.5;
  for (auto _ : state) benchmark::DoNotOptimize(raycast_depth(sphere, pose, cam));
  state.SetItemsProcessed(state.iterations() * cam.width * cam.height);
}
BENCHMARK(BM_RaycastSphere)->Arg(24)->Arg(64)->Unit(benchmark::kMillisecond);
