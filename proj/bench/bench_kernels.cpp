// Serial reference vs OpenMP builds of the batch kernels on the same inputs.

#include "epiguide/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace epiguide;

namespace {

const std::shared_ptr<const AnimatedAnatomy>& phantom_ptr() {
  static const auto a = std::make_shared<const AnimatedAnatomy>(generate_phantom(PhantomConfig{}));
  return a;
}

const AnimatedAnatomy& phantom() { return *phantom_ptr(); }

std::vector<NeedlePose> random_poses(int n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0, 1);
  std::vector<NeedlePose> poses;
  for (int i = 0; i < n; ++i) {
    poses.push_back(make_pose(Vec3(40 * g(rng), 40 * g(rng), 40 * g(rng)), Vec3(g(rng), g(rng), g(rng))));
  }
  return poses;
}

std::vector<Obstacle> obstacles() {
  PlanningScene scene;
  scene.anatomy = phantom_ptr();
  for (int k = 0; k < 4; ++k) {
    scene.obstacles.push_back(
        {"o" + std::to_string(k),
         std::make_shared<const IndexedMesh>(make_icosphere(5.0 + k, Vec3(15.0 * k - 20, 0, 70), 3))});
  }
  return scene.structures();
}

std::vector<Trajectory> candidates(int n) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-40, 40);
  std::vector<Trajectory> c;
  for (int i = 0; i < n; ++i) {
    c.push_back(Trajectory::between({u(rng), u(rng), 120}, {u(rng) / 4, u(rng) / 4, 47}));
  }
  return c;
}

template <bool Parallel>
void BM_AxialDistances(benchmark::State& state) {
  const auto poses = random_poses(static_cast<int>(state.range(0)));
  const auto& surface = phantom().frames()[0].pericardium;
  for (auto _ : state) {
    auto r = Parallel ? kernels::omp::axial_distances(poses, surface) : kernels::serial::axial_distances(poses, surface);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_ContactSweep(benchmark::State& state) {
  const Vec3 tip(0, 0, 43);
  for (auto _ : state) {
    auto r = Parallel ? kernels::omp::contact_sweep(tip, phantom()) : kernels::serial::contact_sweep(tip, phantom());
    benchmark::DoNotOptimize(r);
  }
}

template <bool Parallel>
void BM_EvaluateCandidates(benchmark::State& state) {
  const auto c = candidates(static_cast<int>(state.range(0)));
  const auto s = obstacles();
  for (auto _ : state) {
    auto r = Parallel ? kernels::omp::evaluate_candidates(c, s, 100.0, 2.0, 0.5)
                      : kernels::serial::evaluate_candidates(c, s, 100.0, 2.0, 0.5);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.counters["threads"] = Parallel ? kernels::thread_count() : 1;
}

} // namespace

BENCHMARK(BM_AxialDistances<false>)->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AxialDistances<true>)->Arg(4096)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ContactSweep<false>)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_ContactSweep<true>)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EvaluateCandidates<false>)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvaluateCandidates<true>)->Arg(256)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
