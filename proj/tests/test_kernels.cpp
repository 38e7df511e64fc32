#include "epiguide/kernels.hpp"

#include <doctest.h>
#include <omp.h>

#include <random>

using namespace epiguide;

namespace {

/// Forces several threads even on a single-core host so the parallel paths
/// really interleave.
struct ThreadScope {
  explicit ThreadScope(int n) : saved(omp_get_max_threads()) { omp_set_num_threads(n); }
  ~ThreadScope() { omp_set_num_threads(saved); }
  int saved;
};

bool same(const AxialDistance& a, const AxialDistance& b) {
  return (a.mm == b.mm || (std::isnan(a.mm) && std::isnan(b.mm))) && a.sign_known == b.sign_known;
}

} // namespace

TEST_SUITE("kernels") {

TEST_CASE("axial distance batches are identical across builds") {
  ThreadScope threads(4);
  const IndexedMesh sphere(make_icosphere(50.0, Vec3::Zero(), 3));
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n(0, 1);
  std::vector<NeedlePose> poses;
  for (int i = 0; i < 3000; ++i) {
    poses.push_back(make_pose(Vec3(40 * n(rng), 40 * n(rng), 40 * n(rng)), Vec3(n(rng), n(rng), n(rng))));
  }
  const auto a = kernels::serial::axial_distances(poses, sphere);
  const auto b = kernels::omp::axial_distances(poses, sphere);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(same(a[i], b[i]));
  }
  CHECK(kernels::thread_count() == 4);
}

TEST_CASE("contact sweeps are identical across builds") {
  ThreadScope threads(3);
  PhantomConfig c;
  c.subdivision = 2;
  const auto anatomy = generate_phantom(c);
  for (double z : {60.0, 50.0, 47.0, 43.5, 42.0, 30.0}) {
    const auto a = kernels::serial::contact_sweep({0, 0, z}, anatomy);
    const auto b = kernels::omp::contact_sweep({0, 0, z}, anatomy);
    CHECK(a == b);
  }
}

TEST_CASE("segment clearance and candidate verdicts are identical across builds") {
  ThreadScope threads(4);
  std::vector<Obstacle> structures;
  for (int k = 0; k < 4; ++k) {
    structures.push_back({"o" + std::to_string(k),
                          std::make_shared<const IndexedMesh>(make_icosphere(5.0 + k, Vec3(15.0 * k - 20, 0, 60), 2))});
  }
  std::vector<Trajectory> candidates;
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-40, 40);
  for (int i = 0; i < 200; ++i) {
    candidates.push_back(Trajectory::between({u(rng), u(rng), 120}, {u(rng) / 2, u(rng) / 2, 20}));
  }
  const auto samples = segment_samples(candidates.front(), 0.5);
  const auto sa = kernels::serial::segment_clearance(samples, structures);
  const auto sb = kernels::omp::segment_clearance(samples, structures);
  CHECK(sa.min_distance == sb.min_distance);
  CHECK(sa.structure == sb.structure);

  const auto va = kernels::serial::evaluate_candidates(candidates, structures, 110.0, 3.0, 0.5);
  const auto vb = kernels::omp::evaluate_candidates(candidates, structures, 110.0, 3.0, 0.5);
  REQUIRE(va.size() == vb.size());
  int kinds[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < va.size(); ++i) {
    CHECK(va[i].rejected_by == vb[i].rejected_by);
    CHECK(va[i].min_clearance == vb[i].min_clearance);
    CHECK(va[i].limiting_structure == vb[i].limiting_structure);
    ++kinds[static_cast<int>(va[i].rejected_by)];
  }
  // the batch exercises every branch
  for (int k : kinds) {
    CHECK(k > 0);
  }
}

} // TEST_SUITE
