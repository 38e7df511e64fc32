#include "epiguide/kernels.hpp"

#include <omp.h>

#include <cstdint>

namespace epiguide::kernels {

int thread_count() { return omp_get_max_threads(); }

namespace omp {

std::vector<AxialDistance> axial_distances(std::span<const NeedlePose> poses, const IndexedMesh& surface) {
  std::vector<AxialDistance> out(poses.size());
  const auto n = static_cast<std::int64_t>(poses.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = axial_distance(poses[static_cast<std::size_t>(i)], surface);
  }
  return out;
}

ContactSweep contact_sweep(const Vec3& tip, const AnimatedAnatomy& anatomy) {
  ContactSweep sweep;
  // 40 independent surface tests; each thread writes distinct flags.
#pragma omp parallel for schedule(static)
  for (int job = 0; job < 2 * kFrameCount; ++job) {
    const int k = job / 2;
    const auto idx = static_cast<std::size_t>(k);
    if (job % 2 == 0) {
      sweep.pericardium[idx] = in_contact(anatomy.frame(k).pericardium, tip);
    } else {
      sweep.myocardium[idx] = in_contact(anatomy.frame(k).myocardium, tip);
    }
  }
  return sweep;
}

SegmentClearance segment_clearance(std::span<const Vec3> samples, std::span<const Obstacle> structures) {
  const auto n = static_cast<std::int64_t>(samples.size());
  const auto m = structures.size();
  // Per-sample minima, then a serial merge in sample order so ties resolve
  // exactly as in the reference loop.
  std::vector<SegmentClearance> per_sample(samples.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) {
    SegmentClearance local;
    for (std::size_t s = 0; s < m; ++s) {
      const double d = structures[s].mesh->closest_point(samples[static_cast<std::size_t>(i)]).distance;
      if (d < local.min_distance) {
        local = {d, s};
      }
    }
    per_sample[static_cast<std::size_t>(i)] = local;
  }
  SegmentClearance best;
  for (const auto& c : per_sample) {
    if (c.min_distance < best.min_distance) {
      best = c;
    }
  }
  return best;
}

std::vector<CandidateVerdict> evaluate_candidates(std::span<const Trajectory> candidates,
                                                  std::span<const Obstacle> structures, double needle_length,
                                                  double clearance, double step) {
  std::vector<CandidateVerdict> out(candidates.size());
  const auto n = static_cast<std::int64_t>(candidates.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    out[idx] = evaluate_candidate(candidates[idx], structures, needle_length, clearance, step);
  }
  return out;
}

} // namespace omp
} // namespace epiguide::kernels
