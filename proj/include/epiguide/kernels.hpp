#pragma once

// Batch kernels in two builds: `serial` is the straight-line reference kept
// for tests, `omp` spreads the outer loop over OpenMP threads. Both must give
// identical results for identical inputs.

#include "epiguide/navkernel.hpp"
#include "epiguide/planner.hpp"

#include <span>
#include <utility>
#include <vector>

namespace epiguide::kernels {

struct ContactSweep {
  FrameFlags pericardium{};
  FrameFlags myocardium{};
  bool operator==(const ContactSweep&) const = default;
};

struct SegmentClearance {
  double min_distance = kInfinity;
  std::size_t structure = 0; ///< index into the structure list
};

namespace serial {
std::vector<AxialDistance> axial_distances(std::span<const NeedlePose> poses, const IndexedMesh& surface);
ContactSweep contact_sweep(const Vec3& tip, const AnimatedAnatomy& anatomy);
SegmentClearance segment_clearance(std::span<const Vec3> samples, std::span<const Obstacle> structures);
std::vector<CandidateVerdict> evaluate_candidates(std::span<const Trajectory> candidates,
                                                  std::span<const Obstacle> structures, double needle_length,
                                                  double clearance, double step);
} // namespace serial

namespace omp {
std::vector<AxialDistance> axial_distances(std::span<const NeedlePose> poses, const IndexedMesh& surface);
ContactSweep contact_sweep(const Vec3& tip, const AnimatedAnatomy& anatomy);
SegmentClearance segment_clearance(std::span<const Vec3> samples, std::span<const Obstacle> structures);
std::vector<CandidateVerdict> evaluate_candidates(std::span<const Trajectory> candidates,
                                                  std::span<const Obstacle> structures, double needle_length,
                                                  double clearance, double step);
} // namespace omp

/// Number of OpenMP threads the parallel kernels will use.
int thread_count();

} // namespace epiguide::kernels
