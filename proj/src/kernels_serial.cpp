#include "epiguide/kernels.hpp"

namespace epiguide::kernels::serial {

std::vector<AxialDistance> axial_distances(std::span<const NeedlePose> poses, const IndexedMesh& surface) {
  std::vector<AxialDistance> out(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    out[i] = axial_distance(poses[i], surface);
  }
  return out;
}

ContactSweep contact_sweep(const Vec3& tip, const AnimatedAnatomy& anatomy) {
  ContactSweep sweep;
  for (int k = 0; k < kFrameCount; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    sweep.pericardium[idx] = in_contact(anatomy.frame(k).pericardium, tip);
    sweep.myocardium[idx] = in_contact(anatomy.frame(k).myocardium, tip);
  }
  return sweep;
}

SegmentClearance segment_clearance(std::span<const Vec3> samples, std::span<const Obstacle> structures) {
  SegmentClearance best;
  for (const auto& p : samples) {
    for (std::size_t s = 0; s < structures.size(); ++s) {
      const double d = structures[s].mesh->closest_point(p).distance;
      if (d < best.min_distance) {
        best = {d, s};
      }
    }
  }
  return best;
}

std::vector<CandidateVerdict> evaluate_candidates(std::span<const Trajectory> candidates,
                                                  std::span<const Obstacle> structures, double needle_length,
                                                  double clearance, double step) {
  std::vector<CandidateVerdict> out(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out[i] = evaluate_candidate(candidates[i], structures, needle_length, clearance, step);
  }
  return out;
}

} // namespace epiguide::kernels::serial
