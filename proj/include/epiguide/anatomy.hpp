#pragma once

#include "epiguide/bvh.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <vector>

namespace epiguide {

inline constexpr int kFrameCount = 20;

struct FrameSurfaces {
  IndexedMesh pericardium;
  IndexedMesh myocardium;
};

/// One looping cardiac cycle sampled at 20 equally spaced frames.
class AnimatedAnatomy {
 public:
  /// Throws ConfigError on wrong frame count, non-positive period, an EDF index
  /// out of range, or frames whose topology differs.
  AnimatedAnatomy(std::vector<FrameSurfaces> frames, double cycle_period_s, int edf_index);

  [[nodiscard]] const FrameSurfaces& frame(int index) const { return frames_[static_cast<std::size_t>(index)]; }
  [[nodiscard]] const std::vector<FrameSurfaces>& frames() const { return frames_; }
  [[nodiscard]] double cycle_period() const { return cycle_period_; }
  [[nodiscard]] int edf_index() const { return edf_index_; }
  [[nodiscard]] const FrameSurfaces& edf() const { return frame(edf_index_); }

 private:
  std::vector<FrameSurfaces> frames_;
  double cycle_period_;
  int edf_index_;
};

/// Frame shown at `time_s`: floor(20 * fract(time / period)), looping forever.
[[nodiscard]] int frame_at(double cycle_period_s, double time_s);
[[nodiscard]] inline int frame_at(const AnimatedAnatomy& anatomy, double time_s) {
  return frame_at(anatomy.cycle_period(), time_s);
}

/// Concentric-shell phantom. The myocardium radius follows a raised cosine over
/// the cycle peaking at the end-diastolic frame unless explicit per-frame radii
/// are given.
struct PhantomConfig {
  double myocardium_min_radius = 40.0;
  double myocardium_max_radius = 44.0;
  std::optional<std::array<double, kFrameCount>> myocardium_radii;
  double pericardium_radius = 50.0;
  /// Peak deviation of the pericardium radius, in phase with the myocardium.
  double pericardium_pulsation = 0.0;
  Vec3 center = Vec3::Zero();
  int subdivision = 4;
  double cycle_period = 1.0;
  /// Only used with min/max radii; explicit radii put the EDF at their maximum.
  int edf_index = 0;

  [[nodiscard]] std::array<double, kFrameCount> myocardium_radius_per_frame() const;
  [[nodiscard]] std::array<double, kFrameCount> pericardium_radius_per_frame() const;
  [[nodiscard]] int resolved_edf_index() const;
  /// Throws ConfigError when radii are non-positive or the shells overlap.
  void validate() const;
};

[[nodiscard]] AnimatedAnatomy generate_phantom(const PhantomConfig& config);

void from_json(const nlohmann::json& j, PhantomConfig& config);
void to_json(nlohmann::json& j, const PhantomConfig& config);

/// Writes 40 meshes plus `anatomy.json` (period, EDF index, per-frame files).
void save_anatomy(const AnimatedAnatomy& anatomy, const std::filesystem::path& dir, const std::string& format);

/// Reads an `anatomy.json` manifest and the meshes it references.
[[nodiscard]] AnimatedAnatomy load_anatomy(const std::filesystem::path& manifest);

/// Per-frame inter-parietal gap of a concentric phantom measured along the
/// radial ray through `direction`.
[[nodiscard]] std::array<double, kFrameCount> radial_gaps(const AnimatedAnatomy& anatomy, const Vec3& center,
                                                          const Vec3& direction);

} // namespace epiguide
