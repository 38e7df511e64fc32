#pragma once

#include "epiguide/anatomy.hpp"

#include <json.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace epiguide {

struct NeedlePose {
  Vec3 tip = Vec3::Zero();
  /// Unit advancement direction.
  Vec3 axis = Vec3::UnitZ();
};

/// Normalizes `axis`; throws DomainError for a zero-length direction.
[[nodiscard]] NeedlePose make_pose(const Vec3& tip, const Vec3& axis);

struct NavigationSample {
  double time = 0.0;
  double d_tp = kInfinity; ///< signed tip-to-pericardium distance along the axis, mm
  double d_tm = kInfinity; ///< signed tip-to-myocardium distance along the axis, mm
  int frame = 0;
};

struct AxialDistance {
  double mm = kInfinity;
  /// False when the mesh is open and inside/outside could not be decided; the
  /// value is then the unsigned forward distance.
  bool sign_known = true;
};

/// Signed distance from the tip to `surface` along the needle axis: positive
/// distance to the next hit ahead when outside, minus the distance back to the
/// last crossed surface when inside, +infinity when the axis misses.
[[nodiscard]] AxialDistance axial_distance(const NeedlePose& pose, const IndexedMesh& surface);

[[nodiscard]] NavigationSample nav_sample(const NeedlePose& pose, const AnimatedAnatomy& anatomy, double time_s);

/// Thickness of the shell around a surface that still counts as contact.
inline constexpr double kContactToleranceMm = 0.05;

[[nodiscard]] bool in_contact(const IndexedMesh& surface, const Vec3& p,
                              double tolerance_mm = kContactToleranceMm);

enum class Outcome { SuccessfulCompletion, MissedTarget, CriticalFailure };

[[nodiscard]] const char* to_string(Outcome o);
[[nodiscard]] Outcome outcome_from_string(const std::string& s);

struct TrialSample {
  NavigationSample nav;
  NeedlePose pose;
  /// Sonification state 1..4 active after this sample, 0 if not recorded.
  int state = 0;
};

using FrameFlags = std::array<bool, kFrameCount>;

struct TrialLog {
  std::string trajectory_id;
  std::string modality; ///< "V" or "MS"
  std::string group;    ///< optional subgroup label (e.g. expertise)
  std::optional<Vec3> target;
  double start_time = 0.0;
  double stop_time = 0.0;
  std::vector<TrialSample> samples;
  FrameFlags contact_pericardium{};
  FrameFlags contact_myocardium{};
  Vec3 final_tip = Vec3::Zero();
  bool closed = false;
  std::optional<Outcome> outcome;
  std::optional<double> min_distance_pericardium;
  std::optional<double> distance_to_target;
  /// Engine settings needed to re-render the trial audio.
  nlohmann::json render_settings = nlohmann::json::object();

  /// Appends a sample; times must be strictly increasing. Updates final_tip.
  void append(const TrialSample& sample);
  [[nodiscard]] double execution_time() const { return stop_time - start_time; }
};

/// ORs the per-frame inside-or-on tests of `tip` into the log accumulators.
void update_contacts(TrialLog& log, const Vec3& tip, const AnimatedAnatomy& anatomy);

/// Critical failure beats missed target beats success.
[[nodiscard]] Outcome classify_outcome(const TrialLog& log);

/// Smallest unsigned point-to-surface distance over all 20 pericardium frames.
[[nodiscard]] double min_distance_to_pericardium(const Vec3& tip, const AnimatedAnatomy& anatomy);

[[nodiscard]] inline double distance_to_target(const Vec3& tip, const Vec3& target) { return (tip - target).norm(); }

/// Marks the log closed at `stop_time` and fills outcome and placement metrics.
void close_trial(TrialLog& log, const AnimatedAnatomy& anatomy, double stop_time);

/// JSON-lines encoding: header record, one record per sample, footer record.
[[nodiscard]] std::string serialize_trial_log(const TrialLog& log);
[[nodiscard]] TrialLog parse_trial_log(const std::string& text);
[[nodiscard]] TrialLog read_trial_log(const std::filesystem::path& path);
void write_trial_log(const TrialLog& log, const std::filesystem::path& path);

} // namespace epiguide
