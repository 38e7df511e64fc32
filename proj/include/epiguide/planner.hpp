#pragma once

#include "epiguide/anatomy.hpp"

#include <json.hpp>

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace epiguide {

struct Trajectory {
  Vec3 entry = Vec3::Zero();
  Vec3 target = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  double length = 0.0;

  /// Throws DomainError when entry and target coincide.
  static Trajectory between(const Vec3& entry, const Vec3& target);
};

struct Obstacle {
  std::string name;
  std::shared_ptr<const IndexedMesh> mesh;
};

struct PlanningScene {
  std::shared_ptr<const AnimatedAnatomy> anatomy;
  std::vector<Obstacle> obstacles;
  double needle_length = 150.0; ///< mm
  double clearance = 5.0;       ///< mm
  double sample_step = 0.5;     ///< clearance sampling step, mm
  /// Treat the end-diastolic myocardium as a sensitive structure too.
  bool include_myocardium = true;

  void validate() const;
  /// Obstacles plus, when enabled, the EDF myocardium.
  [[nodiscard]] std::vector<Obstacle> structures() const;
};

struct CollisionResult {
  bool pass = true;
  std::optional<std::string> obstacle; ///< first offending structure
};

/// Fails when the segment entry->target touches any structure, tangency
/// included, or starts inside one.
[[nodiscard]] CollisionResult collision_filter(const Trajectory& traj, std::span<const Obstacle> structures);

/// Passes when the path fits the needle (boundary inclusive).
[[nodiscard]] bool length_filter(const Trajectory& traj, double needle_length);

struct ClearanceResult {
  bool pass = true;
  double min_clearance = kInfinity;
  std::optional<std::string> closest_structure;
};

/// Point samples at k * step along the segment plus both endpoints.
[[nodiscard]] std::vector<Vec3> segment_samples(const Trajectory& traj, double step);

[[nodiscard]] ClearanceResult clearance_filter(const Trajectory& traj, std::span<const Obstacle> structures,
                                               double clearance, double step = 0.5);

enum class RejectedBy { None = 0, Collision = 1, Length = 2, Clearance = 3 };

struct CandidateVerdict {
  RejectedBy rejected_by = RejectedBy::None;
  /// Filled only when the clearance filter ran.
  std::optional<double> min_clearance;
  std::optional<std::string> limiting_structure;
};

/// Runs the three filters in order, stopping at the first failure.
[[nodiscard]] CandidateVerdict evaluate_candidate(const Trajectory& traj, std::span<const Obstacle> structures,
                                                  double needle_length, double clearance, double step);

struct RejectionCounts {
  int collision = 0;
  int length = 0;
  int clearance = 0;
  bool operator==(const RejectionCounts&) const = default;
};

struct PlannedTrajectory {
  Trajectory trajectory;
  std::size_t entry_index = 0;
  std::size_t target_index = 0;
  double min_clearance = kInfinity;
  std::optional<std::string> limiting_structure;
};

struct PlanResult {
  std::vector<PlannedTrajectory> ranked;
  std::vector<CandidateVerdict> verdicts; ///< entry-major candidate order
  RejectionCounts rejected;
};

enum class Execution { Serial, Parallel };

/// Every entry x target pair goes through collision -> length -> clearance
/// against the end-diastolic frame; survivors are ranked by descending
/// clearance, then ascending length (stable).
[[nodiscard]] PlanResult plan(const PlanningScene& scene, std::span<const Vec3> entries, std::span<const Vec3> targets,
                              Execution exec = Execution::Parallel);

/// Regular grid of entry points on a planar window: `center` +/- half extents
/// along `u` and `v`, `rows` x `cols` points.
[[nodiscard]] std::vector<Vec3> entry_grid(const Vec3& center, const Vec3& u, const Vec3& v, double half_u,
                                           double half_v, int rows, int cols);

[[nodiscard]] nlohmann::json plan_report(const PlanningScene& scene, const PlanResult& result);

/// Scene file: anatomy source, obstacle meshes, needle/clearance settings,
/// candidate entries (explicit or grid) and targets.
struct SceneFile {
  PlanningScene scene;
  std::vector<Vec3> entries;
  std::vector<Vec3> targets;
};
[[nodiscard]] SceneFile load_scene(const std::filesystem::path& path);

} // namespace epiguide
