#include "epiguide/planner.hpp"

#include "epiguide/error.hpp"
#include "epiguide/json_util.hpp"
#include "epiguide/kernels.hpp"
#include "epiguide/mesh_io.hpp"

#include <algorithm>
#include <cmath>

namespace epiguide {

namespace fs = std::filesystem;

Trajectory Trajectory::between(const Vec3& entry, const Vec3& target) {
  const Vec3 d = target - entry;
  const double len = d.norm();
  if (!(len > 0.0)) {
    throw DomainError("trajectory entry and target coincide");
  }
  return Trajectory{entry, target, d / len, len};
}

void PlanningScene::validate() const {
  if (!anatomy) {
    throw ConfigError("planning scene has no anatomy");
  }
  if (!(needle_length > 0.0)) {
    throw ConfigError("needle length must be > 0");
  }
  if (!(clearance >= 0.0)) {
    throw ConfigError("clearance must be >= 0");
  }
  if (!(sample_step > 0.0)) {
    throw ConfigError("sample step must be > 0");
  }
  for (const auto& o : obstacles) {
    if (!o.mesh || o.mesh->empty()) {
      throw ConfigError("obstacle '" + o.name + "' has no mesh");
    }
  }
}

std::vector<Obstacle> PlanningScene::structures() const {
  std::vector<Obstacle> out = obstacles;
  if (include_myocardium && anatomy) {
    out.push_back(Obstacle{"myocardium", std::shared_ptr<const IndexedMesh>(anatomy, &anatomy->edf().myocardium)});
  }
  return out;
}

CollisionResult collision_filter(const Trajectory& traj, std::span<const Obstacle> structures) {
  for (const auto& s : structures) {
    if (s.mesh->intersects_segment(traj.entry, traj.target) || s.mesh->contains(traj.entry)) {
      return {false, s.name};
    }
  }
  return {true, std::nullopt};
}

bool length_filter(const Trajectory& traj, double needle_length) { return traj.length <= needle_length; }

std::vector<Vec3> segment_samples(const Trajectory& traj, double step) {
  if (!(step > 0.0)) {
    throw ConfigError("sample step must be > 0");
  }
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(traj.length / step) + 2);
  for (std::size_t k = 0;; ++k) {
    const double s = static_cast<double>(k) * step;
    if (s >= traj.length) {
      break;
    }
    pts.push_back(traj.entry + s * traj.direction);
  }
  pts.push_back(traj.target);
  return pts;
}

ClearanceResult clearance_filter(const Trajectory& traj, std::span<const Obstacle> structures, double clearance,
                                 double step) {
  if (structures.empty()) {
    return {};
  }
  const auto samples = segment_samples(traj, step);
  const auto found = kernels::serial::segment_clearance(samples, structures);
  ClearanceResult r;
  r.min_clearance = found.min_distance;
  r.closest_structure = structures[found.structure].name;
  r.pass = found.min_distance >= clearance;
  return r;
}

CandidateVerdict evaluate_candidate(const Trajectory& traj, std::span<const Obstacle> structures, double needle_length,
                                    double clearance, double step) {
  CandidateVerdict v;
  if (!collision_filter(traj, structures).pass) {
    v.rejected_by = RejectedBy::Collision;
    return v;
  }
  if (!length_filter(traj, needle_length)) {
    v.rejected_by = RejectedBy::Length;
    return v;
  }
  const auto c = clearance_filter(traj, structures, clearance, step);
  v.min_clearance = c.min_clearance;
  v.limiting_structure = c.closest_structure;
  if (!c.pass) {
    v.rejected_by = RejectedBy::Clearance;
  }
  return v;
}

PlanResult plan(const PlanningScene& scene, std::span<const Vec3> entries, std::span<const Vec3> targets,
                Execution exec) {
  scene.validate();
  if (entries.empty() || targets.empty()) {
    throw DomainError("planner needs at least one entry and one target candidate");
  }
  const auto structures = scene.structures();
  std::vector<Trajectory> candidates;
  candidates.reserve(entries.size() * targets.size());
  for (const auto& e : entries) {
    for (const auto& t : targets) {
      candidates.push_back(Trajectory::between(e, t));
    }
  }
  PlanResult result;
  result.verdicts = exec == Execution::Parallel
                        ? kernels::omp::evaluate_candidates(candidates, structures, scene.needle_length,
                                                            scene.clearance, scene.sample_step)
                        : kernels::serial::evaluate_candidates(candidates, structures, scene.needle_length,
                                                               scene.clearance, scene.sample_step);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& v = result.verdicts[i];
    switch (v.rejected_by) {
      case RejectedBy::Collision:
        ++result.rejected.collision;
        break;
      case RejectedBy::Length:
        ++result.rejected.length;
        break;
      case RejectedBy::Clearance:
        ++result.rejected.clearance;
        break;
      case RejectedBy::None:
        result.ranked.push_back(PlannedTrajectory{candidates[i], i / targets.size(), i % targets.size(),
                                                  v.min_clearance.value_or(kInfinity), v.limiting_structure});
        break;
    }
  }
  std::stable_sort(result.ranked.begin(), result.ranked.end(), [](const PlannedTrajectory& a, const PlannedTrajectory& b) {
    if (a.min_clearance != b.min_clearance) {
      return a.min_clearance > b.min_clearance;
    }
    return a.trajectory.length < b.trajectory.length;
  });
  return result;
}

std::vector<Vec3> entry_grid(const Vec3& center, const Vec3& u, const Vec3& v, double half_u, double half_v, int rows,
                             int cols) {
  if (rows < 1 || cols < 1) {
    throw ConfigError("entry grid needs rows, cols >= 1");
  }
  const Vec3 un = u.normalized();
  const Vec3 vn = v.normalized();
  std::vector<Vec3> pts;
  for (int r = 0; r < rows; ++r) {
    const double a = rows == 1 ? 0.0 : -half_v + 2.0 * half_v * r / (rows - 1);
    for (int c = 0; c < cols; ++c) {
      const double b = cols == 1 ? 0.0 : -half_u + 2.0 * half_u * c / (cols - 1);
      pts.push_back(center + b * un + a * vn);
    }
  }
  return pts;
}

nlohmann::json plan_report(const PlanningScene& scene, const PlanResult& result) {
  nlohmann::json j;
  j["needle_length"] = scene.needle_length;
  j["clearance"] = scene.clearance;
  j["sample_step"] = scene.sample_step;
  j["edf_index"] = scene.anatomy->edf_index();
  j["candidates"] = result.verdicts.size();
  j["rejected"] = {{"collision", result.rejected.collision},
                   {"length", result.rejected.length},
                   {"clearance", result.rejected.clearance}};
  j["trajectories"] = nlohmann::json::array();
  for (const auto& p : result.ranked) {
    j["trajectories"].push_back({{"entry", vec3_to_json(p.trajectory.entry)},
                                 {"target", vec3_to_json(p.trajectory.target)},
                                 {"direction", vec3_to_json(p.trajectory.direction)},
                                 {"length", p.trajectory.length},
                                 {"min_clearance", distance_to_json(p.min_clearance)},
                                 {"limiting_structure", p.limiting_structure.value_or("")},
                                 {"entry_index", p.entry_index},
                                 {"target_index", p.target_index}});
  }
  return j;
}

namespace {

std::shared_ptr<const IndexedMesh> obstacle_mesh(const nlohmann::json& spec, const fs::path& base) {
  JsonReader r(spec, "obstacle");
  (void)r.optional<std::string>("name");
  (void)r.optional<std::string>("role");
  if (auto path = r.optional<std::string>("path")) {
    r.reject_unknown();
    auto loaded = load_mesh(base / *path);
    return std::make_shared<const IndexedMesh>(std::move(loaded.mesh));
  }
  const auto sphere = r.required<nlohmann::json>("sphere");
  r.reject_unknown();
  JsonReader sr(sphere, "obstacle.sphere");
  const Vec3 c = sr.get_vec3_or("center", Vec3::Zero());
  const double radius = sr.required<double>("radius");
  const int level = sr.get_or("subdivision", 3);
  sr.reject_unknown();
  return std::make_shared<const IndexedMesh>(make_icosphere(radius, c, level));
}

} // namespace

SceneFile load_scene(const fs::path& path) {
  const auto j = read_json_file(path);
  const fs::path base = path.parent_path();
  JsonReader r(j, "scene");
  SceneFile out;
  auto& scene = out.scene;
  scene.needle_length = r.get_or("needle_length", scene.needle_length);
  scene.clearance = r.get_or("clearance", scene.clearance);
  scene.sample_step = r.get_or("sample_step", scene.sample_step);
  scene.include_myocardium = r.get_or("include_myocardium", scene.include_myocardium);

  std::optional<Mesh> static_peri;
  std::optional<Mesh> static_myo;
  if (auto meshes = r.optional<nlohmann::json>("meshes")) {
    for (const auto& m : *meshes) {
      const auto role = m.at("role").get<std::string>();
      if (role == "pericardium" || role == "myocardium") {
        auto loaded = load_mesh(base / m.at("path").get<std::string>()).mesh;
        (role == "pericardium" ? static_peri : static_myo) = std::move(loaded);
      } else if (role == "obstacle") {
        scene.obstacles.push_back(Obstacle{m.value("name", std::string("obstacle")), obstacle_mesh(m, base)});
      } else {
        throw ConfigError("scene.meshes: unknown role '" + role + "'");
      }
    }
  }
  if (auto obstacles = r.optional<nlohmann::json>("obstacles")) {
    for (const auto& o : *obstacles) {
      scene.obstacles.push_back(Obstacle{o.value("name", std::string("obstacle")), obstacle_mesh(o, base)});
    }
  }
  if (auto anatomy = r.optional<nlohmann::json>("anatomy")) {
    JsonReader ar(*anatomy, "scene.anatomy");
    if (auto manifest = ar.optional<std::string>("manifest")) {
      scene.anatomy = std::make_shared<const AnimatedAnatomy>(load_anatomy(base / *manifest));
    } else {
      PhantomConfig pc = ar.required<nlohmann::json>("phantom").get<PhantomConfig>();
      scene.anatomy = std::make_shared<const AnimatedAnatomy>(generate_phantom(pc));
    }
    ar.reject_unknown();
  } else if (static_peri && static_myo) {
    std::vector<FrameSurfaces> frames;
    for (int k = 0; k < kFrameCount; ++k) {
      frames.push_back(FrameSurfaces{IndexedMesh(*static_peri), IndexedMesh(*static_myo)});
    }
    scene.anatomy = std::make_shared<const AnimatedAnatomy>(std::move(frames), 1.0, 0);
  } else {
    throw ConfigError("scene needs 'anatomy' or pericardium + myocardium meshes");
  }

  if (auto entries = r.optional<std::vector<std::vector<double>>>("entries")) {
    for (const auto& e : *entries) {
      out.entries.push_back(vec3_from_json(e, "scene.entries"));
    }
  }
  if (auto grid = r.optional<nlohmann::json>("entry_grid")) {
    JsonReader gr(*grid, "scene.entry_grid");
    const auto pts = entry_grid(gr.required<nlohmann::json>("center").is_array()
                                    ? vec3_from_json(grid->at("center"), "entry_grid.center")
                                    : Vec3::Zero(),
                                gr.get_vec3_or("u", Vec3::UnitX()), gr.get_vec3_or("v", Vec3::UnitY()),
                                gr.get_or("half_u", 20.0), gr.get_or("half_v", 20.0), gr.get_or("rows", 5),
                                gr.get_or("cols", 5));
    gr.reject_unknown();
    out.entries.insert(out.entries.end(), pts.begin(), pts.end());
  }
  for (const auto& t : r.required<std::vector<std::vector<double>>>("targets")) {
    out.targets.push_back(vec3_from_json(t, "scene.targets"));
  }
  r.reject_unknown();
  if (out.entries.empty()) {
    throw ConfigError("scene needs 'entries' or 'entry_grid'");
  }
  scene.validate();
  return out;
}

} // namespace epiguide
