#include "oracles.hpp"
#include "test_util.hpp"

#include "epiguide/error.hpp"
#include "epiguide/mesh_io.hpp"
#include "epiguide/planner.hpp"

#include <doctest.h>

using namespace epiguide;

namespace {

std::shared_ptr<const AnimatedAnatomy> small_phantom() {
  static const auto a = [] {
    PhantomConfig c;
    c.subdivision = 2;
    return std::make_shared<const AnimatedAnatomy>(generate_phantom(c));
  }();
  return a;
}

Obstacle ball(const std::string& name, const Vec3& c, double r) {
  return {name, std::make_shared<const IndexedMesh>(make_icosphere(r, c, 3))};
}

} // namespace

TEST_SUITE("planner") {

TEST_CASE("trajectory geometry") {
  const auto t = Trajectory::between({0, 0, 10}, {0, 0, 0});
  CHECK(t.length == 10.0);
  CHECK(t.direction == Vec3(0, 0, -1));
  CHECK_THROWS_AS((void)Trajectory::between({1, 1, 1}, {1, 1, 1}), DomainError);
}

TEST_CASE("segment samples include both endpoints") {
  const auto t = Trajectory::between({0, 0, 0}, {0, 0, 1.2});
  const auto s = segment_samples(t, 0.5);
  REQUIRE(s.size() == 4);
  CHECK(s.front() == Vec3(0, 0, 0));
  CHECK(s[1].z() == doctest::Approx(0.5));
  CHECK(s.back() == Vec3(0, 0, 1.2));
  CHECK_THROWS_AS((void)segment_samples(t, 0.0), ConfigError);
}

TEST_CASE("collision filter names the first structure hit, including entry inside") {
  const std::vector<Obstacle> s = {ball("rib", {0, 0, 50}, 5), ball("lung", {0, 20, 50}, 5)};
  const auto through = collision_filter(Trajectory::between({0, 0, 100}, {0, 0, 0}), s);
  CHECK_FALSE(through.pass);
  CHECK(*through.obstacle == "rib");
  CHECK(collision_filter(Trajectory::between({10, 0, 100}, {10, 0, 0}), s).pass);
  const auto inside = collision_filter(Trajectory::between({0, 20, 50}, {0, 20, 100}), s);
  CHECK_FALSE(inside.pass);
  CHECK(*inside.obstacle == "lung");
}

TEST_CASE("length filter is inclusive") {
  const auto t = Trajectory::between({0, 0, 0}, {0, 0, 100});
  CHECK(length_filter(t, 100.0));
  CHECK_FALSE(length_filter(t, 99.999));
}

TEST_CASE("clearance filter reports the limiting structure and distance") {
  const std::vector<Obstacle> s = {ball("a", {10, 0, 50}, 4), ball("b", {-20, 0, 50}, 4)};
  const auto t = Trajectory::between({0, 0, 100}, {0, 0, 0});
  const auto r = clearance_filter(t, s, 5.0, 0.5);
  CHECK(r.pass);
  CHECK(*r.closest_structure == "a");
  CHECK(r.min_clearance == doctest::Approx(6.0).epsilon(0.005));
  CHECK_FALSE(clearance_filter(t, s, 6.5, 0.5).pass);
}

TEST_CASE("evaluate_candidate short-circuits in filter order") {
  const std::vector<Obstacle> s = {ball("a", {0, 0, 50}, 4)};
  const auto blocked_and_long = Trajectory::between({0, 0, 300}, {0, 0, 0});
  const auto v1 = evaluate_candidate(blocked_and_long, s, 100.0, 5.0, 0.5);
  CHECK(v1.rejected_by == RejectedBy::Collision);
  CHECK_FALSE(v1.min_clearance);
  const auto long_only = Trajectory::between({30, 0, 300}, {30, 0, 0});
  const auto v2 = evaluate_candidate(long_only, s, 100.0, 5.0, 0.5);
  CHECK(v2.rejected_by == RejectedBy::Length);
  CHECK_FALSE(v2.min_clearance);
  const auto close = Trajectory::between({6, 0, 80}, {6, 0, 20});
  const auto v3 = evaluate_candidate(close, s, 100.0, 5.0, 0.5);
  CHECK(v3.rejected_by == RejectedBy::Clearance);
  REQUIRE(v3.min_clearance);
  CHECK(*v3.min_clearance == doctest::Approx(2.0).epsilon(0.01));
}

TEST_CASE("plan ranks survivors by clearance, then length, against the EDF myocardium") {
  PlanningScene scene;
  scene.anatomy = small_phantom();
  scene.obstacles = {ball("rib", {0, 0, 80}, 6)};
  scene.needle_length = 100.0;
  scene.clearance = 2.0;
  const std::vector<Vec3> entries = {{0, 0, 120}, {30, 0, 120}, {-30, 0, 120}, {0, 0, 200}};
  const std::vector<Vec3> targets = {{0, 0, 47}, {10, 0, 46}};
  const auto r = plan(scene, entries, targets, Execution::Serial);
  CHECK(r.verdicts.size() == 8);
  CHECK(r.rejected.collision + r.rejected.length + r.rejected.clearance + static_cast<int>(r.ranked.size()) == 8);
  CHECK(r.verdicts[0].rejected_by == RejectedBy::Collision);
  CHECK(r.verdicts[6].rejected_by == RejectedBy::Collision);
  for (std::size_t i = 1; i < r.ranked.size(); ++i) {
    CHECK(r.ranked[i - 1].min_clearance >= r.ranked[i].min_clearance);
  }
  for (const auto& p : r.ranked) {
    CHECK(p.min_clearance >= scene.clearance);
    double want = kInfinity;
    const auto structures = scene.structures();
    for (int k = 0; k <= 2000; ++k) {
      const Vec3 x = p.trajectory.entry + (k / 2000.0) * (p.trajectory.target - p.trajectory.entry);
      for (const auto& s : structures) {
        want = std::min(want, oracle::point_mesh_distance(s.mesh->mesh(), x));
      }
    }
    CHECK(p.min_clearance == doctest::Approx(want).epsilon(0.01));
  }
  CHECK_FALSE(r.ranked.empty());
  const auto parallel = plan(scene, entries, targets, Execution::Parallel);
  CHECK(parallel.rejected == r.rejected);

  const auto report = plan_report(scene, r);
  CHECK(report["candidates"] == 8);
  CHECK(report["edf_index"] == 0);
  CHECK(report["trajectories"].size() == r.ranked.size());
}

TEST_CASE("excluding the myocardium removes it from the structure list") {
  PlanningScene scene;
  scene.anatomy = small_phantom();
  CHECK(scene.structures().size() == 1);
  scene.include_myocardium = false;
  CHECK(scene.structures().empty());
}

TEST_CASE("scene validation") {
  PlanningScene scene;
  CHECK_THROWS_AS(scene.validate(), ConfigError);
  scene.anatomy = small_phantom();
  scene.needle_length = 0;
  CHECK_THROWS_AS(scene.validate(), ConfigError);
  scene.needle_length = 100;
  scene.sample_step = -1;
  CHECK_THROWS_AS(scene.validate(), ConfigError);
  scene.sample_step = 0.5;
  const std::vector<Vec3> none;
  const std::vector<Vec3> one = {{0, 0, 100}};
  CHECK_THROWS_AS((void)plan(scene, none, one), DomainError);
}

TEST_CASE("entry grid spans the window") {
  const auto g = entry_grid({0, 0, 100}, {1, 0, 0}, {0, 1, 0}, 10, 5, 3, 2);
  REQUIRE(g.size() == 6);
  CHECK(g.front() == Vec3(-10, -5, 100));
  CHECK(g.back() == Vec3(10, 5, 100));
  CHECK_THROWS_AS((void)entry_grid({0, 0, 0}, {1, 0, 0}, {0, 1, 0}, 1, 1, 0, 2), ConfigError);
}

TEST_CASE("scene files with phantoms, mesh obstacles and grids") {
  TempDir dir;
  save_stl(make_icosphere(5.0, Vec3(0, 0, 80), 2), dir / "rib.stl", StlEncoding::Binary);
  write_text(dir / "scene.json", R"({
    "anatomy": {"phantom": {"subdivision": 2}},
    "obstacles": [{"name": "rib", "path": "rib.stl"}, {"name": "ball", "sphere": {"center": [30, 0, 80], "radius": 3}}],
    "needle_length": 90, "clearance": 3,
    "entry_grid": {"center": [0, 0, 120], "half_u": 20, "half_v": 20, "rows": 3, "cols": 3},
    "targets": [[0, 0, 47], [5, 0, 47]]
  })");
  const auto sf = load_scene(dir / "scene.json");
  CHECK(sf.entries.size() == 9);
  CHECK(sf.targets.size() == 2);
  CHECK(sf.scene.obstacles.size() == 2);
  CHECK(sf.scene.needle_length == 90);
  const auto r = plan(sf.scene, sf.entries, sf.targets);
  CHECK(r.verdicts.size() == 18);

  write_text(dir / "bad.json", R"({"anatomy": {"phantom": {}}, "targets": [[0,0,0]], "entries": [[0,0,100]], "speed": 1})");
  CHECK_THROWS_AS((void)load_scene(dir / "bad.json"), ConfigError);
  write_text(dir / "noentry.json", R"({"anatomy": {"phantom": {}}, "targets": [[0,0,0]]})");
  CHECK_THROWS_AS((void)load_scene(dir / "noentry.json"), ConfigError);
  write_text(dir / "noanat.json", R"({"targets": [[0,0,0]], "entries": [[0,0,100]]})");
  CHECK_THROWS_AS((void)load_scene(dir / "noanat.json"), ConfigError);
}

TEST_CASE("static meshes stand in for every frame") {
  TempDir dir;
  save_obj(make_icosphere(50, Vec3::Zero(), 2), dir / "peri.obj");
  save_obj(make_icosphere(44, Vec3::Zero(), 2), dir / "myo.obj");
  write_text(dir / "scene.json", R"({
    "meshes": [{"role": "pericardium", "path": "peri.obj"}, {"role": "myocardium", "path": "myo.obj"}],
    "entries": [[0, 0, 120]], "targets": [[0, 0, 49.5]]
  })");
  const auto sf = load_scene(dir / "scene.json");
  CHECK(sf.scene.anatomy->frames().size() == 20);
  CHECK(plan(sf.scene, sf.entries, sf.targets).ranked.size() == 1);
}

} // TEST_SUITE
