#include "oracles.hpp"
#include "test_util.hpp"

#include "epiguide/anatomy.hpp"
#include "epiguide/error.hpp"

#include <doctest.h>

using namespace epiguide;

namespace {

PhantomConfig small_phantom() {
  PhantomConfig c;
  c.subdivision = 1;
  return c;
}

} // namespace

TEST_SUITE("anatomy") {

TEST_CASE("frame_at loops over the cycle") {
  CHECK(frame_at(1.0, 0.0) == 0);
  CHECK(frame_at(1.0, 0.05) == 1);
  CHECK(frame_at(1.0, 0.999) == 19);
  CHECK(frame_at(1.0, 1.0) == 0);
  CHECK(frame_at(0.8, 0.8 * 3.5) == 10);
  CHECK(frame_at(1.0, -0.01) == 19);
  for (int i = 0; i < 5000; ++i) {
    const double t = i * 0.0013;
    CHECK(frame_at(0.9, t) == oracle::frame_index(t, 0.9));
  }
}

TEST_CASE("phantom radii follow a raised cosine peaking at the EDF frame") {
  PhantomConfig c = small_phantom();
  c.edf_index = 5;
  const auto r = c.myocardium_radius_per_frame();
  for (int k = 0; k < kFrameCount; ++k) {
    CHECK(r[static_cast<std::size_t>(k)] == doctest::Approx(oracle::phantom_myocardium_radius(k, 40, 44, 5)));
  }
  CHECK(r[5] == doctest::Approx(44.0));
  CHECK(r[15] == doctest::Approx(40.0));
}

TEST_CASE("generated phantom has concentric shells with the configured radii") {
  const auto a = generate_phantom(small_phantom());
  CHECK(a.edf_index() == 0);
  CHECK(a.cycle_period() == 1.0);
  const auto gaps = radial_gaps(a, Vec3::Zero(), Vec3::UnitZ());
  for (int k = 0; k < kFrameCount; ++k) {
    CHECK(gaps[static_cast<std::size_t>(k)] ==
          doctest::Approx(50.0 - oracle::phantom_myocardium_radius(k, 40, 44, 0)).epsilon(1e-12));
    CHECK(a.frame(k).pericardium.watertight());
    CHECK(a.frame(k).myocardium.watertight());
  }
  CHECK(gaps[0] == doctest::Approx(6.0));
}

TEST_CASE("explicit radii place the EDF at their maximum") {
  PhantomConfig c = small_phantom();
  std::array<double, kFrameCount> r{};
  r.fill(41.0);
  r[7] = 43.5;
  c.myocardium_radii = r;
  CHECK(c.resolved_edf_index() == 7);
  CHECK(generate_phantom(c).edf_index() == 7);
}

TEST_CASE("invalid phantoms are configuration errors") {
  PhantomConfig c = small_phantom();
  c.pericardium_radius = 44.0;
  CHECK_THROWS_AS((void)generate_phantom(c), ConfigError);
  c = small_phantom();
  c.myocardium_min_radius = 45;
  CHECK_THROWS_AS((void)generate_phantom(c), ConfigError);
  c = small_phantom();
  c.cycle_period = 0;
  CHECK_THROWS_AS((void)generate_phantom(c), ConfigError);
  c = small_phantom();
  c.edf_index = 20;
  CHECK_THROWS_AS((void)generate_phantom(c), ConfigError);
  c = small_phantom();
  c.pericardium_pulsation = 7.0;
  CHECK_THROWS_AS((void)generate_phantom(c), ConfigError);
}

TEST_CASE("animated anatomy rejects wrong frame counts and topology changes") {
  const auto a = generate_phantom(small_phantom());
  auto frames = a.frames();
  frames.pop_back();
  CHECK_THROWS_AS(AnimatedAnatomy(frames, 1.0, 0), ConfigError);
  frames = a.frames();
  frames[3].myocardium = IndexedMesh(make_icosphere(41.0, Vec3::Zero(), 2));
  CHECK_THROWS_AS(AnimatedAnatomy(frames, 1.0, 0), ConfigError);
  CHECK_THROWS_AS(AnimatedAnatomy(a.frames(), -1.0, 0), ConfigError);
}

TEST_CASE("phantom config JSON round trip and unknown keys") {
  PhantomConfig c = small_phantom();
  c.center = Vec3(1, 2, 3);
  c.pericardium_pulsation = 0.5;
  const nlohmann::json j = c;
  const auto back = j.get<PhantomConfig>();
  CHECK(back.center == c.center);
  CHECK(back.subdivision == 1);
  CHECK(back.pericardium_pulsation == 0.5);
  nlohmann::json bad = j;
  bad["radius"] = 3;
  CHECK_THROWS_AS((void)bad.get<PhantomConfig>(), ConfigError);
}

TEST_CASE("save and load an anatomy in both formats") {
  const auto a = generate_phantom(small_phantom());
  for (const std::string fmt : {"stl", "obj"}) {
    TempDir dir;
    save_anatomy(a, dir.path(), fmt);
    const auto b = load_anatomy(dir / "anatomy.json");
    CHECK(b.edf_index() == a.edf_index());
    CHECK(b.cycle_period() == a.cycle_period());
    for (int k = 0; k < kFrameCount; ++k) {
      CHECK(b.frame(k).myocardium.mesh().vertices.size() == a.frame(k).myocardium.mesh().vertices.size());
      CHECK(b.frame(k).myocardium.mesh().triangles.size() == a.frame(k).myocardium.mesh().triangles.size());
      // STL carries no indices, so only OBJ keeps the original vertex order
      if (fmt == "obj") {
        CHECK(same_topology(a.frame(k).myocardium.mesh(), b.frame(k).myocardium.mesh()));
      } else {
        CHECK(same_topology(b.frame(0).myocardium.mesh(), b.frame(k).myocardium.mesh()));
      }
    }
    const auto g1 = radial_gaps(a, Vec3::Zero(), Vec3(1, 1, 1));
    const auto g2 = radial_gaps(b, Vec3::Zero(), Vec3(1, 1, 1));
    CHECK(g1[4] == doctest::Approx(g2[4]).epsilon(1e-5));
  }
  TempDir dir;
  CHECK_THROWS_AS(save_anatomy(a, dir.path(), "ply"), ConfigError);
}

TEST_CASE("manifest problems are reported") {
  TempDir dir;
  write_text(dir / "anatomy.json", R"({"cycle_period": 1.0, "frames": []})");
  CHECK_THROWS_AS((void)load_anatomy(dir / "anatomy.json"), ParseError);
  write_text(dir / "anatomy.json", R"({"frames": [], "colour": 1})");
  CHECK_THROWS_AS((void)load_anatomy(dir / "anatomy.json"), ConfigError);
}

} // TEST_SUITE
