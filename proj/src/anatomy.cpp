#include "epiguide/anatomy.hpp"

#include "epiguide/error.hpp"
#include "epiguide/json_util.hpp"
#include "epiguide/mesh_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

namespace epiguide {

namespace fs = std::filesystem;

AnimatedAnatomy::AnimatedAnatomy(std::vector<FrameSurfaces> frames, double cycle_period_s, int edf_index)
    : frames_(std::move(frames)), cycle_period_(cycle_period_s), edf_index_(edf_index) {
  if (frames_.size() != kFrameCount) {
    throw ConfigError("animated anatomy needs exactly 20 frames, got " + std::to_string(frames_.size()));
  }
  if (!(cycle_period_ > 0.0) || !std::isfinite(cycle_period_)) {
    throw ConfigError("cycle period must be > 0");
  }
  if (edf_index_ < 0 || edf_index_ >= kFrameCount) {
    throw ConfigError("EDF index must be in [0, 19]");
  }
  for (const auto& f : frames_) {
    if (!same_topology(f.pericardium.mesh(), frames_.front().pericardium.mesh()) ||
        !same_topology(f.myocardium.mesh(), frames_.front().myocardium.mesh())) {
      throw ConfigError("all frames must share the topology of frame 0");
    }
  }
}

int frame_at(double cycle_period_s, double time_s) {
  const double phase = time_s / cycle_period_s;
  const double fract = phase - std::floor(phase);
  // Absorb rounding at exact frame boundaries (e.g. t = 0.05 * period).
  auto index = static_cast<int>(std::floor(kFrameCount * fract + 1e-9));
  return index % kFrameCount;
}

std::array<double, kFrameCount> PhantomConfig::myocardium_radius_per_frame() const {
  if (myocardium_radii) {
    return *myocardium_radii;
  }
  std::array<double, kFrameCount> r{};
  for (int k = 0; k < kFrameCount; ++k) {
    const double w = 0.5 * (1.0 + std::cos(2.0 * M_PI * (k - edf_index) / kFrameCount));
    r[static_cast<std::size_t>(k)] = myocardium_min_radius + (myocardium_max_radius - myocardium_min_radius) * w;
  }
  return r;
}

std::array<double, kFrameCount> PhantomConfig::pericardium_radius_per_frame() const {
  std::array<double, kFrameCount> r{};
  const int edf = resolved_edf_index();
  for (int k = 0; k < kFrameCount; ++k) {
    r[static_cast<std::size_t>(k)] =
        pericardium_radius + pericardium_pulsation * std::cos(2.0 * M_PI * (k - edf) / kFrameCount);
  }
  return r;
}

int PhantomConfig::resolved_edf_index() const {
  if (!myocardium_radii) {
    return edf_index;
  }
  const auto& r = *myocardium_radii;
  return static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
}

void PhantomConfig::validate() const {
  if (!myocardium_radii) {
    if (!(myocardium_min_radius > 0.0) || myocardium_max_radius < myocardium_min_radius) {
      throw ConfigError("myocardium radii must satisfy 0 < min <= max");
    }
    if (edf_index < 0 || edf_index >= kFrameCount) {
      throw ConfigError("edf_index must be in [0, 19]");
    }
  }
  const auto myo = myocardium_radius_per_frame();
  if (std::any_of(myo.begin(), myo.end(), [](double r) { return !(r > 0.0); })) {
    throw ConfigError("myocardium radii must be > 0");
  }
  if (!(pericardium_pulsation >= 0.0)) {
    throw ConfigError("pericardium pulsation must be >= 0");
  }
  const double myo_max = *std::max_element(myo.begin(), myo.end());
  if (!(pericardium_radius - pericardium_pulsation > myo_max)) {
    throw ConfigError("pericardium radius must exceed the largest myocardium radius");
  }
  if (!(cycle_period > 0.0)) {
    throw ConfigError("cycle period must be > 0");
  }
  if (subdivision < 0 || subdivision > 7) {
    throw ConfigError("subdivision must be in [0, 7]");
  }
}

AnimatedAnatomy generate_phantom(const PhantomConfig& config) {
  config.validate();
  const Mesh unit = make_unit_icosphere(config.subdivision);
  const auto myo = config.myocardium_radius_per_frame();
  const auto peri = config.pericardium_radius_per_frame();
  std::vector<FrameSurfaces> frames;
  frames.reserve(kFrameCount);
  for (std::size_t k = 0; k < kFrameCount; ++k) {
    frames.push_back(FrameSurfaces{IndexedMesh(scaled_sphere(unit, peri[k], config.center)),
                                   IndexedMesh(scaled_sphere(unit, myo[k], config.center))});
  }
  return AnimatedAnatomy(std::move(frames), config.cycle_period, config.resolved_edf_index());
}

void from_json(const nlohmann::json& j, PhantomConfig& c) {
  JsonReader r(j, "phantom");
  c.myocardium_min_radius = r.get_or("myocardium_min_radius", c.myocardium_min_radius);
  c.myocardium_max_radius = r.get_or("myocardium_max_radius", c.myocardium_max_radius);
  if (auto radii = r.optional<std::vector<double>>("myocardium_radii")) {
    if (radii->size() != kFrameCount) {
      throw ConfigError("phantom.myocardium_radii must have 20 entries");
    }
    std::array<double, kFrameCount> a{};
    std::copy(radii->begin(), radii->end(), a.begin());
    c.myocardium_radii = a;
  }
  c.pericardium_radius = r.get_or("pericardium_radius", c.pericardium_radius);
  c.pericardium_pulsation = r.get_or("pericardium_pulsation", c.pericardium_pulsation);
  c.center = r.get_vec3_or("center", c.center);
  c.subdivision = r.get_or("subdivision", c.subdivision);
  c.cycle_period = r.get_or("cycle_period", c.cycle_period);
  c.edf_index = r.get_or("edf_index", c.edf_index);
  r.reject_unknown();
}

void to_json(nlohmann::json& j, const PhantomConfig& c) {
  j = nlohmann::json{{"myocardium_min_radius", c.myocardium_min_radius},
                     {"myocardium_max_radius", c.myocardium_max_radius},
                     {"pericardium_radius", c.pericardium_radius},
                     {"pericardium_pulsation", c.pericardium_pulsation},
                     {"center", {c.center.x(), c.center.y(), c.center.z()}},
                     {"subdivision", c.subdivision},
                     {"cycle_period", c.cycle_period},
                     {"edf_index", c.edf_index}};
  if (c.myocardium_radii) {
    j["myocardium_radii"] = *c.myocardium_radii;
  }
}

void save_anatomy(const AnimatedAnatomy& anatomy, const fs::path& dir, const std::string& format) {
  if (format != "stl" && format != "obj") {
    throw ConfigError("mesh format must be 'stl' or 'obj'");
  }
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["cycle_period"] = anatomy.cycle_period();
  manifest["edf_index"] = anatomy.edf_index();
  manifest["frames"] = nlohmann::json::array();
  for (int k = 0; k < kFrameCount; ++k) {
    char peri[64];
    char myo[64];
    std::snprintf(peri, sizeof(peri), "pericardium_%02d.%s", k, format.c_str());
    std::snprintf(myo, sizeof(myo), "myocardium_%02d.%s", k, format.c_str());
    const auto& f = anatomy.frame(k);
    if (format == "stl") {
      save_stl(f.pericardium.mesh(), dir / peri, StlEncoding::Binary);
      save_stl(f.myocardium.mesh(), dir / myo, StlEncoding::Binary);
    } else {
      save_obj(f.pericardium.mesh(), dir / peri);
      save_obj(f.myocardium.mesh(), dir / myo);
    }
    manifest["frames"].push_back({{"pericardium", peri}, {"myocardium", myo}});
  }
  write_file_atomically(dir / "anatomy.json", manifest.dump(2) + "\n");
}

AnimatedAnatomy load_anatomy(const fs::path& manifest_path) {
  const nlohmann::json manifest = read_json_file(manifest_path);
  const fs::path base = manifest_path.parent_path();
  JsonReader r(manifest, "anatomy manifest");
  const double period = r.get_or("cycle_period", 1.0);
  const int edf = r.get_or("edf_index", 0);
  const auto frames_json = r.required<nlohmann::json>("frames");
  r.reject_unknown();
  if (!frames_json.is_array() || frames_json.size() != kFrameCount) {
    throw ParseError("anatomy manifest must list exactly 20 frames");
  }
  std::vector<FrameSurfaces> frames;
  for (const auto& f : frames_json) {
    auto peri = load_mesh(base / f.at("pericardium").get<std::string>());
    auto myo = load_mesh(base / f.at("myocardium").get<std::string>());
    frames.push_back(FrameSurfaces{IndexedMesh(std::move(peri.mesh)), IndexedMesh(std::move(myo.mesh))});
  }
  return AnimatedAnatomy(std::move(frames), period, edf);
}

std::array<double, kFrameCount> radial_gaps(const AnimatedAnatomy& anatomy, const Vec3& center,
                                            const Vec3& direction) {
  std::array<double, kFrameCount> gaps{};
  const Vec3 dir = direction.normalized();
  for (int k = 0; k < kFrameCount; ++k) {
    const auto& f = anatomy.frame(k);
    const auto peri = f.pericardium.raycast(center, dir);
    const auto myo = f.myocardium.raycast(center, dir);
    gaps[static_cast<std::size_t>(k)] = (peri && myo) ? peri->t - myo->t : kInfinity;
  }
  return gaps;
}

} // namespace epiguide
