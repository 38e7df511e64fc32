#include "epiguide/mesh.hpp"

#include "epiguide/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>

namespace epiguide {

void validate_indices(const Mesh& mesh) {
  const auto n = mesh.vertices.size();
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    for (auto idx : mesh.triangles[i]) {
      if (idx >= n) {
        throw ParseError("triangle " + std::to_string(i) + " references vertex " +
                         std::to_string(idx) + " but mesh has " + std::to_string(n));
      }
    }
  }
}

void compute_normals(Mesh& mesh) {
  mesh.normals.resize(mesh.triangles.size());
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const Vec3 n = (mesh.corner(i, 1) - mesh.corner(i, 0)).cross(mesh.corner(i, 2) - mesh.corner(i, 0));
    const double len = n.norm();
    mesh.normals[i] = len > 0.0 ? Vec3(n / len) : Vec3::Zero();
  }
}

bool is_watertight(const Mesh& mesh) {
  if (mesh.triangles.empty()) {
    return false;
  }
  std::map<std::pair<std::uint32_t, std::uint32_t>, int> edges;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      auto a = t[static_cast<std::size_t>(k)];
      auto b = t[static_cast<std::size_t>((k + 1) % 3)];
      if (a > b) {
        std::swap(a, b);
      }
      ++edges[{a, b}];
    }
  }
  return std::all_of(edges.begin(), edges.end(), [](const auto& e) { return e.second == 2; });
}

bool same_topology(const Mesh& a, const Mesh& b) {
  return a.vertices.size() == b.vertices.size() && a.triangles == b.triangles;
}

void deduplicate_vertices(Mesh& mesh) {
  auto key = [](const Vec3& v) { return std::array<double, 3>{v.x(), v.y(), v.z()}; };
  std::map<std::array<double, 3>, std::uint32_t> index;
  std::vector<Vec3> unique;
  std::vector<std::uint32_t> remap(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    auto [it, inserted] = index.emplace(key(mesh.vertices[i]), static_cast<std::uint32_t>(unique.size()));
    if (inserted) {
      unique.push_back(mesh.vertices[i]);
    }
    remap[i] = it->second;
  }
  for (auto& t : mesh.triangles) {
    for (auto& idx : t) {
      idx = remap[idx];
    }
  }
  mesh.vertices = std::move(unique);
}

Aabb bounds(const Mesh& mesh) {
  Aabb box;
  for (const auto& v : mesh.vertices) {
    box.extend(v);
  }
  return box;
}

namespace {

Mesh unit_icosahedron() {
  Mesh m;
  const double z = 1.0 / std::sqrt(5.0);
  const double r = 2.0 / std::sqrt(5.0);
  m.vertices.emplace_back(0.0, 0.0, 1.0);
  for (int k = 0; k < 5; ++k) {
    const double a = 2.0 * M_PI * k / 5.0;
    m.vertices.emplace_back(r * std::cos(a), r * std::sin(a), z);
  }
  for (int k = 0; k < 5; ++k) {
    const double a = 2.0 * M_PI * k / 5.0 + M_PI / 5.0;
    m.vertices.emplace_back(r * std::cos(a), r * std::sin(a), -z);
  }
  m.vertices.emplace_back(0.0, 0.0, -1.0);

  auto up = [](int k) { return static_cast<std::uint32_t>(1 + (k % 5)); };
  auto low = [](int k) { return static_cast<std::uint32_t>(6 + (k % 5)); };
  for (int k = 0; k < 5; ++k) {
    m.triangles.push_back({0, up(k), up(k + 1)});
    m.triangles.push_back({up(k), low(k), up(k + 1)});
    m.triangles.push_back({up(k + 1), low(k), low(k + 1)});
    m.triangles.push_back({11, low(k + 1), low(k)});
  }
  // Enforce outward winding regardless of the ring layout above.
  for (auto& t : m.triangles) {
    const Vec3 a = m.vertices[t[0]];
    const Vec3 n = (m.vertices[t[1]] - a).cross(m.vertices[t[2]] - a);
    if (n.dot(a + m.vertices[t[1]] + m.vertices[t[2]]) < 0.0) {
      std::swap(t[1], t[2]);
    }
  }
  return m;
}

Mesh subdivide(const Mesh& in) {
  Mesh out;
  out.vertices = in.vertices;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoints;
  auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
    const auto edge = std::minmax(a, b);
    auto it = midpoints.find(edge);
    if (it != midpoints.end()) {
      return it->second;
    }
    const auto idx = static_cast<std::uint32_t>(out.vertices.size());
    out.vertices.push_back((in.vertices[a] + in.vertices[b]).normalized());
    midpoints.emplace(edge, idx);
    return idx;
  };
  out.triangles.reserve(in.triangles.size() * 4);
  for (const auto& t : in.triangles) {
    const auto ab = midpoint(t[0], t[1]);
    const auto bc = midpoint(t[1], t[2]);
    const auto ca = midpoint(t[2], t[0]);
    out.triangles.push_back({t[0], ab, ca});
    out.triangles.push_back({t[1], bc, ab});
    out.triangles.push_back({t[2], ca, bc});
    out.triangles.push_back({ab, bc, ca});
  }
  return out;
}

} // namespace

Mesh make_unit_icosphere(int level) {
  if (level < 0 || level > 8) {
    throw ConfigError("icosphere subdivision level must be in [0, 8]");
  }
  Mesh m = unit_icosahedron();
  for (int i = 0; i < level; ++i) {
    m = subdivide(m);
  }
  return m;
}

Mesh scaled_sphere(const Mesh& unit, double radius, const Vec3& center) {
  Mesh m;
  m.triangles = unit.triangles;
  m.vertices.reserve(unit.vertices.size());
  for (const auto& v : unit.vertices) {
    m.vertices.push_back(center + radius * v);
  }
  compute_normals(m);
  return m;
}

Mesh make_icosphere(double radius, const Vec3& center, int level) {
  return scaled_sphere(make_unit_icosphere(level), radius, center);
}

} // namespace epiguide
