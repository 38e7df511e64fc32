#pragma once

#include "epiguide/geometry.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace epiguide {

using Triangle = std::array<std::uint32_t, 3>;

/// Triangle surface in millimeters. Normals are per triangle and outward for
/// consistently wound (counter-clockwise seen from outside) closed meshes.
struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<Vec3> normals;

  [[nodiscard]] std::size_t triangle_count() const { return triangles.size(); }
  [[nodiscard]] Vec3 corner(std::size_t tri, int k) const {
    return vertices[triangles[tri][static_cast<std::size_t>(k)]];
  }
};

/// Throws ParseError when a triangle references a vertex that does not exist.
void validate_indices(const Mesh& mesh);

/// Recomputes unit face normals. Zero-area triangles get a zero normal.
void compute_normals(Mesh& mesh);

/// True when every undirected edge is shared by exactly two triangles.
[[nodiscard]] bool is_watertight(const Mesh& mesh);

[[nodiscard]] bool same_topology(const Mesh& a, const Mesh& b);

/// Merges bit-identical vertex positions and rewrites triangle indices.
void deduplicate_vertices(Mesh& mesh);

[[nodiscard]] Aabb bounds(const Mesh& mesh);

/// Geodesic sphere built by repeated 4-way subdivision of an icosahedron whose
/// poles lie on the z axis, so (0, 0, +-radius) are always mesh vertices.
/// Face count is 20 * 4^level.
[[nodiscard]] Mesh make_icosphere(double radius, const Vec3& center, int level);

/// Unit-sphere directions of the icosphere at `level`; shared by every shell
/// of a phantom so frames keep identical topology.
[[nodiscard]] Mesh make_unit_icosphere(int level);

/// Copy of a unit icosphere scaled to `radius` around `center`.
[[nodiscard]] Mesh scaled_sphere(const Mesh& unit, double radius, const Vec3& center);

} // namespace epiguide
