#pragma once

#include "epiguide/geometry.hpp"
#include "epiguide/mesh.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace epiguide {

struct RayHit {
  double t = kInfinity;
  std::uint32_t triangle = 0;
};

struct ClosestPoint {
  Vec3 point = Vec3::Zero();
  double distance = kInfinity;
  std::uint32_t triangle = 0;
};

/// A mesh together with its bounding-volume hierarchy. Immutable after
/// construction, so queries are safe from any number of threads.
class IndexedMesh {
 public:
  IndexedMesh() = default;
  explicit IndexedMesh(Mesh mesh);

  [[nodiscard]] const Mesh& mesh() const { return mesh_; }
  [[nodiscard]] bool watertight() const { return watertight_; }
  [[nodiscard]] const Aabb& box() const { return nodes_.front().box; }
  [[nodiscard]] bool empty() const { return nodes_.empty(); }

  /// Nearest hit with t in [tmin, tmax]. `dir` need not be unit length; t is
  /// in units of |dir|.
  [[nodiscard]] std::optional<RayHit> raycast(const Vec3& origin, const Vec3& dir, double tmin = 0.0,
                                              double tmax = kInfinity) const;

  /// True when the closed segment a-b touches the surface anywhere, tangent
  /// contacts included.
  [[nodiscard]] bool intersects_segment(const Vec3& a, const Vec3& b) const;

  [[nodiscard]] ClosestPoint closest_point(const Vec3& p) const;

  /// Inside-or-on test by crossing parity. Only meaningful for watertight
  /// meshes; returns false for open ones.
  [[nodiscard]] bool contains(const Vec3& p) const;

  /// Number of surface crossings of the ray from p along `dir`; sets
  /// `ambiguous` when a hit grazes an edge, vertex, or the ray's origin.
  [[nodiscard]] int count_crossings(const Vec3& p, const Vec3& dir, bool& ambiguous) const;

 private:
  struct Node {
    Aabb box;
    std::uint32_t first = 0; // leaf: first index into order_; inner: left child
    std::uint32_t count = 0; // 0 for inner nodes (right child = left + 1 is not assumed)
    std::uint32_t right = 0;
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end, std::vector<Vec3>& centroids);

  template <typename Visit>
  void traverse_ray(const Vec3& origin, const Vec3& dir, double tmin, double tmax, Visit&& visit) const;

  Mesh mesh_;
  bool watertight_ = false;
  std::vector<Node> nodes_;
  std::vector<std::uint32_t> order_;
};

} // namespace epiguide
