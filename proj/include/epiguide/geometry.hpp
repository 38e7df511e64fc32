#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <limits>
#include <optional>

namespace epiguide {

using Vec3 = Eigen::Vector3d;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct Aabb {
  Vec3 lo = Vec3::Constant(kInfinity);
  Vec3 hi = Vec3::Constant(-kInfinity);

  void extend(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void extend(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }
  [[nodiscard]] Vec3 center() const { return 0.5 * (lo + hi); }
  [[nodiscard]] int longest_axis() const;
  /// Squared distance from p to the box (0 inside).
  [[nodiscard]] double squared_distance(const Vec3& p) const;
  /// Slab test; returns entry parameter if the ray overlaps [tmin, tmax].
  [[nodiscard]] std::optional<double> ray_entry(const Vec3& origin, const Vec3& inv_dir,
                                                double tmin, double tmax) const;
};

struct TriangleHit {
  double t = kInfinity;
  double u = 0.0;
  double v = 0.0;
  /// Signed determinant of the Moller-Trumbore system; sign gives the facing.
  double det = 0.0;
};

/// Barycentric slack so rays through shared edges and vertices still register.
inline constexpr double kBarycentricSlack = 1e-10;

/// Ray vs triangle (Moller-Trumbore). Degenerate triangles and rays parallel to
/// the plane report no hit. Hits with t in [tmin, tmax] are accepted.
std::optional<TriangleHit> intersect_triangle(const Vec3& origin, const Vec3& dir,
                                              const Vec3& a, const Vec3& b, const Vec3& c,
                                              double tmin, double tmax);

/// Closest point on triangle abc to p (Voronoi-region walk).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

[[nodiscard]] inline double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) {
  return 0.5 * (b - a).cross(c - a).norm();
}

} // namespace epiguide
