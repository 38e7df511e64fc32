#include "epiguide/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace epiguide {

int Aabb::longest_axis() const {
  const Vec3 ext = hi - lo;
  if (ext.x() >= ext.y() && ext.x() >= ext.z()) {
    return 0;
  }
  return ext.y() >= ext.z() ? 1 : 2;
}

double Aabb::squared_distance(const Vec3& p) const {
  double d2 = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double below = lo[k] - p[k];
    const double above = p[k] - hi[k];
    const double gap = std::max({below, above, 0.0});
    d2 += gap * gap;
  }
  return d2;
}

std::optional<double> Aabb::ray_entry(const Vec3& origin, const Vec3& inv_dir, double tmin,
                                      double tmax) const {
  // Pad the box slightly; hits exactly on a face plane must not be culled.
  constexpr double pad = 1e-9;
  for (int k = 0; k < 3; ++k) {
    double t0 = (lo[k] - pad - origin[k]) * inv_dir[k];
    double t1 = (hi[k] + pad - origin[k]) * inv_dir[k];
    if (std::isnan(t0) || std::isnan(t1)) {
      // Axis-parallel ray starting on a slab plane: inside iff within the slab.
      if (origin[k] < lo[k] - pad || origin[k] > hi[k] + pad) {
        return std::nullopt;
      }
      continue;
    }
    if (t0 > t1) {
      std::swap(t0, t1);
    }
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    if (tmax < tmin) {
      return std::nullopt;
    }
  }
  return tmin;
}

std::optional<TriangleHit> intersect_triangle(const Vec3& origin, const Vec3& dir, const Vec3& a,
                                              const Vec3& b, const Vec3& c, double tmin,
                                              double tmax) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pvec = dir.cross(e2);
  const double det = e1.dot(pvec);
  // Scale-aware parallel test: |det| relative to |dir||e1||e2|.
  const double scale = dir.norm() * e1.norm() * e2.norm();
  if (scale == 0.0 || std::abs(det) <= 1e-14 * scale) {
    return std::nullopt;
  }
  const double inv_det = 1.0 / det;
  const Vec3 tvec = origin - a;
  const double u = tvec.dot(pvec) * inv_det;
  if (u < -kBarycentricSlack || u > 1.0 + kBarycentricSlack) {
    return std::nullopt;
  }
  const Vec3 qvec = tvec.cross(e1);
  const double v = dir.dot(qvec) * inv_det;
  if (v < -kBarycentricSlack || u + v > 1.0 + kBarycentricSlack) {
    return std::nullopt;
  }
  const double t = e2.dot(qvec) * inv_det;
  if (t < tmin || t > tmax) {
    return std::nullopt;
  }
  return TriangleHit{t, u, v, det};
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) {
    return a;
  }
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) {
    return b;
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    return a + (d1 / (d1 - d3)) * ab;
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) {
    return c;
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    return a + (d2 / (d2 - d6)) * ac;
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

} // namespace epiguide
