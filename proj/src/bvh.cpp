#include "epiguide/bvh.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace epiguide {

namespace {

constexpr std::uint32_t kLeafSize = 4;

// Fixed generic directions for parity rays; none is aligned with the icosphere
// poles or any coordinate plane.
const std::array<Vec3, 4>& parity_directions() {
  static const std::array<Vec3, 4> dirs = {
      Vec3(0.5773502691896258, 0.5870947570381727, 0.5675463238374112).normalized(),
      Vec3(-0.3141592653589793, 0.8660254037844386, -0.3882495872361937).normalized(),
      Vec3(0.7071067811865476, -0.2718281828459045, -0.6527036446661393).normalized(),
      Vec3(-0.6180339887498949, -0.5257311121191336, 0.5842349938729108).normalized(),
  };
  return dirs;
}

Vec3 safe_inverse(const Vec3& d) {
  Vec3 inv;
  for (int k = 0; k < 3; ++k) {
    inv[k] = d[k] != 0.0 ? 1.0 / d[k] : kInfinity;
  }
  return inv;
}

} // namespace

IndexedMesh::IndexedMesh(Mesh mesh) : mesh_(std::move(mesh)) {
  if (mesh_.normals.size() != mesh_.triangles.size()) {
    compute_normals(mesh_);
  }
  watertight_ = is_watertight(mesh_);
  const auto n = static_cast<std::uint32_t>(mesh_.triangles.size());
  order_.resize(n);
  std::iota(order_.begin(), order_.end(), 0u);
  if (n == 0) {
    return;
  }
  std::vector<Vec3> centroids(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    centroids[i] = (mesh_.corner(i, 0) + mesh_.corner(i, 1) + mesh_.corner(i, 2)) / 3.0;
  }
  nodes_.reserve(2 * n / kLeafSize + 1);
  build(0, n, centroids);
}

std::uint32_t IndexedMesh::build(std::uint32_t begin, std::uint32_t end, std::vector<Vec3>& centroids) {
  const auto index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb box;
  Aabb centroid_box;
  for (std::uint32_t i = begin; i < end; ++i) {
    const auto tri = order_[i];
    for (int k = 0; k < 3; ++k) {
      box.extend(mesh_.corner(tri, k));
    }
    centroid_box.extend(centroids[tri]);
  }
  nodes_[index].box = box;
  if (end - begin <= kLeafSize) {
    nodes_[index].first = begin;
    nodes_[index].count = end - begin;
    return index;
  }
  const int axis = centroid_box.longest_axis();
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     if (centroids[a][axis] != centroids[b][axis]) {
                       return centroids[a][axis] < centroids[b][axis];
                     }
                     return a < b;
                   });
  const auto left = build(begin, mid, centroids);
  const auto right = build(mid, end, centroids);
  nodes_[index].first = left;
  nodes_[index].right = right;
  nodes_[index].count = 0;
  return index;
}

template <typename Visit>
void IndexedMesh::traverse_ray(const Vec3& origin, const Vec3& dir, double tmin, double tmax,
                               Visit&& visit) const {
  if (nodes_.empty()) {
    return;
  }
  const Vec3 inv = safe_inverse(dir);
  std::array<std::uint32_t, 64> stack{};
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    // visit() may shrink tmax for nearest-hit queries.
    if (!node.box.ray_entry(origin, inv, tmin, tmax)) {
      continue;
    }
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const auto tri = order_[i];
        if (auto hit = intersect_triangle(origin, dir, mesh_.corner(tri, 0), mesh_.corner(tri, 1),
                                          mesh_.corner(tri, 2), tmin, tmax)) {
          visit(tri, *hit, tmax);
        }
      }
    } else {
      stack[top++] = node.right;
      stack[top++] = node.first;
    }
  }
}

std::optional<RayHit> IndexedMesh::raycast(const Vec3& origin, const Vec3& dir, double tmin,
                                           double tmax) const {
  std::optional<RayHit> best;
  traverse_ray(origin, dir, tmin, tmax, [&](std::uint32_t tri, const TriangleHit& hit, double& limit) {
    if (!best || hit.t < best->t) {
      best = RayHit{hit.t, tri};
      limit = hit.t;
    }
  });
  return best;
}

bool IndexedMesh::intersects_segment(const Vec3& a, const Vec3& b) const {
  const Vec3 d = b - a;
  if (d.squaredNorm() == 0.0) {
    return closest_point(a).distance <= 1e-9;
  }
  if (raycast(a, d, 0.0, 1.0)) {
    return true;
  }
  // Grazing contacts (segment lying in a face plane) are missed by the ray
  // test; fall back to the exact endpoint distance.
  return closest_point(a).distance <= 1e-9 || closest_point(b).distance <= 1e-9;
}

ClosestPoint IndexedMesh::closest_point(const Vec3& p) const {
  ClosestPoint best;
  if (nodes_.empty()) {
    return best;
  }
  double best_d2 = kInfinity;
  std::array<std::uint32_t, 64> stack{};
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (node.box.squared_distance(p) > best_d2) {
      continue;
    }
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const auto tri = order_[i];
        const Vec3 q = closest_point_on_triangle(p, mesh_.corner(tri, 0), mesh_.corner(tri, 1),
                                                 mesh_.corner(tri, 2));
        const double d2 = (q - p).squaredNorm();
        if (d2 < best_d2) {
          best_d2 = d2;
          best.point = q;
          best.triangle = tri;
        }
      }
    } else {
      // Descend into the nearer child first.
      const double dl = nodes_[node.first].box.squared_distance(p);
      const double dr = nodes_[node.right].box.squared_distance(p);
      if (dl < dr) {
        stack[top++] = node.right;
        stack[top++] = node.first;
      } else {
        stack[top++] = node.first;
        stack[top++] = node.right;
      }
    }
  }
  best.distance = std::sqrt(best_d2);
  return best;
}

int IndexedMesh::count_crossings(const Vec3& p, const Vec3& dir, bool& ambiguous) const {
  constexpr double edge_eps = 1e-9;
  int crossings = 0;
  ambiguous = false;
  traverse_ray(p, dir, -1e-12, kInfinity, [&](std::uint32_t tri, const TriangleHit& hit, double&) {
    const double w = 1.0 - hit.u - hit.v;
    const Vec3 e1 = mesh_.corner(tri, 1) - mesh_.corner(tri, 0);
    const Vec3 e2 = mesh_.corner(tri, 2) - mesh_.corner(tri, 0);
    const double grazing = std::abs(hit.det) / (e1.norm() * e2.norm() * dir.norm());
    if (hit.u < edge_eps || hit.v < edge_eps || w < edge_eps || hit.t < 1e-12 || grazing < 1e-9) {
      ambiguous = true;
    }
    ++crossings;
  });
  return crossings;
}

bool IndexedMesh::contains(const Vec3& p) const {
  if (!watertight_ || nodes_.empty()) {
    return false;
  }
  constexpr double pad = 1e-9;
  const Aabb& b = box();
  for (int k = 0; k < 3; ++k) {
    if (p[k] < b.lo[k] - pad || p[k] > b.hi[k] + pad) {
      return false;
    }
  }
  if (closest_point(p).distance <= 1e-12) {
    return true;
  }
  int votes_inside = 0;
  int votes = 0;
  for (const auto& dir : parity_directions()) {
    bool ambiguous = false;
    const int n = count_crossings(p, dir, ambiguous);
    if (!ambiguous) {
      return (n % 2) == 1;
    }
    votes_inside += n % 2;
    ++votes;
  }
  return 2 * votes_inside > votes;
}

} // namespace epiguide
