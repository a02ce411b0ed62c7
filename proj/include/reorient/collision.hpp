#pragma once

#include <algorithm>
#include <array>

#include "reorient/geometry.hpp"

namespace reorient {

/// Contacts that penetrate by less than this are treated as touching, not colliding.
inline constexpr double kContactTolerance = 1e-6;

struct OrientedBox {
  Pose frame;     // center and axes
  Vec3 half;      // half extents along the frame axes

  std::array<Vec3, 8> corners() const {
    std::array<Vec3, 8> c;
    for (int i = 0; i < 8; ++i)
      c[i] = frame.apply(Vec3((i & 1) ? half.x() : -half.x(), (i & 2) ? half.y() : -half.y(),
                              (i & 4) ? half.z() : -half.z()));
    return c;
  }

  TriMesh to_mesh() const { return make_box(-half, half).transformed(frame); }

  OrientedBox transformed(const Pose& pose) const { return {pose * frame, half}; }
};

struct Capsule {
  Vec3 a, b;
  double radius = 0;
};

namespace detail {

inline double box_radius(const OrientedBox& box, const Vec3& axis) {
  const Mat3& r = box.frame.rotation;
  return box.half.x() * std::abs(r.col(0).dot(axis)) + box.half.y() * std::abs(r.col(1).dot(axis)) +
         box.half.z() * std::abs(r.col(2).dot(axis));
}

/// Segment-segment closest distance (clamped parametric solution).
inline double segment_segment_distance(const Vec3& p1, const Vec3& q1, const Vec3& p2, const Vec3& q2) {
  const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0, t = 0;
  if (a <= 1e-24 && e <= 1e-24) return r.norm();
  if (a <= 1e-24) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= 1e-24) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2), denom = a * e - b * b;
      s = denom > 1e-24 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0) {
        t = 0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1) {
        t = 1;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  return ((p1 + d1 * s) - (p2 + d2 * t)).norm();
}

}  // namespace detail

/// Separating-axis test between an oriented box and a triangle over the 13
/// candidate axes. Returns true only if the shapes overlap by more than `tol`
/// along every axis.
inline bool box_triangle_overlap(const OrientedBox& box, const Triangle& tri, double tol = kContactTolerance) {
  const Vec3 c = box.frame.position;
  const std::array<Vec3, 3> v = {tri.a - c, tri.b - c, tri.c - c};
  const std::array<Vec3, 3> edges = {v[1] - v[0], v[2] - v[1], v[0] - v[2]};
  const Mat3& r = box.frame.rotation;

  auto separated = [&](const Vec3& axis) {
    const double len = axis.norm();
    if (len < 1e-12) return false;
    const Vec3 n = axis / len;
    const double p0 = v[0].dot(n), p1 = v[1].dot(n), p2 = v[2].dot(n);
    const double rad = detail::box_radius(box, n);
    const double lo = std::min({p0, p1, p2}), hi = std::max({p0, p1, p2});
    return lo >= rad - tol || hi <= -rad + tol;
  };

  for (int i = 0; i < 3; ++i)
    if (separated(r.col(i))) return false;
  if (separated(edges[0].cross(edges[1]))) return false;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (separated(r.col(i).cross(edges[j]))) return false;
  return true;
}

/// Box vs closed mesh: surface overlap, or box center strictly inside the solid.
inline bool box_mesh_intersect(const OrientedBox& box, const TriMesh& mesh, double tol = kContactTolerance) {
  const auto [lo, hi] = mesh.bounds();
  Vec3 blo = Vec3::Constant(std::numeric_limits<double>::infinity()), bhi = -blo;
  for (const auto& p : box.corners()) {
    blo = blo.cwiseMin(p);
    bhi = bhi.cwiseMax(p);
  }
  if ((blo.array() > hi.array() - tol).any() || (bhi.array() < lo.array() + tol).any()) return false;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i)
    if (box_triangle_overlap(box, mesh.triangle(i), tol)) return true;
  return point_in_mesh(mesh, box.frame.position);
}

/// Penetration into the halfspace z < height.
inline bool box_below_plane(const OrientedBox& box, double height, double tol = kContactTolerance) {
  return box.frame.position.z() - detail::box_radius(box, Vec3::UnitZ()) < height - tol;
}

inline double segment_triangle_distance(const Vec3& p, const Vec3& q, const Triangle& tri) {
  const Vec3 d = q - p;
  if (d.squaredNorm() > 1e-24) {
    auto t = ray_triangle(p, d, tri);
    if (t && *t >= 0 && *t <= 1) return 0;
  }
  double best = std::min((closest_point_on_triangle(p, tri.a, tri.b, tri.c) - p).norm(),
                         (closest_point_on_triangle(q, tri.a, tri.b, tri.c) - q).norm());
  best = std::min(best, detail::segment_segment_distance(p, q, tri.a, tri.b));
  best = std::min(best, detail::segment_segment_distance(p, q, tri.b, tri.c));
  best = std::min(best, detail::segment_segment_distance(p, q, tri.c, tri.a));
  return best;
}

inline bool capsule_mesh_intersect(const Capsule& cap, const TriMesh& mesh, double tol = kContactTolerance) {
  const auto [lo, hi] = mesh.bounds();
  const Vec3 clo = cap.a.cwiseMin(cap.b).array() - cap.radius;
  const Vec3 chi = cap.a.cwiseMax(cap.b).array() + cap.radius;
  if ((clo.array() > hi.array()).any() || (chi.array() < lo.array()).any()) return false;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i)
    if (segment_triangle_distance(cap.a, cap.b, mesh.triangle(i)) < cap.radius - tol) return true;
  return point_in_mesh(mesh, cap.a);
}

inline bool capsule_below_plane(const Capsule& cap, double height, double tol = kContactTolerance) {
  return std::min(cap.a.z(), cap.b.z()) - cap.radius < height - tol;
}

/// Closed triangle mesh approximating a capsule: `segments` around the axis,
/// hemispherical caps with segments/4 rings each.
inline TriMesh tessellate_capsule(const Capsule& cap, int segments = 16) {
  const Vec3 axis_raw = cap.b - cap.a;
  const double len = axis_raw.norm();
  const Vec3 axis = len > 1e-12 ? Vec3(axis_raw / len) : Vec3::UnitZ();
  const Mat3 frame = rotation_between(Vec3::UnitZ(), axis);
  const int rings = std::max(1, segments / 4);
  TriMesh m;
  // Ring k runs from the bottom pole (k = 0) to the top pole (k = 2*rings + 1).
  std::vector<std::pair<double, double>> profile;  // (z, r)
  for (int k = 1; k <= rings; ++k) {
    const double phi = -kPi / 2 + kPi / 2 * k / (rings + 0.0);
    profile.emplace_back(cap.radius * std::sin(phi), cap.radius * std::cos(phi));
  }
  for (int k = 0; k < rings; ++k) {
    const double phi = kPi / 2 * k / (rings + 0.0);
    profile.emplace_back(len + cap.radius * std::sin(phi), cap.radius * std::cos(phi));
  }
  m.vertices.push_back(cap.a + frame * Vec3(0, 0, -cap.radius));
  for (const auto& [z, r] : profile)
    for (int s = 0; s < segments; ++s) {
      const double a = 2 * kPi * s / segments;
      m.vertices.push_back(cap.a + frame * Vec3(r * std::cos(a), r * std::sin(a), z));
    }
  m.vertices.push_back(cap.a + frame * Vec3(0, 0, len + cap.radius));
  const int top = static_cast<int>(m.vertices.size()) - 1;
  const int nrings = static_cast<int>(profile.size());
  auto at = [&](int ring, int s) { return 1 + ring * segments + (s % segments); };
  for (int s = 0; s < segments; ++s) m.triangles.push_back({0, at(0, s + 1), at(0, s)});
  for (int k = 0; k + 1 < nrings; ++k)
    for (int s = 0; s < segments; ++s) {
      m.triangles.push_back({at(k, s), at(k, s + 1), at(k + 1, s + 1)});
      m.triangles.push_back({at(k, s), at(k + 1, s + 1), at(k + 1, s)});
    }
  for (int s = 0; s < segments; ++s) m.triangles.push_back({top, at(nrings - 1, s), at(nrings - 1, s + 1)});
  return m;
}

}  // namespace reorient
