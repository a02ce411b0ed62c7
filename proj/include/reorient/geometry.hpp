#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "reorient/error.hpp"

namespace reorient {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;

/// Rigid transform. Maps a point x to rotation * x + position.
struct Pose {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();

  static Pose identity() { return {}; }

  static Pose from_translation(const Vec3& p) { return {p, Mat3::Identity()}; }

  Vec3 apply(const Vec3& x) const { return rotation * x + position; }

  Vec3 apply_direction(const Vec3& d) const { return rotation * d; }

  Pose inverse() const {
    Pose inv;
    inv.rotation = rotation.transpose();
    inv.position = -(inv.rotation * position);
    return inv;
  }

  /// this ∘ other: first other, then this.
  Pose operator*(const Pose& other) const {
    return {rotation * other.position + position, rotation * other.rotation};
  }

  bool is_valid(double tol = 1e-9) const {
    const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    return ortho < tol && std::abs(rotation.determinant() - 1.0) < tol && position.allFinite();
  }
};

inline Vec3 transform_point(const Pose& pose, const Vec3& x) { return pose.apply(x); }

inline Pose transform_pose(const Pose& pose, const Pose& x) { return pose * x; }

inline Mat3 axis_angle(const Vec3& axis, double angle) {
  return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

inline Mat3 rot_x(double a) { return axis_angle(Vec3::UnitX(), a); }
inline Mat3 rot_y(double a) { return axis_angle(Vec3::UnitY(), a); }
inline Mat3 rot_z(double a) { return axis_angle(Vec3::UnitZ(), a); }

/// Smallest rotation taking unit vector `from` onto unit vector `to`. For
/// opposite vectors the rotation is a half turn about an axis perpendicular to
/// `from`, chosen deterministically.
inline Mat3 rotation_between(const Vec3& from, const Vec3& to) {
  const Vec3 a = from.normalized();
  const Vec3 b = to.normalized();
  const double c = a.dot(b);
  if (c > 1.0 - 1e-15) return Mat3::Identity();
  if (c < -1.0 + 1e-12) {
    Vec3 perp = a.cross(Vec3::UnitX());
    if (perp.norm() < 1e-6) perp = a.cross(Vec3::UnitY());
    return axis_angle(perp.normalized(), kPi);
  }
  const Vec3 axis = a.cross(b);
  return axis_angle(axis.normalized(), std::atan2(axis.norm(), c));
}

/// Re-orthonormalize a nearly orthonormal matrix (polar decomposition via SVD).
inline Mat3 orthonormalize(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1;
    r = u * svd.matrixV().transpose();
  }
  return r;
}

/// Rotation angle between two rotation matrices, radians.
inline double rotation_distance(const Mat3& a, const Mat3& b) {
  const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

struct Triangle {
  Vec3 a, b, c;

  Vec3 normal() const { return (b - a).cross(c - a).normalized(); }
  double area() const { return 0.5 * (b - a).cross(c - a).norm(); }
};

/// Indexed triangle mesh, counter-clockwise outward winding.
struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;

  Triangle triangle(std::size_t i) const {
    const auto& t = triangles[i];
    return {vertices[t[0]], vertices[t[1]], vertices[t[2]]};
  }

  bool indices_in_range() const {
    const int n = static_cast<int>(vertices.size());
    for (const auto& t : triangles)
      for (int idx : t)
        if (idx < 0 || idx >= n) return false;
    return true;
  }

  /// Every undirected edge is used by exactly two triangles, once in each direction.
  bool is_watertight() const {
    if (triangles.empty() || !indices_in_range()) return false;
    std::map<std::pair<int, int>, int> directed;
    for (const auto& t : triangles) {
      for (int k = 0; k < 3; ++k) {
        const int u = t[k], v = t[(k + 1) % 3];
        if (u == v) return false;
        if (++directed[{u, v}] > 1) return false;
      }
    }
    for (const auto& [edge, count] : directed)
      if (!directed.contains({edge.second, edge.first})) return false;
    return true;
  }

  TriMesh transformed(const Pose& pose) const {
    TriMesh out = *this;
    for (auto& v : out.vertices) v = pose.apply(v);
    return out;
  }

  TriMesh scaled(double s) const {
    TriMesh out = *this;
    for (auto& v : out.vertices) v *= s;
    return out;
  }

  /// Concatenate another shell; indices of `other` are offset.
  void append(const TriMesh& other) {
    const int base = static_cast<int>(vertices.size());
    vertices.insert(vertices.end(), other.vertices.begin(), other.vertices.end());
    for (auto t : other.triangles) triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
  }

  double surface_area() const {
    double a = 0;
    for (std::size_t i = 0; i < triangles.size(); ++i) a += triangle(i).area();
    return a;
  }

  std::pair<Vec3, Vec3> bounds() const {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = -lo;
    for (const auto& v : vertices) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    return {lo, hi};
  }
};

/// Signed volume of the mesh (positive for outward winding).
inline double signed_volume(const TriMesh& mesh) {
  double vol = 0;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const Triangle t = mesh.triangle(i);
    vol += t.a.dot(t.b.cross(t.c)) / 6.0;
  }
  return vol;
}

/// Uniform-density centroid from signed tetrahedra against the origin.
inline Vec3 center_of_mass(const TriMesh& mesh) {
  if (!mesh.is_watertight())
    throw Error(ErrorCode::NonWatertight, "center_of_mass requires a closed mesh");
  // Shift to the vertex centroid first so far-from-origin meshes keep precision.
  Vec3 ref = Vec3::Zero();
  for (const auto& v : mesh.vertices) ref += v;
  ref /= static_cast<double>(mesh.vertices.size());
  double vol = 0;
  Vec3 moment = Vec3::Zero();
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const Triangle t = mesh.triangle(i);
    const Vec3 a = t.a - ref, b = t.b - ref, c = t.c - ref;
    const double v = a.dot(b.cross(c)) / 6.0;
    vol += v;
    moment += v * (a + b + c) / 4.0;
  }
  if (std::abs(vol) < 1e-18) throw Error(ErrorCode::DegenerateMesh, "mesh encloses zero volume");
  return ref + moment / vol;
}

// ---------------------------------------------------------------------------
// Queries

inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return a + ab * (d1 / (d1 - d3));
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return a + ac * (d2 / (d2 - d6));
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0)
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

inline double distance_to_mesh(const TriMesh& mesh, const Vec3& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const Triangle t = mesh.triangle(i);
    best = std::min(best, (closest_point_on_triangle(p, t.a, t.b, t.c) - p).norm());
  }
  return best;
}

struct RayHit {
  double t = 0;
  std::size_t triangle = 0;
  Vec3 point;
};

/// Möller–Trumbore. Returns the ray parameter of the hit, if any.
inline std::optional<double> ray_triangle(const Vec3& origin, const Vec3& dir, const Triangle& tri) {
  const Vec3 e1 = tri.b - tri.a, e2 = tri.c - tri.a;
  const Vec3 h = dir.cross(e2);
  const double det = e1.dot(h);
  if (std::abs(det) < 1e-15) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 s = origin - tri.a;
  const double u = inv * s.dot(h);
  if (u < -1e-12 || u > 1 + 1e-12) return std::nullopt;
  const Vec3 q = s.cross(e1);
  const double v = inv * dir.dot(q);
  if (v < -1e-12 || u + v > 1 + 1e-12) return std::nullopt;
  return inv * e2.dot(q);
}

/// First hit with t > t_min.
inline std::optional<RayHit> raycast(const TriMesh& mesh, const Vec3& origin, const Vec3& dir,
                                     double t_min = 1e-9) {
  std::optional<RayHit> best;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    auto t = ray_triangle(origin, dir, mesh.triangle(i));
    if (t && *t > t_min && (!best || *t < best->t)) best = RayHit{*t, i, origin + *t * dir};
  }
  return best;
}

/// Parity test along an irrational-ish direction to avoid edge hits.
inline bool point_in_mesh(const TriMesh& mesh, const Vec3& p) {
  const Vec3 dir = Vec3(0.5773502691896258, 0.5773502691896257, 0.5773502691896259).normalized();
  const Vec3 d = (dir + Vec3(1.3e-4, -2.9e-4, 0.7e-4)).normalized();
  int crossings = 0;
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    auto t = ray_triangle(p, d, mesh.triangle(i));
    if (t && *t > 0) ++crossings;
  }
  return crossings % 2 == 1;
}

// ---------------------------------------------------------------------------
// Builders for the toy-block fixtures used across tests and the CLI.

/// Axis-aligned box [lo, hi].
inline TriMesh make_box(const Vec3& lo, const Vec3& hi) {
  TriMesh m;
  for (int i = 0; i < 8; ++i)
    m.vertices.emplace_back((i & 1) ? hi.x() : lo.x(), (i & 2) ? hi.y() : lo.y(),
                            (i & 4) ? hi.z() : lo.z());
  m.triangles = {{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                 {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return m;
}

/// Box of the given edge lengths centered at the origin.
inline TriMesh make_centered_box(const Vec3& extents) { return make_box(-extents / 2, extents / 2); }

inline TriMesh make_regular_tetrahedron(double edge = 1.0) {
  const double s = edge / (2.0 * std::sqrt(2.0));
  TriMesh m;
  m.vertices = {Vec3(1, 1, 1) * s, Vec3(1, -1, -1) * s, Vec3(-1, 1, -1) * s, Vec3(-1, -1, 1) * s};
  m.triangles = {{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return m;
}

namespace detail {

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline bool point_in_tri2(const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
  return cross2(b - a, p - a) >= 0 && cross2(c - b, p - b) >= 0 && cross2(a - c, p - c) >= 0;
}

}  // namespace detail

/// Ear-clipping triangulation of a simple counter-clockwise polygon.
inline std::vector<std::array<int, 3>> triangulate_polygon(std::span<const Vec2> poly) {
  std::vector<int> idx(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) idx[i] = static_cast<int>(i);
  std::vector<std::array<int, 3>> out;
  while (idx.size() > 3) {
    bool clipped = false;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const int ia = idx[(i + idx.size() - 1) % idx.size()], ib = idx[i], ic = idx[(i + 1) % idx.size()];
      const Vec2 &a = poly[ia], &b = poly[ib], &c = poly[ic];
      if (detail::cross2(b - a, c - b) <= 1e-15) continue;
      bool ear = true;
      for (int j : idx) {
        if (j == ia || j == ib || j == ic) continue;
        if (detail::point_in_tri2(poly[j], a, b, c)) {
          ear = false;
          break;
        }
      }
      if (!ear) continue;
      out.push_back({ia, ib, ic});
      idx.erase(idx.begin() + static_cast<std::ptrdiff_t>(i));
      clipped = true;
      break;
    }
    if (!clipped) throw Error(ErrorCode::InvalidMesh, "polygon is not simple or not counter-clockwise");
  }
  out.push_back({idx[0], idx[1], idx[2]});
  return out;
}

/// Extrude a simple counter-clockwise polygon in the xy plane from z = 0 to z = height.
inline TriMesh make_prism(std::span<const Vec2> polygon, double height) {
  const int n = static_cast<int>(polygon.size());
  TriMesh m;
  for (const auto& p : polygon) m.vertices.emplace_back(p.x(), p.y(), 0.0);
  for (const auto& p : polygon) m.vertices.emplace_back(p.x(), p.y(), height);
  for (const auto& t : triangulate_polygon(polygon)) {
    m.triangles.push_back({t[0], t[2], t[1]});
    m.triangles.push_back({t[0] + n, t[1] + n, t[2] + n});
  }
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    m.triangles.push_back({i, j, j + n});
    m.triangles.push_back({i, j + n, i + n});
  }
  return m;
}

/// L-shaped block: a `leg` x `leg` square with a `notch` x `notch` corner removed, extruded.
inline TriMesh make_l_block(double leg, double notch, double height) {
  const std::vector<Vec2> poly = {{0, 0}, {leg, 0}, {leg, leg - notch}, {leg - notch, leg - notch},
                                  {leg - notch, leg}, {0, leg}};
  return make_prism(poly, height);
}

inline TriMesh make_cylinder(double radius, double height, int segments) {
  std::vector<Vec2> poly;
  for (int i = 0; i < segments; ++i) {
    const double a = 2 * kPi * i / segments;
    poly.emplace_back(radius * std::cos(a), radius * std::sin(a));
  }
  return make_prism(poly, height);
}

}  // namespace reorient
