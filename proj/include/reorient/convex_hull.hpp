#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <vector>

#include "reorient/geometry.hpp"

namespace reorient {

/// One planar face of a hull after coplanar triangles are merged.
struct HullFacet {
  Vec3 normal;                  // outward, unit
  double offset = 0;            // plane: normal . x = offset
  std::vector<int> triangles;   // indices into ConvexHull::hull.triangles
  std::vector<int> boundary;    // hull vertex indices, counter-clockwise seen from outside
  std::vector<Vec3> polygon;    // positions of `boundary`

  double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }

  double area() const {
    Vec3 acc = Vec3::Zero();
    for (std::size_t i = 0; i < polygon.size(); ++i)
      acc += polygon[i].cross(polygon[(i + 1) % polygon.size()]);
    return 0.5 * std::abs(acc.dot(normal));
  }
};

struct ConvexHull {
  TriMesh hull;
  std::vector<HullFacet> facets;
};

struct HullTolerances {
  double merge_angle = 1e-6;   // rad
  double merge_offset = 1e-9;  // m
};

namespace detail {

struct HullFace {
  std::array<int, 3> v;
  Vec3 n;
  double d;
  bool alive = true;
};

inline HullFace make_face(const std::vector<Vec3>& pts, int a, int b, int c) {
  HullFace f{{a, b, c}, Vec3::Zero(), 0.0};
  f.n = (pts[b] - pts[a]).cross(pts[c] - pts[a]).normalized();
  f.d = f.n.dot(pts[a]);
  return f;
}

/// Group coplanar triangles and chain their outer edges into one loop per facet.
inline std::vector<HullFacet> merge_facets(const TriMesh& hull, const HullTolerances& tol) {
  std::vector<HullFacet> facets;
  std::vector<Vec3> tri_normals;
  std::vector<double> tri_offsets;
  for (std::size_t i = 0; i < hull.triangles.size(); ++i) {
    const Triangle t = hull.triangle(i);
    tri_normals.push_back(t.normal());
    tri_offsets.push_back(tri_normals.back().dot(t.a));
  }
  std::vector<int> group(hull.triangles.size(), -1);
  const double cos_tol = std::cos(tol.merge_angle);
  for (std::size_t i = 0; i < hull.triangles.size(); ++i) {
    if (group[i] >= 0) continue;
    group[i] = static_cast<int>(facets.size());
    HullFacet f;
    f.triangles.push_back(static_cast<int>(i));
    for (std::size_t j = i + 1; j < hull.triangles.size(); ++j) {
      if (group[j] >= 0) continue;
      if (tri_normals[i].dot(tri_normals[j]) >= cos_tol &&
          std::abs(tri_offsets[i] - tri_offsets[j]) <= tol.merge_offset) {
        group[j] = group[i];
        f.triangles.push_back(static_cast<int>(j));
      }
    }
    facets.push_back(std::move(f));
  }

  for (auto& f : facets) {
    Vec3 acc = Vec3::Zero();
    std::map<int, int> next;
    std::map<std::pair<int, int>, bool> edges;
    for (int ti : f.triangles) {
      const auto& t = hull.triangles[ti];
      const Triangle tri = hull.triangle(ti);
      acc += (tri.b - tri.a).cross(tri.c - tri.a);
      for (int k = 0; k < 3; ++k) edges[{t[k], t[(k + 1) % 3]}] = true;
    }
    f.normal = acc.normalized();
    for (const auto& [e, unused] : edges)
      if (!edges.contains({e.second, e.first})) next[e.first] = e.second;
    const int start = next.begin()->first;
    int cur = start;
    do {
      f.boundary.push_back(cur);
      cur = next.at(cur);
    } while (cur != start && f.boundary.size() <= next.size());
    f.offset = -std::numeric_limits<double>::infinity();
    for (int vi : f.boundary) {
      f.polygon.push_back(hull.vertices[vi]);
      f.offset = std::max(f.offset, f.normal.dot(hull.vertices[vi]));
    }
  }
  return facets;
}

}  // namespace detail

/// Incremental 3-D convex hull. Points within a scale-relative epsilon of a
/// face plane are treated as on the hull surface and discarded.
inline ConvexHull convex_hull(std::span<const Vec3> points, const HullTolerances& tol = {}) {
  if (points.size() < 4) throw Error(ErrorCode::DegenerateMesh, "convex hull needs at least 4 points");
  const std::vector<Vec3> pts(points.begin(), points.end());
  const int n = static_cast<int>(pts.size());

  Vec3 lo = pts[0], hi = pts[0];
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double scale = std::max((hi - lo).maxCoeff(), 1e-12);
  const double eps = 1e-11 * std::max(scale, 1.0);

  // Initial simplex from extreme points.
  int i0 = 0;
  for (int i = 1; i < n; ++i)
    if (pts[i].x() < pts[i0].x()) i0 = i;
  int i1 = -1;
  double best = 0;
  for (int i = 0; i < n; ++i) {
    const double d = (pts[i] - pts[i0]).norm();
    if (d > best) best = d, i1 = i;
  }
  if (i1 < 0 || best < 1e-9 * scale) throw Error(ErrorCode::DegenerateMesh, "all points coincide");
  const Vec3 dir01 = (pts[i1] - pts[i0]).normalized();
  int i2 = -1;
  best = 0;
  for (int i = 0; i < n; ++i) {
    const double d = (pts[i] - pts[i0]).cross(dir01).norm();
    if (d > best) best = d, i2 = i;
  }
  if (i2 < 0 || best < 1e-9 * scale) throw Error(ErrorCode::DegenerateMesh, "all points collinear");
  const Vec3 plane_n = (pts[i1] - pts[i0]).cross(pts[i2] - pts[i0]).normalized();
  int i3 = -1;
  best = 0;
  for (int i = 0; i < n; ++i) {
    const double d = std::abs(plane_n.dot(pts[i] - pts[i0]));
    if (d > best) best = d, i3 = i;
  }
  if (i3 < 0 || best < 1e-9 * scale) throw Error(ErrorCode::DegenerateMesh, "all points coplanar");

  std::vector<detail::HullFace> faces;
  const Vec3 interior = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
  auto add_face = [&](int a, int b, int c) {
    auto f = detail::make_face(pts, a, b, c);
    if (f.n.dot(interior) - f.d > 0) f = detail::make_face(pts, a, c, b);
    faces.push_back(f);
  };
  add_face(i0, i1, i2);
  add_face(i0, i1, i3);
  add_face(i0, i2, i3);
  add_face(i1, i2, i3);

  std::map<std::pair<int, int>, int> edge_face;
  auto register_face = [&](int fi) {
    const auto& v = faces[fi].v;
    for (int k = 0; k < 3; ++k) edge_face[{v[k], v[(k + 1) % 3]}] = fi;
  };
  for (int fi = 0; fi < 4; ++fi) register_face(fi);

  for (int pi = 0; pi < n; ++pi) {
    if (pi == i0 || pi == i1 || pi == i2 || pi == i3) continue;
    const Vec3& p = pts[pi];
    std::vector<int> visible;
    for (int fi = 0; fi < static_cast<int>(faces.size()); ++fi)
      if (faces[fi].alive && faces[fi].n.dot(p) - faces[fi].d > eps) visible.push_back(fi);
    if (visible.empty()) continue;

    std::vector<char> is_visible(faces.size(), 0);
    for (int fi : visible) is_visible[fi] = 1;
    std::vector<std::pair<int, int>> horizon;
    for (int fi : visible) {
      const auto& v = faces[fi].v;
      for (int k = 0; k < 3; ++k) {
        const int a = v[k], b = v[(k + 1) % 3];
        const int other = edge_face.at({b, a});
        if (!is_visible[other]) horizon.emplace_back(a, b);
      }
    }
    for (int fi : visible) {
      faces[fi].alive = false;
      const auto& v = faces[fi].v;
      for (int k = 0; k < 3; ++k) edge_face.erase({v[k], v[(k + 1) % 3]});
    }
    for (const auto& [a, b] : horizon) {
      faces.push_back(detail::make_face(pts, a, b, pi));
      register_face(static_cast<int>(faces.size()) - 1);
    }
  }

  ConvexHull out;
  std::vector<int> used;
  for (const auto& f : faces)
    if (f.alive) used.insert(used.end(), f.v.begin(), f.v.end());
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  std::map<int, int> remap;
  for (int vi : used) {
    remap[vi] = static_cast<int>(out.hull.vertices.size());
    out.hull.vertices.push_back(pts[vi]);
  }
  for (const auto& f : faces)
    if (f.alive) out.hull.triangles.push_back({remap[f.v[0]], remap[f.v[1]], remap[f.v[2]]});
  out.facets = detail::merge_facets(out.hull, tol);
  return out;
}

inline ConvexHull convex_hull(const TriMesh& mesh, const HullTolerances& tol = {}) {
  return convex_hull(std::span<const Vec3>(mesh.vertices), tol);
}

}  // namespace reorient
