#pragma once

#include <map>
#include <vector>

#include "reorient/convex_hull.hpp"
#include "reorient/grasp.hpp"

namespace reorient {

struct Obstacle {
  TriMesh mesh;  // object-local
  Pose pose;
  TriMesh world;  // mesh transformed by pose

  Obstacle() = default;
  Obstacle(TriMesh m, const Pose& p) : mesh(std::move(m)), pose(p), world(mesh.transformed(p)) {}
};

struct TableExtent {
  double x_min = -1.0, x_max = 1.0, y_min = -1.0, y_max = 1.0;

  bool contains(const Vec2& p) const { return p.x() >= x_min && p.x() <= x_max && p.y() >= y_min && p.y() <= y_max; }
};

struct Scene {
  double table_height = 0.0;
  TableExtent table_extent;
  std::vector<Obstacle> obstacles;
  std::vector<Vec2> candidate_regrasp_positions;

  void validate() const {
    for (const auto& p : candidate_regrasp_positions)
      if (!table_extent.contains(p))
        throw Error(ErrorCode::InvalidRequest, "regrasp position outside the table extent");
    for (const auto& o : obstacles)
      if (o.world.bounds().first.z() < table_height - 1e-6)
        throw Error(ErrorCode::InvalidRequest, "obstacle extends below the table plane");
  }
};

/// Joint solutions at the grasp, pregrasp and retraction poses of one grasp.
struct PrimitiveJoints {
  Eigen::VectorXd o, pre, ret;
};

/// A stable pose of the object and the grasps still usable at it.
struct Placement {
  int id = 0;
  Pose pose;  // world frame
  int support_facet = -1;
  std::vector<int> accessible_grasp_ids;  // ascending
  std::map<int, Pose> world_grasp_poses;
  std::map<int, PrimitiveJoints> ik_solutions;  // filled by robot filtering

  bool empty() const { return accessible_grasp_ids.empty(); }
};

struct StablePlacement {
  int support_facet = 0;
  Pose pose;  // canonical: facet on z = 0, COM projection at the origin, yaw 0
};

/// Smallest signed distance from the COM's projection on the facet plane to
/// the facet's boundary edges. Positive inside.
inline double support_margin(const HullFacet& facet, const Vec3& com) {
  const Vec3 c = com - facet.signed_distance(com) * facet.normal;
  double margin = std::numeric_limits<double>::infinity();
  const std::size_t n = facet.polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& a = facet.polygon[i];
    const Vec3& b = facet.polygon[(i + 1) % n];
    const Vec3 edge = b - a;
    if (edge.norm() < 1e-15) continue;
    const Vec3 inward = facet.normal.cross(edge).normalized();
    margin = std::min(margin, inward.dot(c - a));
  }
  return margin;
}

/// Rotation that turns the outward facet normal into -z, with no extra yaw.
inline Mat3 canonical_rotation(const Vec3& facet_normal) { return rotation_between(facet_normal, -Vec3::UnitZ()); }

inline std::vector<StablePlacement> stable_placements(const ConvexHull& hull, const Vec3& com,
                                                      double stability_margin = 0.002) {
  std::vector<StablePlacement> out;
  for (std::size_t i = 0; i < hull.facets.size(); ++i) {
    const HullFacet& f = hull.facets[i];
    if (support_margin(f, com) < stability_margin) continue;
    const Vec3 projected = com - f.signed_distance(com) * f.normal;
    StablePlacement sp;
    sp.support_facet = static_cast<int>(i);
    sp.pose.rotation = canonical_rotation(f.normal);
    sp.pose.position = -(sp.pose.rotation * projected);
    out.push_back(sp);
  }
  if (out.empty()) throw Error(ErrorCode::NoStablePlacement, "no hull facet supports the center of mass");
  return out;
}

/// Which hull facet rests on the table at `pose`, if any: the facet whose
/// world normal points straight down and whose plane coincides with the table.
inline std::optional<int> resting_facet(const ConvexHull& hull, const Pose& pose, double table_height,
                                        double angle_tol = 1e-4, double height_tol = 1e-6) {
  for (std::size_t i = 0; i < hull.facets.size(); ++i) {
    const HullFacet& f = hull.facets[i];
    const Vec3 n = pose.rotation * f.normal;
    if (n.dot(-Vec3::UnitZ()) < std::cos(angle_tol)) continue;
    bool flush = true;
    for (const auto& v : f.polygon)
      if (std::abs(pose.apply(v).z() - table_height) > height_tol) flush = false;
    if (flush) return static_cast<int>(i);
  }
  return std::nullopt;
}

inline bool gripper_hits_scene(const GripperModel& gripper, const Pose& world_pose, double jaw_width,
                               const Scene& scene) {
  for (const auto& box : gripper.boxes(world_pose, jaw_width)) {
    if (box_below_plane(box, scene.table_height)) return true;
    for (const auto& obstacle : scene.obstacles)
      if (box_mesh_intersect(box, obstacle.world)) return true;
  }
  return false;
}

/// World poses of the grasps whose gripper volume is clear of the table
/// halfspace and every obstacle when the object sits at `placement_pose`.
inline std::vector<std::pair<int, Pose>> associate_grasps(const Pose& placement_pose, const GraspSet& grasp_set,
                                                          const Scene& scene) {
  std::vector<char> keep(grasp_set.size(), 0);
  std::vector<Pose> world(grasp_set.size());
  parallel_for(grasp_set.size(), [&](std::size_t i) {
    const Grasp& g = grasp_set.grasps[i];
    world[i] = placement_pose * g.pose;
    keep[i] = !gripper_hits_scene(grasp_set.gripper, world[i], g.jaw_width, scene);
  });
  std::vector<std::pair<int, Pose>> out;
  for (std::size_t i = 0; i < grasp_set.size(); ++i)
    if (keep[i]) out.emplace_back(grasp_set.grasps[i].id, world[i]);
  return out;
}

inline Placement make_placement(int id, int support_facet, const Pose& pose, const GraspSet& grasp_set,
                                const Scene& scene) {
  Placement p;
  p.id = id;
  p.pose = pose;
  p.support_facet = support_facet;
  for (const auto& [gid, world] : associate_grasps(pose, grasp_set, scene)) {
    p.accessible_grasp_ids.push_back(gid);
    p.world_grasp_poses[gid] = world;
  }
  return p;
}

/// Stable placements at the canonical origin on an empty table at z = 0, with
/// table-only grasp association. This is the offline part of placement planning.
inline std::vector<Placement> plan_placements(const ConvexHull& hull, const Vec3& com, const GraspSet& grasp_set,
                                              double stability_margin = 0.002) {
  Scene empty;
  std::vector<Placement> out;
  for (const auto& sp : stable_placements(hull, com, stability_margin))
    out.push_back(make_placement(static_cast<int>(out.size()), sp.support_facet, sp.pose, grasp_set, empty));
  return out;
}

/// Re-pose a placement so that its COM projection sits at (x, y) on the table,
/// optionally rotated by `yaw` about the vertical.
inline Pose placement_at(const Pose& canonical, const Vec2& position, double table_height, double yaw = 0.0) {
  Pose shift;
  shift.rotation = rot_z(yaw);
  shift.position = Vec3(position.x(), position.y(), table_height);
  return shift * canonical;
}

// ---------------------------------------------------------------------------
// Placement-table cache

inline std::string mesh_hash(const TriMesh& mesh) {
  Fnv1a h;
  for (const auto& v : mesh.vertices) h.add(v.data(), sizeof(double) * 3);
  for (const auto& t : mesh.triangles) h.add(t.data(), sizeof(int) * 3);
  return h.hex();
}

inline Json placements_to_json(const std::string& object_hash, const std::vector<Placement>& placements) {
  Json arr = Json::array();
  for (const auto& p : placements)
    arr.push_back({{"id", p.id},
                   {"support_facet", p.support_facet},
                   {"pose", pose_to_json(p.pose)},
                   {"accessible_grasp_ids", p.accessible_grasp_ids}});
  return {{"object_hash", object_hash}, {"placements", arr}};
}

/// Reload a placement table; world grasp poses are recomputed from the grasp set.
inline std::vector<Placement> placements_from_json(const Json& j, const GraspSet& grasp_set,
                                                   const std::string& expected_hash = {}) {
  try {
    if (!expected_hash.empty() && j.at("object_hash").get<std::string>() != expected_hash)
      throw Error(ErrorCode::Schema, "placement cache belongs to a different object");
    std::vector<Placement> out;
    for (const auto& pj : j.at("placements")) {
      Placement p;
      p.id = pj.at("id").get<int>();
      p.support_facet = pj.at("support_facet").get<int>();
      p.pose = pose_from_json(pj.at("pose"));
      p.accessible_grasp_ids = pj.at("accessible_grasp_ids").get<std::vector<int>>();
      for (int gid : p.accessible_grasp_ids) {
        if (gid < 0 || gid >= static_cast<int>(grasp_set.size()))
          throw Error(ErrorCode::Schema, "placement cache references unknown grasp id " + std::to_string(gid));
        p.world_grasp_poses[gid] = p.pose * grasp_set.at(gid).pose;
      }
      out.push_back(std::move(p));
    }
    return out;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("placement cache: ") + e.what());
  }
}

}  // namespace reorient
