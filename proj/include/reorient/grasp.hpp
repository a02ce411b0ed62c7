#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "reorient/collision.hpp"
#include "reorient/json_io.hpp"
#include "reorient/parallel.hpp"

namespace reorient {

/// Parallel-jaw gripper approximated by two finger boxes and a palm box.
///
/// Gripper frame conventions (the grasp rotation's columns):
///   column 0: approach axis. Points from the fingertips back toward the palm,
///             so the hand closes in on an object moving along its negative.
///   column 1: jaw axis. The fingers open and close along it.
///   column 2: column 0 x column 1.
/// The frame origin (TCP) sits midway between the two finger pads.
struct GripperModel {
  double max_jaw_width = 0.085;
  Vec3 finger_box{0.045, 0.010, 0.022};  // along approach, jaw, normal
  Vec3 palm_box{0.050, 0.130, 0.060};
  double fingertip_depth = 0.005;        // fingertips extend this far past the TCP

  bool is_valid() const {
    return max_jaw_width > 0 && (finger_box.array() > 0).all() && (palm_box.array() > 0).all() &&
           fingertip_depth >= 0 && fingertip_depth < finger_box.x();
  }

  /// Distance from the TCP back to the flange (rear face of the palm).
  double tcp_to_flange() const { return finger_box.x() - fingertip_depth + palm_box.x(); }

  /// Finger A (negative jaw side), finger B, palm, at `pose` with the given opening.
  std::array<OrientedBox, 3> boxes(const Pose& pose, double jaw_width) const {
    const double fx = finger_box.x() / 2 - fingertip_depth;
    const double fy = jaw_width / 2 + finger_box.y() / 2;
    const OrientedBox a{Pose::from_translation({fx, -fy, 0}), finger_box / 2};
    const OrientedBox b{Pose::from_translation({fx, fy, 0}), finger_box / 2};
    const OrientedBox palm{
        Pose::from_translation({finger_box.x() - fingertip_depth + palm_box.x() / 2, 0, 0}), palm_box / 2};
    return {a.transformed(pose), b.transformed(pose), palm.transformed(pose)};
  }
};

struct Grasp {
  int id = 0;
  Pose pose;           // object-local
  double jaw_width = 0;
  Vec3 contact_a, contact_b;
  Vec3 normal_a, normal_b;  // inward surface normals at the contacts

  Vec3 approach() const { return pose.rotation.col(0); }
  Vec3 jaw_axis() const { return pose.rotation.col(1); }
};

struct GraspSet {
  std::vector<Grasp> grasps;  // grasps[i].id == i
  GripperModel gripper;
  double friction_mu = 0.5;

  const Grasp& at(int id) const { return grasps.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return grasps.size(); }
  bool empty() const { return grasps.empty(); }
};

struct ContactPair {
  Vec3 point_a, point_b;
  Vec3 normal_a, normal_b;  // inward
  int triangle_a = 0, triangle_b = 0;
};

struct GraspParams {
  double mu = 0.5;
  double density = 400.0;           // samples per m^2 of surface
  int n_approach = 8;
  double parallel_tolerance = 5.0 * kPi / 180.0;
  std::uint64_t seed = 0;
};

/// Group mesh triangles by supporting plane. Returns triangle index lists in
/// order of first appearance.
inline std::vector<std::vector<int>> coplanar_groups(const TriMesh& mesh, double angle_tol = 1e-6,
                                                     double offset_tol = 1e-9) {
  std::vector<std::vector<int>> groups;
  std::vector<Vec3> normals;
  std::vector<double> offsets;
  const double cos_tol = std::cos(angle_tol);
  for (std::size_t i = 0; i < mesh.triangles.size(); ++i) {
    const Triangle t = mesh.triangle(i);
    const Vec3 n = t.normal();
    const double d = n.dot(t.a);
    bool placed = false;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (normals[g].dot(n) >= cos_tol && std::abs(offsets[g] - d) <= offset_tol) {
        groups[g].push_back(static_cast<int>(i));
        placed = true;
        break;
      }
    }
    if (!placed) {
      groups.push_back({static_cast<int>(i)});
      normals.push_back(n);
      offsets.push_back(d);
    }
  }
  return groups;
}

/// Stratified random surface samples on each planar facet, each paired with
/// the point where the inward normal ray leaves the object. Only pairs whose
/// second facet is anti-parallel within tolerance and whose separation fits
/// the open jaw are returned.
inline std::vector<ContactPair> sample_facet_pairs(const TriMesh& mesh, const GripperModel& gripper,
                                                   const GraspParams& params) {
  std::vector<ContactPair> pairs;
  if (params.density <= 0) return pairs;
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double cos_tol = std::cos(params.parallel_tolerance);

  for (const auto& group : coplanar_groups(mesh)) {
    double area = 0;
    std::vector<double> areas;
    for (int ti : group) {
      areas.push_back(mesh.triangle(ti).area());
      area += areas.back();
    }
    const auto total = static_cast<int>(std::ceil(area * params.density - 1e-9));
    if (total <= 0 || area <= 0) continue;

    // Largest-remainder split of the facet's samples over its triangles.
    std::vector<int> counts(group.size());
    // Remainders are quantized so equal-area triangles tie exactly and the
    // lower index wins regardless of rounding in the areas.
    std::vector<std::pair<long long, std::size_t>> remainders;
    int assigned = 0;
    for (std::size_t k = 0; k < group.size(); ++k) {
      const double exact = total * areas[k] / area;
      counts[k] = static_cast<int>(std::floor(exact + 1e-9));
      assigned += counts[k];
      remainders.emplace_back(-std::llround((exact - counts[k]) * 1e9), k);
    }
    std::sort(remainders.begin(), remainders.end());
    for (int r = 0; r < total - assigned; ++r) ++counts[remainders[r].second];

    for (std::size_t k = 0; k < group.size(); ++k) {
      const Triangle tri = mesh.triangle(group[k]);
      const Vec3 outward = tri.normal();
      for (int s = 0; s < counts[k]; ++s) {
        const double u1 = (s + unit(rng)) / counts[k];
        const double u2 = unit(rng);
        const double su = std::sqrt(u1);
        const Vec3 p = (1 - su) * tri.a + su * (1 - u2) * tri.b + su * u2 * tri.c;
        const auto hit = raycast(mesh, p, -outward, 1e-9);
        if (!hit) continue;
        const Vec3 hit_outward = mesh.triangle(hit->triangle).normal();
        if (hit_outward.dot(-outward) < cos_tol) continue;
        const double width = (hit->point - p).norm();
        if (width <= 0 || width > gripper.max_jaw_width) continue;
        pairs.push_back({p, hit->point, -outward, -hit_outward, group[k], static_cast<int>(hit->triangle)});
      }
    }
  }
  return pairs;
}

/// Two-contact force closure: the contact line must lie inside both friction
/// cones, i.e. within atan(mu) of each inward normal.
inline bool check_force_closure(const Vec3& contact_a, const Vec3& contact_b, const Vec3& normal_a,
                                const Vec3& normal_b, double mu) {
  const Vec3 line = contact_b - contact_a;
  const double len = line.norm();
  if (len < 1e-12 || mu < 0) return false;
  const Vec3 d = line / len;
  const double cos_cone = 1.0 / std::sqrt(1.0 + mu * mu);
  return d.dot(normal_a) >= cos_cone && (-d).dot(normal_b) >= cos_cone;
}

inline bool gripper_hits_mesh(const GripperModel& gripper, const Pose& pose, double jaw_width,
                              const TriMesh& mesh) {
  for (const auto& box : gripper.boxes(pose, jaw_width))
    if (box_mesh_intersect(box, mesh)) return true;
  return false;
}

/// Gripper poses for one contact pair: TCP at the contact midpoint, jaw axis
/// along the contact line, approach axis swept about the jaw axis. The sweep
/// reference is an edge of the first contact's triangle so the result is
/// equivariant under rigid motions of the mesh.
inline std::vector<Pose> grasp_poses_for_pair(const TriMesh& mesh, const ContactPair& pair, int n_approach) {
  const Vec3 jaw = (pair.point_b - pair.point_a).normalized();
  const Triangle tri = mesh.triangle(pair.triangle_a);
  Vec3 ref = (tri.b - tri.a) - (tri.b - tri.a).dot(jaw) * jaw;
  if (ref.norm() < 1e-9) ref = (tri.c - tri.a) - (tri.c - tri.a).dot(jaw) * jaw;
  ref.normalize();
  const Vec3 mid = 0.5 * (pair.point_a + pair.point_b);
  std::vector<Pose> poses;
  for (int k = 0; k < n_approach; ++k) {
    const Vec3 approach = axis_angle(jaw, 2 * kPi * k / n_approach) * ref;
    Pose pose;
    pose.position = mid;
    pose.rotation.col(0) = approach.normalized();
    pose.rotation.col(1) = jaw;
    pose.rotation.col(2) = pose.rotation.col(0).cross(jaw).normalized();
    pose.rotation.col(0) = jaw.cross(pose.rotation.col(2));
    poses.push_back(pose);
  }
  return poses;
}

/// Force-closure, object-collision-free grasps in the object's local frame.
inline GraspSet plan_grasps(const TriMesh& mesh, const GripperModel& gripper, const GraspParams& params) {
  if (!mesh.is_watertight()) throw Error(ErrorCode::NonWatertight, "grasp planning needs a closed mesh");
  if (!gripper.is_valid()) throw Error(ErrorCode::InvalidRequest, "gripper model has non-positive dimensions");
  GraspSet set;
  set.gripper = gripper;
  set.friction_mu = params.mu;
  const auto pairs = sample_facet_pairs(mesh, gripper, params);

  std::vector<std::vector<Grasp>> per_pair(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t i) {
    const ContactPair& pair = pairs[i];
    if (!check_force_closure(pair.point_a, pair.point_b, pair.normal_a, pair.normal_b, params.mu)) return;
    const double width = (pair.point_b - pair.point_a).norm();
    for (const Pose& pose : grasp_poses_for_pair(mesh, pair, params.n_approach)) {
      if (gripper_hits_mesh(gripper, pose, width, mesh)) continue;
      per_pair[i].push_back({0, pose, width, pair.point_a, pair.point_b, pair.normal_a, pair.normal_b});
    }
  });
  for (auto& list : per_pair)
    for (auto& g : list) {
      g.id = static_cast<int>(set.grasps.size());
      set.grasps.push_back(g);
    }
  return set;
}

// ---------------------------------------------------------------------------
// JSON cache format

inline Json gripper_to_json(const GripperModel& g) {
  return {{"max_jaw_width", g.max_jaw_width},
          {"finger_box", vec_to_json(g.finger_box)},
          {"palm_box", vec_to_json(g.palm_box)},
          {"fingertip_depth", g.fingertip_depth}};
}

inline GripperModel gripper_from_json(const Json& j) {
  GripperModel g;
  if (j.contains("max_jaw_width")) g.max_jaw_width = j.at("max_jaw_width").get<double>();
  if (j.contains("finger_box")) g.finger_box = vec_from_json(j.at("finger_box"));
  if (j.contains("palm_box")) g.palm_box = vec_from_json(j.at("palm_box"));
  if (j.contains("fingertip_depth")) g.fingertip_depth = j.at("fingertip_depth").get<double>();
  if (!g.is_valid()) throw Error(ErrorCode::Schema, "invalid gripper model: " + j.dump());
  return g;
}

inline Json grasp_set_to_json(const GraspSet& set) {
  Json grasps = Json::array();
  for (const auto& g : set.grasps) {
    Json pose = pose_to_json(g.pose);
    grasps.push_back({{"id", g.id},
                      {"p", pose["p"]},
                      {"R", pose["R"]},
                      {"jaw_width", g.jaw_width},
                      {"contacts", {vec_to_json(g.contact_a), vec_to_json(g.contact_b)}},
                      {"normals", {vec_to_json(g.normal_a), vec_to_json(g.normal_b)}}});
  }
  return {{"gripper", gripper_to_json(set.gripper)}, {"mu", set.friction_mu}, {"grasps", grasps}};
}

inline GraspSet grasp_set_from_json(const Json& j) {
  try {
    GraspSet set;
    set.gripper = gripper_from_json(j.at("gripper"));
    set.friction_mu = j.at("mu").get<double>();
    for (const auto& gj : j.at("grasps")) {
      Grasp g;
      g.id = gj.at("id").get<int>();
      if (g.id != static_cast<int>(set.grasps.size()))
        throw Error(ErrorCode::Schema, "grasp ids must be dense and ordered");
      g.pose = pose_from_json({{"p", gj.at("p")}, {"R", gj.at("R")}});
      g.jaw_width = gj.at("jaw_width").get<double>();
      g.contact_a = vec_from_json(gj.at("contacts").at(0));
      g.contact_b = vec_from_json(gj.at("contacts").at(1));
      g.normal_a = vec_from_json(gj.at("normals").at(0));
      g.normal_b = vec_from_json(gj.at("normals").at(1));
      set.grasps.push_back(g);
    }
    return set;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("grasp set: ") + e.what());
  }
}

}  // namespace reorient
