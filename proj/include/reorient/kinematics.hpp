#pragma once

#include <optional>
#include <random>
#include <vector>

#include "reorient/placement.hpp"

namespace reorient {

using JointVector = Eigen::VectorXd;

struct Joint {
  Vec3 axis = Vec3::UnitZ();  // in the frame after `offset`
  Pose offset;                // from the previous link frame
  double lower = -kPi;
  double upper = kPi;

  bool is_unbounded() const { return !std::isfinite(lower) || !std::isfinite(upper); }
  /// Revolute joints spanning a full turn wrap instead of clamping.
  bool is_continuous() const { return is_unbounded() || upper - lower >= 2 * kPi - 1e-9; }
};

struct LinkCapsule {
  int link = 0;  // 0 = base frame, k = frame after joint k
  Vec3 a, b;     // endpoints in the link frame
  double radius = 0;
};

struct RobotModel {
  Pose base_pose;
  std::vector<Joint> joints;
  Pose tcp_offset;
  std::vector<LinkCapsule> link_capsules;
  JointVector home;  // first IK seed; zeros when empty

  int dof() const { return static_cast<int>(joints.size()); }

  JointVector home_or_zero() const {
    return home.size() == dof() ? home : JointVector(JointVector::Zero(dof()));
  }

  void validate() const {
    if (dof() < 6) throw Error(ErrorCode::InvalidRequest, "robot needs at least 6 revolute joints");
    for (const auto& j : joints) {
      if (!(j.lower < j.upper)) throw Error(ErrorCode::InvalidRequest, "joint limits must satisfy lo < hi");
      if (std::abs(j.axis.norm() - 1.0) > 1e-9) throw Error(ErrorCode::InvalidRequest, "joint axis must be unit");
    }
    for (const auto& c : link_capsules)
      if (c.link < 0 || c.link > dof() || c.radius <= 0)
        throw Error(ErrorCode::InvalidRequest, "bad link capsule");
    if (home.size() != 0 && home.size() != dof())
      throw Error(ErrorCode::WrongDimension, "home configuration has the wrong length");
  }

  /// Upper bound on the distance from the first joint's origin to the TCP.
  double reach() const {
    double r = tcp_offset.position.norm();
    for (std::size_t i = 1; i < joints.size(); ++i) r += joints[i].offset.position.norm();
    return r;
  }

  Vec3 shoulder() const { return (base_pose * joints.front().offset).position; }

  bool within_limits(const JointVector& q, double tol = 1e-12) const {
    for (int i = 0; i < dof(); ++i)
      if (!joints[i].is_unbounded() && (q[i] < joints[i].lower - tol || q[i] > joints[i].upper + tol)) return false;
    return true;
  }
};

struct FkResult {
  Pose tcp;
  std::vector<Pose> links;  // links[0] = base, links[k] = after joint k
};

inline FkResult forward_kinematics(const RobotModel& robot, const JointVector& q) {
  if (q.size() != robot.dof())
    throw Error(ErrorCode::WrongDimension,
                "expected " + std::to_string(robot.dof()) + " joint values, got " + std::to_string(q.size()));
  FkResult out;
  out.links.reserve(robot.joints.size() + 1);
  out.links.push_back(robot.base_pose);
  for (int i = 0; i < robot.dof(); ++i) {
    const Joint& j = robot.joints[i];
    Pose rot;
    rot.rotation = axis_angle(j.axis, q[i]);
    out.links.push_back(out.links.back() * j.offset * rot);
  }
  out.tcp = out.links.back() * robot.tcp_offset;
  return out;
}

/// 6-D pose error: position difference and rotation vector taking `current` to `target`, world frame.
inline Eigen::Matrix<double, 6, 1> pose_error(const Pose& target, const Pose& current) {
  Eigen::Matrix<double, 6, 1> e;
  e.head<3>() = target.position - current.position;
  const Eigen::AngleAxisd aa(Mat3(target.rotation * current.rotation.transpose()));
  e.tail<3>() = aa.axis() * aa.angle();
  return e;
}

/// Geometric Jacobian at the TCP, world frame, rows = (linear, angular).
inline Eigen::Matrix<double, 6, Eigen::Dynamic> jacobian(const RobotModel& robot, const FkResult& fk) {
  Eigen::Matrix<double, 6, Eigen::Dynamic> jac(6, robot.dof());
  for (int i = 0; i < robot.dof(); ++i) {
    const Joint& j = robot.joints[i];
    const Pose joint_frame = fk.links[i] * j.offset;
    const Vec3 z = joint_frame.rotation * j.axis;
    jac.col(i).head<3>() = z.cross(fk.tcp.position - joint_frame.position);
    jac.col(i).tail<3>() = z;
  }
  return jac;
}

struct IkParams {
  double damping = 1e-2;
  double step_clamp = 0.2;  // rad, per joint per iteration
  int max_restarts = 20;
  int max_iterations = 200;
  double position_tolerance = 1e-4;  // m
  double rotation_tolerance = 1e-3;  // rad
  std::uint64_t seed = 0;
};

namespace detail {

inline void enforce_limits(const RobotModel& robot, JointVector& q) {
  for (int i = 0; i < robot.dof(); ++i) {
    const Joint& j = robot.joints[i];
    if (j.is_unbounded()) continue;
    if (j.is_continuous()) {
      while (q[i] > j.upper) q[i] -= 2 * kPi;
      while (q[i] < j.lower) q[i] += 2 * kPi;
    } else {
      q[i] = std::clamp(q[i], j.lower, j.upper);
    }
  }
}

inline JointVector random_configuration(const RobotModel& robot, std::mt19937_64& rng) {
  JointVector q(robot.dof());
  for (int i = 0; i < robot.dof(); ++i) {
    const Joint& j = robot.joints[i];
    const double lo = j.is_unbounded() ? -kPi : j.lower;
    const double hi = j.is_unbounded() ? kPi : j.upper;
    q[i] = std::uniform_real_distribution<double>(lo, hi)(rng);
  }
  return q;
}

}  // namespace detail

/// Damped-least-squares IK with seeded random restarts. Returns nullopt when
/// the restart budget is spent without meeting both tolerances.
inline std::optional<JointVector> solve_ik(const RobotModel& robot, const Pose& target, const JointVector& seed,
                                           const IkParams& params = {}) {
  if (seed.size() != robot.dof()) throw Error(ErrorCode::WrongDimension, "IK seed has the wrong length");
  if ((target.position - robot.shoulder()).norm() > robot.reach() + 1e-9) return std::nullopt;

  std::mt19937_64 rng(params.seed);
  const double lambda2 = params.damping * params.damping;
  for (int attempt = 0; attempt <= params.max_restarts; ++attempt) {
    JointVector q = attempt == 0 ? seed : detail::random_configuration(robot, rng);
    detail::enforce_limits(robot, q);
    double best = std::numeric_limits<double>::infinity();
    int since_best = 0;
    for (int it = 0; it < params.max_iterations; ++it) {
      const FkResult fk = forward_kinematics(robot, q);
      const auto err = pose_error(target, fk.tcp);
      const double ep = err.head<3>().norm(), er = err.tail<3>().norm();
      if (ep < 1e-2 * params.position_tolerance && er < 1e-2 * params.rotation_tolerance) break;
      const double total = ep + er;
      if (total < 0.999 * best) {
        best = total;
        since_best = 0;
      } else if (++since_best > 25) {
        break;  // stalled; try another start
      }
      const auto jac = jacobian(robot, fk);
      const Eigen::Matrix<double, 6, 6> jjt = jac * jac.transpose() + lambda2 * Eigen::Matrix<double, 6, 6>::Identity();
      JointVector dq = jac.transpose() * jjt.ldlt().solve(err);
      const double biggest = dq.cwiseAbs().maxCoeff();
      if (biggest > params.step_clamp) dq *= params.step_clamp / biggest;
      q += dq;
      detail::enforce_limits(robot, q);
    }
    const auto err = pose_error(target, forward_kinematics(robot, q).tcp);
    if (err.head<3>().norm() < params.position_tolerance && err.tail<3>().norm() < params.rotation_tolerance &&
        robot.within_limits(q))
      return q;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Motion primitives

/// Grasp key pose, pregrasp/release pose and retraction pose of one grasp.
struct PrimitiveTriple {
  Pose o, pre, ret;
  double omega = 0;
  Vec3 backward = Vec3::UnitZ();
};

inline PrimitiveTriple primitive_poses(const Pose& grasp_world_pose, double omega, const Vec3& backward) {
  PrimitiveTriple t;
  t.o = grasp_world_pose;
  t.omega = omega;
  t.backward = backward;
  t.pre = {grasp_world_pose.position + omega * grasp_world_pose.rotation.col(0), grasp_world_pose.rotation};
  t.ret = {grasp_world_pose.position + omega * backward, grasp_world_pose.rotation};
  return t;
}

// ---------------------------------------------------------------------------
// Robot-vs-scene

inline std::vector<Capsule> world_capsules(const RobotModel& robot, const FkResult& fk) {
  std::vector<Capsule> out;
  for (const auto& c : robot.link_capsules) {
    const Pose& frame = fk.links[c.link];
    out.push_back({frame.apply(c.a), frame.apply(c.b), c.radius});
  }
  return out;
}

inline bool robot_hits_scene(const RobotModel& robot, const JointVector& q, const Scene& scene) {
  const FkResult fk = forward_kinematics(robot, q);
  for (const auto& cap : world_capsules(robot, fk)) {
    if (capsule_below_plane(cap, scene.table_height)) return true;
    for (const auto& obstacle : scene.obstacles)
      if (capsule_mesh_intersect(cap, obstacle.world)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Filtering placements down to robot-feasible grasps

/// How far the filtering chain runs; each level includes the previous ones.
enum class FilterDepth {
  Collision = 0,   // gripper vs table and obstacles at the placement
  GraspIk = 1,     // + IK and robot-vs-scene at the grasp key pose
  Primitives = 2,  // + IK and robot-vs-scene at the pregrasp and retraction poses
};

struct FilterParams {
  double omega = 0.05;
  Vec3 backward = Vec3::UnitZ();
  FilterDepth depth = FilterDepth::Primitives;
  IkParams ik;
};

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = seed ^ (a * 0x9E3779B97F4A7C15ull) ^ (b * 0xC2B2AE3D27D4EB4Full);
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdull;
  x ^= x >> 33;
  return x;
}

}  // namespace detail

/// Reduce `placement` (already posed in the world) to the grasps that are
/// collision-free and, depending on `params.depth`, IK-feasible at the grasp,
/// pregrasp and retraction poses with the robot clear of the scene. IK
/// restarts are seeded per grasp so the result does not depend on evaluation
/// order or depth.
inline Placement filter_placement(const Placement& placement, const GraspSet& grasp_set, const RobotModel& robot,
                                  const Scene& scene, const FilterParams& params) {
  Placement out = placement;
  out.accessible_grasp_ids.clear();
  out.world_grasp_poses.clear();
  out.ik_solutions.clear();

  const auto candidates = associate_grasps(placement.pose, grasp_set, scene);
  std::vector<std::optional<PrimitiveJoints>> solved(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    const auto& [gid, world] = candidates[i];
    PrimitiveJoints joints;
    if (params.depth >= FilterDepth::GraspIk) {
      IkParams ik = params.ik;
      ik.seed = detail::mix_seed(params.ik.seed, static_cast<std::uint64_t>(gid), 0);
      auto q = solve_ik(robot, world, robot.home_or_zero(), ik);
      if (!q || robot_hits_scene(robot, *q, scene)) return;
      joints.o = *q;
    }
    if (params.depth >= FilterDepth::Primitives) {
      const PrimitiveTriple triple = primitive_poses(world, params.omega, params.backward);
      IkParams ik = params.ik;
      ik.seed = detail::mix_seed(params.ik.seed, static_cast<std::uint64_t>(gid), 1);
      auto pre = solve_ik(robot, triple.pre, joints.o, ik);
      if (!pre || robot_hits_scene(robot, *pre, scene)) return;
      ik.seed = detail::mix_seed(params.ik.seed, static_cast<std::uint64_t>(gid), 2);
      auto ret = solve_ik(robot, triple.ret, joints.o, ik);
      if (!ret || robot_hits_scene(robot, *ret, scene)) return;
      joints.pre = *pre;
      joints.ret = *ret;
    }
    solved[i] = joints;
  });
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!solved[i]) continue;
    const int gid = candidates[i].first;
    out.accessible_grasp_ids.push_back(gid);
    out.world_grasp_poses[gid] = candidates[i].second;
    if (params.depth >= FilterDepth::GraspIk) out.ik_solutions[gid] = *solved[i];
  }
  return out;
}

/// Move each canonical placement to `position` on the table and filter its
/// grasps for the robot. Placements left without grasps stay in the list.
inline std::vector<Placement> filter_robot_feasible(const std::vector<Placement>& placements, const Vec2& position,
                                                    const GraspSet& grasp_set, const RobotModel& robot,
                                                    const Scene& scene, const FilterParams& params) {
  if (!scene.table_extent.contains(position))
    throw Error(ErrorCode::InvalidRequest, "filter position lies outside the table");
  std::vector<Placement> out;
  for (const auto& p : placements) {
    Placement moved = p;
    moved.pose = placement_at(p.pose, position, scene.table_height);
    out.push_back(filter_placement(moved, grasp_set, robot, scene, params));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Robot description

/// Six-joint anthropomorphic arm, 0.85 m from shoulder to TCP when stretched,
/// base at the world origin. The TCP frame follows the gripper convention:
/// column 0 points back toward the flange.
inline RobotModel default_arm() {
  RobotModel r;
  auto joint = [](const Vec3& offset, const Vec3& axis) {
    Joint j;
    j.offset = Pose::from_translation(offset);
    j.axis = axis;
    return j;
  };
  r.joints = {joint({0, 0, 0.10}, Vec3::UnitZ()), joint({0, 0, 0}, Vec3::UnitY()),
              joint({0, 0, 0.32}, Vec3::UnitY()), joint({0, 0, 0.28}, Vec3::UnitY()),
              joint({0, 0, 0.08}, Vec3::UnitZ()), joint({0, 0, 0.08}, Vec3::UnitY())};
  r.tcp_offset.position = Vec3(0, 0, 0.09);
  r.tcp_offset.rotation.col(0) = -Vec3::UnitZ();
  r.tcp_offset.rotation.col(1) = Vec3::UnitX();
  r.tcp_offset.rotation.col(2) = -Vec3::UnitY();
  r.link_capsules = {{1, {0, 0, 0}, {0, 0, 0}, 0.06},
                     {2, {0, 0, 0}, {0, 0, 0.32}, 0.045},
                     {3, {0, 0, 0}, {0, 0, 0.28}, 0.04},
                     {4, {0, 0, 0}, {0, 0, 0.08}, 0.03},
                     {5, {0, 0, 0}, {0, 0, 0.08}, 0.03}};
  r.home = JointVector(6);
  r.home << 0.0, 0.4, 1.6, 1.1, 0.0, 0.0;
  return r;
}

inline Json robot_to_json(const RobotModel& r) {
  Json joints = Json::array();
  for (const auto& j : r.joints)
    joints.push_back({{"axis", vec_to_json(j.axis)}, {"offset_pose", pose_to_json(j.offset)},
                      {"limits", {j.lower, j.upper}}});
  Json caps = Json::array();
  for (const auto& c : r.link_capsules)
    caps.push_back({{"link", c.link}, {"a", vec_to_json(c.a)}, {"b", vec_to_json(c.b)}, {"radius", c.radius}});
  Json j = {{"base_pose", pose_to_json(r.base_pose)},
            {"joints", joints},
            {"tcp_offset", pose_to_json(r.tcp_offset)},
            {"link_capsules", caps}};
  if (r.home.size()) j["home"] = std::vector<double>(r.home.data(), r.home.data() + r.home.size());
  return j;
}

inline RobotModel robot_from_json(const Json& j) {
  try {
    RobotModel r;
    r.base_pose = pose_from_json(j.at("base_pose"));
    for (const auto& jj : j.at("joints")) {
      Joint joint;
      joint.axis = vec_from_json(jj.at("axis"));
      joint.offset = pose_from_json(jj.at("offset_pose"));
      const auto limits = jj.at("limits");
      joint.lower = limits.at(0).is_null() ? -std::numeric_limits<double>::infinity() : limits.at(0).get<double>();
      joint.upper = limits.at(1).is_null() ? std::numeric_limits<double>::infinity() : limits.at(1).get<double>();
      r.joints.push_back(joint);
    }
    r.tcp_offset = pose_from_json(j.at("tcp_offset"));
    if (j.contains("link_capsules"))
      for (const auto& cj : j.at("link_capsules"))
        r.link_capsules.push_back({cj.at("link").get<int>(), vec_from_json(cj.at("a")), vec_from_json(cj.at("b")),
                                   cj.at("radius").get<double>()});
    if (j.contains("home")) {
      const auto h = j.at("home").get<std::vector<double>>();
      r.home = Eigen::Map<const JointVector>(h.data(), static_cast<Eigen::Index>(h.size()));
    }
    r.validate();
    return r;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Schema, std::string("robot config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Schema) throw;
    throw Error(ErrorCode::Schema, std::string("robot config: ") + e.what());
  }
}

}  // namespace reorient
