#pragma once

#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "reorient/task.hpp"

namespace fixtures {

using namespace reorient;

inline std::filesystem::path data_dir() { return REORIENT_DATA_DIR; }

inline TriMesh cube(double edge = 0.05) { return make_centered_box(Vec3::Constant(edge)); }

/// 5 cm cube rolled 90 degrees about x between two table spots.
inline PlanRequest cube_roll(double density = 400) {
  PlanRequest req;
  req.mesh = cube();
  req.params.density = density;
  req.start_pose = Pose::from_translation({0.45, -0.1, 0.025});
  req.goal_pose = {Vec3(0.45, 0.1, 0.025), rot_x(kPi / 2)};
  req.scene.candidate_regrasp_positions = {{0.40, 0.0}, {0.50, -0.2}};
  return req;
}

/// Same cube turned about the vertical only; start and goal share grasps.
inline PlanRequest cube_yaw() {
  PlanRequest req = cube_roll();
  req.goal_pose = {Vec3(0.40, 0.15, 0.025), rot_z(kPi / 2)};
  return req;
}

/// L-shaped block stood on its side.
inline PlanRequest l_block_roll() {
  PlanRequest req;
  req.mesh = make_l_block(0.06, 0.03, 0.03);
  req.start_pose = Pose::from_translation({0.40, -0.15, 0.0});
  req.goal_pose = {Vec3(0.40, 0.1, 0.0), rot_x(kPi / 2)};
  req.scene.candidate_regrasp_positions = {{0.40, 0.0}, {0.50, -0.2}};
  return req;
}

/// Drop from the start node every grasp it shares with the goal, so the
/// object cannot go there in one pick-and-place.
inline std::vector<int> remove_start_goal_shared(PlanContext& ctx) {
  auto& start = ctx.start.placement;
  std::vector<int> shared = shared_grasps(start, ctx.goal.placement);
  std::vector<int> keep;
  std::set_difference(start.accessible_grasp_ids.begin(), start.accessible_grasp_ids.end(), shared.begin(),
                      shared.end(), std::back_inserter(keep));
  start.accessible_grasp_ids = keep;
  for (int id : shared) {
    start.world_grasp_poses.erase(id);
    start.ik_solutions.erase(id);
  }
  return shared;
}

inline oracle::SequenceInput sequence_input(const PlanRequest& req, const PlanResult& r, const GraspSet& grasps) {
  return {&r.keyframes,        &grasps,        &req.robot,     &req.scene,   &req.mesh, req.params.omega,
          req.goal_backward, req.params.stability_margin, req.start_pose, req.goal_pose};
}

/// Random points on an ellipsoid, the vertex cloud of a random convex body.
inline std::vector<Vec3> random_convex_points(std::mt19937_64& rng, int n, double scale = 0.05) {
  std::normal_distribution<double> g(0, 1);
  std::uniform_real_distribution<double> u(0.6, 1.4);
  const Vec3 axes(u(rng), u(rng), u(rng));
  std::vector<Vec3> pts;
  for (int i = 0; i < n; ++i) {
    Vec3 p(g(rng), g(rng), g(rng));
    pts.push_back(scale * axes.cwiseProduct(p.normalized()));
  }
  return pts;
}

inline Pose random_pose(std::mt19937_64& rng, double spread = 1.0) {
  std::normal_distribution<double> g(0, 1);
  const Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  return {spread * Vec3(g(rng), g(rng), g(rng)), q.normalized().toRotationMatrix()};
}


struct ContactCase {
  Vec3 a, b, na, nb;
  double mu;
};

/// Random two-contact cases over mu in {0.1, 0.3, 0.5, 1.0}. Cases whose
/// contact line lies within `band` of either cone boundary are skipped, since
/// a polyhedral cone cannot decide them.
inline std::vector<ContactCase> force_closure_cases(std::uint64_t seed, int count, double band = 0.5 * kPi / 180) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  const double mus[] = {0.1, 0.3, 0.5, 1.0};
  auto tilt = [&](const Vec3& d, double angle) {
    const auto [e1, e2] = oracle::plane_basis(d);
    const double phi = 2 * kPi * u(rng);
    const Vec3 axis = std::cos(phi) * e1 + std::sin(phi) * e2;
    return Vec3(axis_angle(axis, angle) * d);
  };
  std::vector<ContactCase> out;
  while (static_cast<int>(out.size()) < count) {
    const double mu = mus[out.size() % 4];
    const double cone = std::atan(mu);
    const Vec3 d = random_pose(rng).rotation.col(0);
    const Vec3 a = 0.05 * random_pose(rng).position;
    const Vec3 b = a + (0.01 + 0.07 * u(rng)) * d;
    const double ta = 2.2 * cone * u(rng), tb = 2.2 * cone * u(rng);
    if (std::abs(ta - cone) < band || std::abs(tb - cone) < band) continue;
    Vec3 nb = tilt(-d, tb);
    if (u(rng) < 0.1) nb = -nb;  // same-side normals
    out.push_back({a, b, tilt(d, ta), nb, mu});
  }
  return out;
}

}  // namespace fixtures
