#pragma once

#include <chrono>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "reorient/kinematics.hpp"

namespace reorient {

enum class NodeKind { Start, Goal, Intermediate };

inline const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Start: return "start";
    case NodeKind::Goal: return "goal";
    case NodeKind::Intermediate: return "intermediate";
  }
  return "?";
}

struct GraphNode {
  NodeKind kind = NodeKind::Intermediate;
  Placement placement;
  Vec3 backward = Vec3::UnitZ();  // retraction direction used at this node
};

using NodePair = std::pair<int, int>;  // canonical: first < second

/// Two-layer regrasp graph. Layer 1 says which placements are connected,
/// layer 2 lists every grasp they share. Node 0 is the start, node 1 the goal.
struct RegraspGraph {
  std::vector<GraphNode> nodes;
  std::set<NodePair> layer1_edges;
  std::map<NodePair, std::vector<int>> layer2_edges;  // ascending grasp ids

  static constexpr int kStart = 0;
  static constexpr int kGoal = 1;

  static NodePair key(int i, int j) { return i < j ? NodePair{i, j} : NodePair{j, i}; }

  std::size_t layer2_edge_count() const {
    std::size_t n = 0;
    for (const auto& [k, ids] : layer2_edges) n += ids.size();
    return n;
  }

  const std::vector<int>& shared(int i, int j) const { return layer2_edges.at(key(i, j)); }

  std::vector<int> neighbors(int i) const {
    std::vector<int> out;
    for (const auto& [a, b] : layer1_edges) {
      if (a == i) out.push_back(b);
      else if (b == i) out.push_back(a);
    }
    std::sort(out.begin(), out.end());
    return out;
  }
};

inline std::vector<int> shared_grasps(const Placement& a, const Placement& b) {
  std::vector<int> out;
  std::set_intersection(a.accessible_grasp_ids.begin(), a.accessible_grasp_ids.end(),
                        b.accessible_grasp_ids.begin(), b.accessible_grasp_ids.end(), std::back_inserter(out));
  return out;
}

/// Connect every pair of nodes that share a grasp id. All grasp sets descend
/// from one GraspSet, so equal ids mean identical object-local grasps.
inline RegraspGraph build_graph(const std::vector<GraphNode>& intermediates, const GraphNode& start,
                                const GraphNode& goal) {
  RegraspGraph g;
  g.nodes.push_back(start);
  g.nodes.push_back(goal);
  g.nodes.insert(g.nodes.end(), intermediates.begin(), intermediates.end());
  g.nodes[0].kind = NodeKind::Start;
  g.nodes[1].kind = NodeKind::Goal;
  const int n = static_cast<int>(g.nodes.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      auto ids = shared_grasps(g.nodes[i].placement, g.nodes[j].placement);
      if (ids.empty()) continue;
      g.layer1_edges.insert({i, j});
      g.layer2_edges[{i, j}] = std::move(ids);
    }
  }
  return g;
}

/// Dijkstra over layer 1 with unit edge weights. Among equally short
/// predecessors the smallest node id wins, so the path is deterministic.
inline std::vector<int> search(const RegraspGraph& graph, int from = RegraspGraph::kStart,
                               int to = RegraspGraph::kGoal) {
  const int n = static_cast<int>(graph.nodes.size());
  std::vector<std::vector<int>> adj(n);
  for (const auto& [a, b] : graph.layer1_edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  const int inf = std::numeric_limits<int>::max();
  std::vector<int> dist(n, inf), pred(n, -1);
  using Item = std::pair<int, int>;  // (distance, node)
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  dist[from] = 0;
  open.push({0, from});
  std::vector<char> done(n, 0);
  while (!open.empty()) {
    const auto [d, u] = open.top();
    open.pop();
    if (done[u]) continue;
    done[u] = 1;
    for (int v : adj[u]) {
      const int nd = d + 1;
      if (nd < dist[v] || (nd == dist[v] && u < pred[v])) {
        if (nd < dist[v]) open.push({nd, v});
        dist[v] = nd;
        pred[v] = u;
      }
    }
  }
  if (dist[to] == inf)
    throw Error(ErrorCode::GraphDisconnected, "no sequence of shared grasps links the start to the goal");
  std::vector<int> path;
  for (int v = to; v != -1; v = pred[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

/// Smallest shared grasp id of a layer-1 edge.
inline int pick_shared_grasp(int node_i, int node_j, const RegraspGraph& graph) {
  const auto it = graph.layer2_edges.find(RegraspGraph::key(node_i, node_j));
  if (it == graph.layer2_edges.end() || it->second.empty())
    throw Error(ErrorCode::InvalidRequest, "nodes are not connected in layer 1");
  return *std::min_element(it->second.begin(), it->second.end());
}

// ---------------------------------------------------------------------------
// Keyframes

enum class FrameLabel { Pregrasp, Grasp, Retract, PlaceRetract, Place, Release };

inline const char* to_string(FrameLabel l) {
  switch (l) {
    case FrameLabel::Pregrasp: return "pregrasp";
    case FrameLabel::Grasp: return "grasp";
    case FrameLabel::Retract: return "retract";
    case FrameLabel::PlaceRetract: return "place_retract";
    case FrameLabel::Place: return "place";
    case FrameLabel::Release: return "release";
  }
  return "?";
}

struct KeyFrame {
  FrameLabel label = FrameLabel::Pregrasp;
  Pose tcp_pose;
  JointVector joints;
  bool jaw_closed = false;
  double jaw_width = 0;
  Pose object_pose;
  std::optional<int> grasp_id;
  int node = -1;  // graph node the frame belongs to
};

/// Expand a layer-1 path into pick-and-place keyframes. Each adjacent node
/// pair (pick, place) with shared grasp g becomes
///   pregrasp, grasp, retract at the pick node, then
///   place_retract, place, release at the place node.
/// The pick node's backward (up) and the place node's backward define the
/// retraction poses; the last place uses the goal node's backward.
inline std::vector<KeyFrame> expand_sequence(const std::vector<int>& path, const RegraspGraph& graph,
                                             const GraspSet& grasp_set, const RobotModel& robot, double omega,
                                             const IkParams& ik = {}) {
  std::vector<KeyFrame> frames;
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    const int gid = pick_shared_grasp(path[k], path[k + 1], graph);
    const Grasp& grasp = grasp_set.at(gid);
    const Pose grasp_inv = grasp.pose.inverse();

    auto node_frames = [&](int node_id, bool picking) {
      const GraphNode& node = graph.nodes[node_id];
      const Pose world = node.placement.pose * grasp.pose;
      const PrimitiveTriple t = primitive_poses(world, omega, node.backward);
      PrimitiveJoints joints;
      if (auto it = node.placement.ik_solutions.find(gid); it != node.placement.ik_solutions.end()) {
        joints = it->second;
      } else {
        auto qo = solve_ik(robot, t.o, robot.home_or_zero(), ik);
        if (!qo) throw Error(ErrorCode::IKFailure, "no IK solution at grasp " + std::to_string(gid));
        auto qp = solve_ik(robot, t.pre, *qo, ik);
        auto qr = solve_ik(robot, t.ret, *qo, ik);
        if (!qp || !qr) throw Error(ErrorCode::IKFailure, "no IK solution at a primitive of grasp " + std::to_string(gid));
        joints = {*qo, *qp, *qr};
      }
      auto frame = [&](FrameLabel label, const Pose& tcp, const JointVector& q, bool closed, const Pose& object) {
        KeyFrame f;
        f.label = label;
        f.tcp_pose = tcp;
        f.joints = q;
        f.jaw_closed = closed;
        f.jaw_width = closed ? grasp.jaw_width : grasp_set.gripper.max_jaw_width;
        f.object_pose = object;
        f.grasp_id = gid;
        f.node = node_id;
        return f;
      };
      const Pose& resting = node.placement.pose;
      if (picking) {
        frames.push_back(frame(FrameLabel::Pregrasp, t.pre, joints.pre, false, resting));
        frames.push_back(frame(FrameLabel::Grasp, t.o, joints.o, true, resting));
        frames.push_back(frame(FrameLabel::Retract, t.ret, joints.ret, true, t.ret * grasp_inv));
      } else {
        frames.push_back(frame(FrameLabel::PlaceRetract, t.ret, joints.ret, true, t.ret * grasp_inv));
        frames.push_back(frame(FrameLabel::Place, t.o, joints.o, true, resting));
        frames.push_back(frame(FrameLabel::Release, t.pre, joints.pre, false, resting));
      }
    };
    node_frames(path[k], true);
    node_frames(path[k + 1], false);
  }
  return frames;
}

// ---------------------------------------------------------------------------
// Full pipeline

struct PlanParams {
  double mu = 0.5;
  double omega = 0.05;
  double density = 400.0;
  double stability_margin = 0.002;
  int n_approach = 8;
  std::uint64_t seed = 0;
};

struct PlanRequest {
  TriMesh mesh;
  Pose start_pose;
  Pose goal_pose;
  Vec3 goal_backward = Vec3::UnitZ();
  Scene scene;
  RobotModel robot = default_arm();
  GripperModel gripper;
  PlanParams params;
  // Offline results reused when present (grasp set and canonical placements).
  std::optional<GraspSet> cached_grasps;
  std::optional<std::vector<Placement>> cached_placements;
};

struct PhaseTimes {
  double grasps = 0, placements = 0, ik_cd_init = 0, ik_cd_regrasp = 0, ik_cd_goal = 0, graph_search = 0;
};

struct Diagnostics {
  PhaseTimes times;
  std::size_t nodes = 0, l1_edges = 0, l2_edges = 0;
  int regrasp_count = 0;
  std::size_t grasp_count = 0;
  std::size_t start_accessible = 0, goal_accessible = 0;
  std::string message;
};

/// Everything computed before the graph is built. Exposed so callers can
/// inspect or edit node grasp sets before searching.
struct PlanContext {
  GraspSet grasps;
  ConvexHull hull;
  Vec3 com = Vec3::Zero();
  std::vector<Placement> canonical;
  GraphNode start, goal;
  std::vector<GraphNode> intermediates;
  Diagnostics diagnostics;
  double omega = 0.05;
  IkParams ik;
};

struct PlanResult {
  std::vector<KeyFrame> keyframes;
  std::vector<int> path;
  std::vector<int> grasp_ids;  // one per pick-and-place
  RegraspGraph graph;
  Diagnostics diagnostics;
};

namespace detail {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

}  // namespace detail

inline bool poses_match(const Pose& a, const Pose& b, double pos_tol = 1e-6, double rot_tol = 1e-4) {
  return (a.position - b.position).norm() <= pos_tol && rotation_distance(a.rotation, b.rotation) <= rot_tol;
}

/// Identify the stable placement a world pose rests on. Throws InvalidRequest
/// if the pose is not a stable placement on the table.
inline int validate_resting_pose(const PlanContext& ctx, const Pose& pose, double table_height, const char* what) {
  const auto facet = resting_facet(ctx.hull, pose, table_height);
  if (!facet) throw Error(ErrorCode::InvalidRequest, std::string(what) + " pose does not rest a hull facet on the table");
  for (const auto& p : ctx.canonical)
    if (p.support_facet == *facet) return *facet;
  throw Error(ErrorCode::InvalidRequest, std::string(what) + " pose rests on a facet that is not stable");
}

inline PlanContext prepare(const PlanRequest& req) {
  req.scene.validate();
  req.robot.validate();
  if (std::abs(req.goal_backward.norm() - 1.0) > 1e-9)
    throw Error(ErrorCode::InvalidRequest, "goal backward direction must be a unit vector");
  PlanContext ctx;
  ctx.omega = req.params.omega;
  ctx.ik.seed = req.params.seed;
  detail::Stopwatch clock;

  if (req.cached_grasps) {
    ctx.grasps = *req.cached_grasps;
  } else {
    GraspParams gp;
    gp.mu = req.params.mu;
    gp.density = req.params.density;
    gp.n_approach = req.params.n_approach;
    gp.seed = req.params.seed;
    ctx.grasps = plan_grasps(req.mesh, req.gripper, gp);
  }
  ctx.diagnostics.grasp_count = ctx.grasps.size();
  ctx.diagnostics.times.grasps = clock.lap();

  ctx.hull = convex_hull(req.mesh);
  ctx.com = center_of_mass(req.mesh);
  ctx.canonical = req.cached_placements ? *req.cached_placements
                                        : plan_placements(ctx.hull, ctx.com, ctx.grasps, req.params.stability_margin);
  ctx.diagnostics.times.placements = clock.lap();

  FilterParams fp;
  fp.omega = req.params.omega;
  fp.ik = ctx.ik;

  const int start_facet = validate_resting_pose(ctx, req.start_pose, req.scene.table_height, "start");
  const int goal_facet = validate_resting_pose(ctx, req.goal_pose, req.scene.table_height, "goal");

  Placement start;
  start.id = -1;
  start.pose = req.start_pose;
  start.support_facet = start_facet;
  ctx.start = {NodeKind::Start, filter_placement(start, ctx.grasps, req.robot, req.scene, fp), Vec3::UnitZ()};
  ctx.diagnostics.start_accessible = ctx.start.placement.accessible_grasp_ids.size();
  ctx.diagnostics.times.ik_cd_init = clock.lap();

  // Intermediates: first candidate position that leaves the placement any grasp.
  for (const auto& canonical : ctx.canonical) {
    for (const auto& pos : req.scene.candidate_regrasp_positions) {
      auto filtered = filter_robot_feasible({canonical}, pos, ctx.grasps, req.robot, req.scene, fp).front();
      if (!filtered.empty()) {
        ctx.intermediates.push_back({NodeKind::Intermediate, std::move(filtered), Vec3::UnitZ()});
        break;
      }
    }
  }
  ctx.diagnostics.times.ik_cd_regrasp = clock.lap();

  Placement goal;
  goal.id = -2;
  goal.pose = req.goal_pose;
  goal.support_facet = goal_facet;
  FilterParams goal_fp = fp;
  goal_fp.backward = req.goal_backward;
  ctx.goal = {NodeKind::Goal, filter_placement(goal, ctx.grasps, req.robot, req.scene, goal_fp), req.goal_backward};
  ctx.diagnostics.goal_accessible = ctx.goal.placement.accessible_grasp_ids.size();
  ctx.diagnostics.times.ik_cd_goal = clock.lap();
  return ctx;
}

inline PlanResult solve(const PlanContext& ctx, const RobotModel& robot) {
  if (ctx.start.placement.empty())
    throw Error(ErrorCode::NoAccessibleGrasp, "no robot-feasible grasp at the start pose");
  if (ctx.goal.placement.empty())
    throw Error(ErrorCode::NoAccessibleGrasp, "no robot-feasible grasp at the goal pose");
  detail::Stopwatch clock;
  PlanResult result;
  result.diagnostics = ctx.diagnostics;
  result.graph = build_graph(ctx.intermediates, ctx.start, ctx.goal);
  result.path = search(result.graph);
  for (std::size_t k = 0; k + 1 < result.path.size(); ++k)
    result.grasp_ids.push_back(pick_shared_grasp(result.path[k], result.path[k + 1], result.graph));
  result.keyframes = expand_sequence(result.path, result.graph, ctx.grasps, robot, ctx.omega, ctx.ik);
  auto& d = result.diagnostics;
  d.times.graph_search = clock.lap();
  d.nodes = result.graph.nodes.size();
  d.l1_edges = result.graph.layer1_edges.size();
  d.l2_edges = result.graph.layer2_edge_count();
  d.regrasp_count = static_cast<int>(result.path.size()) - 2;
  return result;
}

inline PlanResult plan(const PlanRequest& req) {
  if (poses_match(req.start_pose, req.goal_pose)) {
    PlanResult r;
    r.diagnostics.message = "already at goal";
    return r;
  }
  return solve(prepare(req), req.robot);
}

// ---------------------------------------------------------------------------
// Output

inline Json keyframe_to_json(std::size_t index, const KeyFrame& f) {
  return {{"index", index},
          {"label", to_string(f.label)},
          {"tcp_pose", pose_to_json(f.tcp_pose)},
          {"joints", std::vector<double>(f.joints.data(), f.joints.data() + f.joints.size())},
          {"jaw", {{"state", f.jaw_closed ? "closed" : "open"}, {"width", f.jaw_width}}},
          {"object_pose", pose_to_json(f.object_pose)},
          {"grasp_id", f.grasp_id ? Json(*f.grasp_id) : Json(nullptr)}};
}

inline Json diagnostics_to_json(const Diagnostics& d) {
  return {{"phase_times_s",
           {{"grasps", d.times.grasps},
            {"placements", d.times.placements},
            {"ik_cd_init", d.times.ik_cd_init},
            {"ik_cd_regrasp", d.times.ik_cd_regrasp},
            {"ik_cd_goal", d.times.ik_cd_goal},
            {"graph_search", d.times.graph_search}}},
          {"graph", {{"nodes", d.nodes}, {"l1_edges", d.l1_edges}, {"l2_edges", d.l2_edges}}},
          {"regrasp_count", d.regrasp_count},
          {"grasp_count", d.grasp_count},
          {"start_accessible", d.start_accessible},
          {"goal_accessible", d.goal_accessible},
          {"message", d.message}};
}

inline Json request_echo(const PlanRequest& req) {
  return {{"mesh_hash", mesh_hash(req.mesh)},
          {"start_pose", pose_to_json(req.start_pose)},
          {"goal_pose", pose_to_json(req.goal_pose)},
          {"goal_backward", vec_to_json(req.goal_backward)},
          {"parameters",
           {{"mu", req.params.mu},
            {"omega", req.params.omega},
            {"density", req.params.density},
            {"stability_margin", req.params.stability_margin},
            {"n_approach", req.params.n_approach},
            {"seed", req.params.seed}}}};
}

inline Json sequence_to_json(const PlanRequest& req, const PlanResult& result) {
  Json frames = Json::array();
  for (std::size_t i = 0; i < result.keyframes.size(); ++i) frames.push_back(keyframe_to_json(i, result.keyframes[i]));
  return {{"request_echo", request_echo(req)}, {"keyframes", frames}, {"diagnostics", diagnostics_to_json(result.diagnostics)}};
}

}  // namespace reorient
