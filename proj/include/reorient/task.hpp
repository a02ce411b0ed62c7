#pragma once

#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "reorient/mesh_io.hpp"
#include "reorient/solver.hpp"

namespace reorient {

namespace fs = std::filesystem;

struct TaskObject {
  fs::path mesh_path;
  TriMesh mesh;
  Pose start_pose;
  Pose goal_pose;
  Vec3 goal_backward = Vec3::UnitZ();
};

/// Declarative planning job: objects are planned in list order, and each
/// finished object becomes an obstacle for the ones after it.
struct TaskFile {
  std::vector<TaskObject> objects;
  Scene scene;
  RobotModel robot = default_arm();
  GripperModel gripper;
  PlanParams params;
  std::optional<fs::path> cache_dir;
};

inline PlanParams params_from_json(const Json& j, PlanParams p = {}) {
  if (j.contains("mu")) p.mu = j.at("mu").get<double>();
  if (j.contains("omega")) p.omega = j.at("omega").get<double>();
  if (j.contains("density")) p.density = j.at("density").get<double>();
  if (j.contains("stability_margin")) p.stability_margin = j.at("stability_margin").get<double>();
  if (j.contains("n_approach")) p.n_approach = j.at("n_approach").get<int>();
  if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
  if (p.mu < 0 || p.omega < 0 || p.density < 0 || p.stability_margin < 0 || p.n_approach <= 0)
    throw Error(ErrorCode::Schema, "parameters out of range: " + j.dump());
  return p;
}

inline Json params_to_json(const PlanParams& p) {
  return {{"mu", p.mu}, {"omega", p.omega}, {"density", p.density}, {"stability_margin", p.stability_margin},
          {"n_approach", p.n_approach}, {"seed", p.seed}};
}

/// Parse a task file. Relative paths resolve against the task file's directory.
inline TaskFile load_task(const fs::path& task_path, double mesh_scale = 1.0) {
  const Json j = read_json_file(task_path);
  const fs::path root = task_path.has_parent_path() ? task_path.parent_path() : fs::path(".");
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : root / p; };
  TaskFile task;
  try {
    if (j.contains("scene")) {
      const Json& s = j.at("scene");
      if (s.contains("table_height")) task.scene.table_height = s.at("table_height").get<double>();
      if (s.contains("table_extent")) {
        const auto e = s.at("table_extent").get<std::vector<double>>();
        if (e.size() != 4 || e[0] >= e[1] || e[2] >= e[3])
          throw Error(ErrorCode::Schema, "table_extent must be [x_min, x_max, y_min, y_max]");
        task.scene.table_extent = {e[0], e[1], e[2], e[3]};
      }
      if (s.contains("obstacles"))
        for (const auto& o : s.at("obstacles"))
          task.scene.obstacles.emplace_back(load_mesh(resolve(o.at("mesh_path").get<std::string>()), mesh_scale),
                                            pose_from_json(o.at("pose")));
      if (s.contains("candidate_regrasp_positions"))
        for (const auto& p : s.at("candidate_regrasp_positions"))
          task.scene.candidate_regrasp_positions.push_back(vec2_from_json(p));
    }
    if (j.contains("robot_path")) task.robot = robot_from_json(read_json_file(resolve(j.at("robot_path").get<std::string>())));
    if (j.contains("gripper")) task.gripper = gripper_from_json(j.at("gripper"));
    if (j.contains("parameters")) task.params = params_from_json(j.at("parameters"));
    if (j.contains("cache_dir")) task.cache_dir = resolve(j.at("cache_dir").get<std::string>());
    for (const auto& oj : j.at("objects")) {
      TaskObject obj;
      obj.mesh_path = resolve(oj.at("mesh_path").get<std::string>());
      obj.mesh = load_mesh(obj.mesh_path, mesh_scale);
      if (!obj.mesh.is_watertight())
        throw Error(ErrorCode::Schema, "mesh is not watertight: " + obj.mesh_path.string());
      obj.start_pose = pose_from_json(oj.at("start_pose"));
      obj.goal_pose = pose_from_json(oj.at("goal_pose"));
      if (oj.contains("goal_backward")) obj.goal_backward = vec_from_json(oj.at("goal_backward")).normalized();
      task.objects.push_back(std::move(obj));
    }
    task.scene.validate();
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::Schema, task_path.string() + ": " + e.what());
  }
  return task;
}

// ---------------------------------------------------------------------------
// Keyframe geometry dumps

/// One OBJ per keyframe with groups `object`, `obstacle_<i>`, `finger_a`,
/// `finger_b`, `palm` and `link_<k>`. The object group comes first, so its
/// vertices are the first ones in each file.
inline std::vector<fs::path> dump_keyframes(const std::vector<KeyFrame>& frames, const TriMesh& object,
                                            const Scene& scene, const GripperModel& gripper,
                                            const RobotModel& robot, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<fs::path> files;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const KeyFrame& f = frames[i];
    std::ostringstream name;
    name << "keyframe_" << std::setw(3) << std::setfill('0') << i << "_" << to_string(f.label) << ".obj";
    const fs::path path = out_dir / name.str();
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    ObjWriter obj(out);
    obj.add("object", object.transformed(f.object_pose));
    for (std::size_t k = 0; k < scene.obstacles.size(); ++k) obj.add("obstacle_" + std::to_string(k), scene.obstacles[k].world);
    const auto boxes = gripper.boxes(f.tcp_pose, f.jaw_width);
    obj.add("finger_a", boxes[0].to_mesh());
    obj.add("finger_b", boxes[1].to_mesh());
    obj.add("palm", boxes[2].to_mesh());
    if (f.joints.size() == robot.dof()) {
      const auto caps = world_capsules(robot, forward_kinematics(robot, f.joints));
      for (std::size_t k = 0; k < caps.size(); ++k) obj.add("link_" + std::to_string(k), tessellate_capsule(caps[k], 16));
    }
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
    files.push_back(path);
  }
  return files;
}

// ---------------------------------------------------------------------------
// Running a task

struct RunOptions {
  bool use_cache = true;
  std::optional<fs::path> dump_dir;
  std::optional<std::uint64_t> seed;
  double scale = 1.0;
  bool timing = false;
  fs::path out_dir = "reorient_out";
};

struct ObjectOutcome {
  PlanRequest request;
  PlanResult result;
  fs::path sequence_file;
};

struct RunOutcome {
  int exit_code = 0;
  Json report;
  std::vector<ObjectOutcome> objects;
};

inline std::string cache_key(const TriMesh& mesh, const GripperModel& g, const PlanParams& p) {
  Fnv1a h;
  h.add(mesh_hash(mesh));
  h.add(gripper_to_json(g).dump());
  h.add(p.mu);
  h.add(p.density);
  h.add(p.stability_margin);
  h.add(static_cast<std::uint64_t>(p.n_approach));
  h.add(p.seed);
  return h.hex();
}

inline void print_timing_table(std::ostream& os, const std::vector<ObjectOutcome>& objects) {
  const char* headers[] = {"Object", "Grasps", "Placements", "IK,CD(init)", "IK,CD(regrasp)", "IK,CD(goal)",
                           "Graph search"};
  os << std::left;
  for (const char* h : headers) os << std::setw(16) << h;
  os << '\n' << std::fixed << std::setprecision(4);
  for (std::size_t k = 0; k < objects.size(); ++k) {
    const PhaseTimes& t = objects[k].result.diagnostics.times;
    os << std::setw(16) << k;
    for (double v : {t.grasps, t.placements, t.ik_cd_init, t.ik_cd_regrasp, t.ik_cd_goal, t.graph_search})
      os << std::setw(16) << v;
    os << '\n';
  }
  os << std::defaultfloat;
}

/// Plan every object of a task in order. Exit codes: 0 success, 1 task or
/// input error, 2 planning failure (the report names the object and error).
inline RunOutcome run_plan(const fs::path& task_path, const RunOptions& options, std::ostream& log) {
  RunOutcome outcome;
  TaskFile task;
  try {
    task = load_task(task_path, options.scale);
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    outcome.exit_code = 1;
    outcome.report = {{"status", "input_error"}, {"error", e.what()}};
    return outcome;
  }
  if (options.seed) task.params.seed = *options.seed;

  Json objects_report = Json::array();
  Scene scene = task.scene;
  try {
    fs::create_directories(options.out_dir);
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << '\n';
    outcome.exit_code = 1;
    outcome.report = {{"status", "input_error"}, {"error", e.what()}};
    return outcome;
  }

  for (std::size_t k = 0; k < task.objects.size(); ++k) {
    const TaskObject& obj = task.objects[k];
    ObjectOutcome oo;
    PlanRequest& req = oo.request;
    req.mesh = obj.mesh;
    req.start_pose = obj.start_pose;
    req.goal_pose = obj.goal_pose;
    req.goal_backward = obj.goal_backward;
    req.scene = scene;
    req.robot = task.robot;
    req.gripper = task.gripper;
    req.params = task.params;

    fs::path grasp_cache, placement_cache;
    if (task.cache_dir) {
      const std::string key = cache_key(obj.mesh, task.gripper, task.params);
      grasp_cache = *task.cache_dir / (key + "_grasps.json");
      placement_cache = *task.cache_dir / (key + "_placements.json");
      if (options.use_cache && fs::exists(grasp_cache) && fs::exists(placement_cache)) {
        try {
          req.cached_grasps = grasp_set_from_json(read_json_file(grasp_cache));
          req.cached_placements = placements_from_json(read_json_file(placement_cache), *req.cached_grasps,
                                                       mesh_hash(obj.mesh));
          log << "object " << k << ": using cached grasps and placements\n";
        } catch (const Error& e) {
          // A bad cache is a miss; it is rebuilt below.
          log << "object " << k << ": ignoring cache: " << e.what() << '\n';
          req.cached_grasps.reset();
          req.cached_placements.reset();
        }
      }
    }

    Json entry = {{"object", k}, {"mesh_path", obj.mesh_path.string()}};
    try {
      if (poses_match(req.start_pose, req.goal_pose)) {
        oo.result = plan(req);
      } else {
        PlanContext ctx = prepare(req);
        if (task.cache_dir && !req.cached_grasps) {
          write_json_file(grasp_cache, grasp_set_to_json(ctx.grasps));
          write_json_file(placement_cache, placements_to_json(mesh_hash(obj.mesh), ctx.canonical));
        }
        oo.result = solve(ctx, req.robot);
      }
    } catch (const Error& e) {
      log << "object " << k << ": planning failed: " << e.what() << '\n';
      entry["status"] = "failed";
      entry["error"] = to_string(e.code());
      entry["message"] = e.what();
      objects_report.push_back(entry);
      outcome.exit_code = 2;
      break;
    }

    oo.sequence_file = options.out_dir / ("object_" + std::to_string(k) + ".json");
    write_json_file(oo.sequence_file, sequence_to_json(req, oo.result));
    if (options.dump_dir)
      dump_keyframes(oo.result.keyframes, obj.mesh, scene, task.gripper, task.robot,
                     *options.dump_dir / ("object_" + std::to_string(k)));
    entry["status"] = "ok";
    entry["sequence_file"] = oo.sequence_file.string();
    entry["keyframes"] = oo.result.keyframes.size();
    entry["diagnostics"] = diagnostics_to_json(oo.result.diagnostics);
    objects_report.push_back(entry);

    // Finished objects are obstacles for the rest.
    scene.obstacles.emplace_back(obj.mesh, obj.goal_pose);
    outcome.objects.push_back(std::move(oo));
  }

  outcome.report = {{"status", outcome.exit_code == 0 ? "ok" : "planning_failed"},
                    {"parameters", params_to_json(task.params)},
                    {"objects", objects_report}};
  write_json_file(options.out_dir / "report.json", outcome.report);
  if (options.timing) print_timing_table(log, outcome.objects);
  return outcome;
}

}  // namespace reorient
