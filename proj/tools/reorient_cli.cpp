#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "reorient/task.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Regrasp planner for object reorientation on a table"};
  app.require_subcommand(1);

  std::string task_path;
  std::string dump_dir;
  std::string out_dir = "reorient_out";
  std::uint64_t seed = 0;
  double scale = 1.0;
  bool no_cache = false;
  bool timing = false;

  CLI::App* plan = app.add_subcommand("plan", "plan every object of a task file");
  plan->add_option("task", task_path, "task JSON file")->required();
  plan->add_flag("--no-cache", no_cache, "ignore and do not read grasp/placement caches");
  plan->add_option("--dump-keyframes", dump_dir, "write one OBJ per keyframe into this directory");
  auto* seed_opt = plan->add_option("--seed", seed, "override the task seed");
  plan->add_option("--scale", scale, "mesh unit scale applied on load")->check(CLI::PositiveNumber);
  plan->add_flag("--timing", timing, "print per-phase timings");
  plan->add_option("--out", out_dir, "output directory for sequences and the report");

  CLI11_PARSE(app, argc, argv);

  reorient::RunOptions options;
  options.use_cache = !no_cache;
  if (!dump_dir.empty()) options.dump_dir = dump_dir;
  if (seed_opt->count() > 0) options.seed = seed;
  options.scale = scale;
  options.timing = timing;
  options.out_dir = out_dir;

  try {
    const auto outcome = reorient::run_plan(task_path, options, std::cerr);
    if (outcome.exit_code == 0)
      for (const auto& o : outcome.objects) std::cout << o.sequence_file.string() << '\n';
    return outcome.exit_code;
  } catch (const reorient::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == reorient::ErrorCode::Io || e.code() == reorient::ErrorCode::Schema ? 1 : 2;
  }
}
