#include <CLI11.hpp>

#include <iostream>

#include "skillsim/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Asset, task, and policy pipeline for simulated manipulation "
               "skill learning"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "pipeline config JSON");

  // assets build|describe
  auto* assets = app.add_subcommand("assets", "asset tooling");
  assets->require_subcommand(1);

  skillsim::cli::AssetsBuildArgs build_args;
  auto* assets_build = assets->add_subcommand("build", "wrap a mesh into a rigid URDF asset");
  assets_build->add_option("--mesh", build_args.mesh_path, "OBJ mesh path")->required();
  assets_build->add_option("--category", build_args.category, "parameter-table category")->required();
  assets_build->add_option("--seed", build_args.seed, "sampling seed");
  assets_build->add_option("--out", build_args.out_dir, "output directory");

  skillsim::cli::AssetsDescribeArgs describe_args;
  auto* assets_describe = assets->add_subcommand("describe", "print the prompt description of a URDF");
  assets_describe->add_option("--urdf", describe_args.urdf_path, "URDF path")->required();

  // tasks generate|seed-replay
  auto* tasks = app.add_subcommand("tasks", "LLM task generation");
  tasks->require_subcommand(1);

  skillsim::cli::TasksGenerateArgs gen_args;
  auto* tasks_generate = tasks->add_subcommand("generate", "prompt the provider and validate tasks");
  tasks_generate->add_option("--scene", gen_args.scene_manifest, "scene manifest JSON");
  tasks_generate->add_option("--out", gen_args.out_path, "tasks file to write");
  tasks_generate->add_option("--provider", gen_args.provider, "replay|http");
  tasks_generate->add_option("--cache-dir", gen_args.cache_dir, "response cache directory");

  skillsim::cli::SeedReplayArgs seed_args;
  auto* tasks_seed = tasks->add_subcommand("seed-replay", "cache a canned response for replay mode");
  tasks_seed->add_option("--scene", seed_args.scene_manifest, "scene manifest JSON")->required();
  tasks_seed->add_option("--response", seed_args.response_path, "response text file")->required();
  tasks_seed->add_option("--cache-dir", seed_args.cache_dir, "cache directory");

  // train
  skillsim::cli::TrainArgs train_args;
  long train_budget = 0;
  uint64_t train_seed = 0;
  int train_threads = 0;
  std::string ablation;
  auto* train = app.add_subcommand("train", "train policies for each task");
  train->add_option("--tasks", train_args.tasks_path, "tasks file")->required();
  train->add_option("--scene", train_args.scene_manifest, "scene manifest JSON");
  train->add_option("--out", train_args.out_dir, "run output directory");
  auto* budget_opt = train->add_option("--budget", train_budget, "total env-step budget");
  auto* train_seed_opt = train->add_option("--seed", train_seed, "training seed");
  auto* threads_opt = train->add_option("--threads", train_threads, "worker threads (1 = deterministic single-threaded)");
  train->add_option("--task", train_args.task_name, "train only the named task");
  train->add_option("--ablation", ablation, "monolithic: one policy on the summed reward");

  // eval
  skillsim::cli::EvalArgs eval_args;
  uint64_t eval_seed = 0;
  auto* eval = app.add_subcommand("eval", "chain-evaluate a trained run");
  eval->add_option("--run", eval_args.run_dir, "run directory")->required();
  eval->add_option("--scene", eval_args.scene_manifest, "scene manifest JSON");
  eval->add_option("--episodes", eval_args.episodes, "evaluation episodes");
  auto* eval_seed_opt = eval->add_option("--seed", eval_seed, "evaluation seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  if (assets_build->parsed()) {
    build_args.config_path = config_path;
    return skillsim::cli::cmd_assets_build(build_args);
  }
  if (assets_describe->parsed()) return skillsim::cli::cmd_assets_describe(describe_args);
  if (tasks_generate->parsed()) {
    gen_args.config_path = config_path;
    return skillsim::cli::cmd_tasks_generate(gen_args);
  }
  if (tasks_seed->parsed()) {
    seed_args.config_path = config_path;
    return skillsim::cli::cmd_tasks_seed_replay(seed_args);
  }
  if (train->parsed()) {
    train_args.config_path = config_path;
    if (budget_opt->count()) train_args.budget = train_budget;
    if (train_seed_opt->count()) train_args.seed = train_seed;
    if (threads_opt->count()) train_args.threads = train_threads;
    if (!ablation.empty()) {
      if (ablation != "monolithic") {
        std::cerr << "error: --ablation must be \"monolithic\"\n";
        return 2;
      }
      train_args.monolithic = true;
    }
    return skillsim::cli::cmd_train(train_args);
  }
  if (eval->parsed()) {
    eval_args.config_path = config_path;
    if (eval_seed_opt->count()) eval_args.seed = eval_seed;
    return skillsim::cli::cmd_eval(eval_args);
  }
  return 2;
}
