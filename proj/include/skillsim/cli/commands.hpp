#pragma once

#include <optional>
#include <string>

#include "skillsim/error.hpp"
#include "skillsim/llm/gateway.hpp"
#include "skillsim/ppo/ppo.hpp"
#include "skillsim/sim/simulator.hpp"

namespace skillsim::cli {

// Static config file plus flag overrides (flags win). Unknown keys are
// rejected so typos fail loudly.
struct PipelineConfig {
  std::string scene_manifest;
  std::string cache_dir = "cache";
  std::string output_dir = "out";
  uint64_t seed = 1;
  llm::ProviderConfig provider;
  sim::SimConfig sim;
  ppo::PPOConfig ppo;
};

PipelineConfig load_pipeline_config(const std::string& path);  // "" = defaults
std::string pipeline_config_json(const PipelineConfig& cfg);

// Exit codes: 0 success, 1 domain failure, 2 usage/config error.
int exit_code_for(const Error& e);

struct AssetsBuildArgs {
  std::string config_path;
  std::string mesh_path;
  std::string category;
  std::string out_dir;  // empty: config output_dir
  uint64_t seed = 0;
};
int cmd_assets_build(const AssetsBuildArgs& args);

struct AssetsDescribeArgs {
  std::string urdf_path;
};
int cmd_assets_describe(const AssetsDescribeArgs& args);

struct TasksGenerateArgs {
  std::string config_path;
  std::string scene_manifest;   // empty: config scene_manifest
  std::string out_path;         // empty: <output_dir>/tasks.json
  std::string provider;         // "replay" | "http" | "" (config)
  std::string cache_dir;        // override
};
int cmd_tasks_generate(const TasksGenerateArgs& args);

struct SeedReplayArgs {
  std::string config_path;
  std::string scene_manifest;
  std::string response_path;
  std::string cache_dir;
};
int cmd_tasks_seed_replay(const SeedReplayArgs& args);

struct TrainArgs {
  std::string config_path;
  std::string tasks_path;
  std::string scene_manifest;
  std::string out_dir;
  std::optional<long> budget;
  std::optional<uint64_t> seed;
  std::optional<int> threads;
  std::string task_name;  // train only this task; empty = all
  bool monolithic = false;
};
int cmd_train(const TrainArgs& args);

struct EvalArgs {
  std::string config_path;
  std::string run_dir;
  std::string scene_manifest;
  int episodes = 100;
  std::optional<uint64_t> seed;
};
int cmd_eval(const EvalArgs& args);

}  // namespace skillsim::cli
