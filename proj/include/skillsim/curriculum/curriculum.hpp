#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "skillsim/ppo/ppo.hpp"
#include "skillsim/task/task.hpp"

namespace skillsim::curriculum {

struct SubtaskRun {
  std::string name;
  rdsl::RewardProgram program;
  ppo::TrainResult result;
};

struct CurriculumRun {
  task::TaskSpec task;
  std::vector<SubtaskRun> subtasks;
  bool monolithic = false;
};

// Train subtasks in temporal order. Subtask 0 resets from the default
// distribution; each later subtask resets from the predecessor's terminal
// buffer. The `total_budget` of env steps is consumed sequentially across
// subtasks. Throws SequenceAborted(stage, reason) when a subtask exhausts
// its budget with eval success < 0.5.
CurriculumRun train_sequence(
    const task::TaskSpec& task, const SceneSpec& scene,
    const ppo::PPOConfig& ppo_cfg, const sim::SimConfig& sim_cfg,
    long total_budget,
    const std::function<void(int, const ppo::MetricsRecord&)>& on_metrics = {});

// All terms of every subtask summed into one program; success is the
// conjunction of every subtask predicate. Used by the non-decomposed
// ("monolithic") reward ablation.
rdsl::RewardProgram monolithic_program(const task::TaskSpec& task);

// Same budget, single policy over the summed reward.
CurriculumRun train_monolithic(
    const task::TaskSpec& task, const SceneSpec& scene,
    const ppo::PPOConfig& ppo_cfg, const sim::SimConfig& sim_cfg,
    long total_budget,
    const std::function<void(int, const ppo::MetricsRecord&)>& on_metrics = {});

struct ChainReport {
  int episodes = 0;
  double end_to_end = 0.0;
  std::vector<int> reached;             // episodes entering stage i
  std::vector<int> succeeded;           // episodes passing stage i
  std::vector<double> stage_conditional;  // succeeded[i] / reached[i]
};

// Run stage policies back to back with deterministic mean actions and no
// reset between stages: each episode starts from the default init, stage i
// runs until its success predicate or the step cap, then hands the live
// simulator state to stage i+1. End-to-end success = all stages in order.
ChainReport chain_eval(const std::vector<const ppo::PolicyNet*>& policies,
                       const std::vector<const rdsl::RewardProgram*>& programs,
                       const SceneSpec& scene, const sim::SimConfig& sim_cfg,
                       int episodes, uint64_t seed);

ChainReport chain_eval(const CurriculumRun& run, const SceneSpec& scene,
                       const sim::SimConfig& sim_cfg, int episodes,
                       uint64_t seed);

std::string chain_report_json(const ChainReport& report);
std::string chain_report_table(const ChainReport& report,
                               const std::vector<std::string>& stage_names);

// Run directory layout:
//   task.json, config.json,
//   subtask_<ii>_<name>/{policy.bin, terminals.jsonl, metrics.jsonl}
void save_run(const std::filesystem::path& dir, const CurriculumRun& run,
              const std::string& scene_hash, const std::string& config_json);

struct LoadedRun {
  task::TaskSpec task;
  std::vector<std::string> subtask_names;
  std::vector<rdsl::RewardProgram> programs;
  std::vector<ppo::PolicyNet> policies;
  bool monolithic = false;
};
LoadedRun load_run(const std::filesystem::path& dir);

}  // namespace skillsim::curriculum
