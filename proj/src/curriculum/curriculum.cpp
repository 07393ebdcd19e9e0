#include "skillsim/curriculum/curriculum.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>

#include "skillsim/error.hpp"
#include "skillsim/io_util.hpp"

namespace skillsim::curriculum {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {
constexpr double kAbortSuccessFloor = 0.5;

std::string stage_dir_name(int index, const std::string& name) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "subtask_%02d_", index);
  return buf + name;
}
}  // namespace

CurriculumRun train_sequence(
    const task::TaskSpec& task, const SceneSpec& scene,
    const ppo::PPOConfig& ppo_cfg, const sim::SimConfig& sim_cfg,
    long total_budget,
    const std::function<void(int, const ppo::MetricsRecord&)>& on_metrics) {
  CurriculumRun run;
  run.task = task;

  long remaining = total_budget;
  for (size_t i = 0; i < task.subtasks.size(); ++i) {
    const auto& subtask = task.subtasks[i];
    ppo::PPOConfig cfg = ppo_cfg;
    cfg.max_env_steps = remaining;
    cfg.seed = ppo_cfg.seed + 7919ull * i;

    sim::InitDistribution init;
    if (i == 0)
      init = sim::DefaultInit{};
    else
      init = sim::TerminalBufferInit{&run.subtasks.back().result.terminals};

    auto callback = on_metrics
                        ? [&, i](const ppo::MetricsRecord& rec) {
                            on_metrics(static_cast<int>(i), rec);
                          }
                        : std::function<void(const ppo::MetricsRecord&)>{};
    ppo::TrainResult result = ppo::train_subtask(scene, subtask.reward, init,
                                                 cfg, sim_cfg, callback);
    remaining -= result.env_steps;

    if (result.budget_exhausted &&
        result.final_eval_success < kAbortSuccessFloor)
      throw SequenceAborted(
          static_cast<int>(i),
          "budget exhausted at eval success " +
              fmt_compact(result.final_eval_success) + " (subtask \"" +
              subtask.name + "\")");

    run.subtasks.push_back({subtask.name, subtask.reward, std::move(result)});
  }
  return run;
}

rdsl::RewardProgram monolithic_program(const task::TaskSpec& task) {
  rdsl::RewardProgram merged;
  merged.success_bonus = 0.0;
  for (const auto& subtask : task.subtasks) {
    for (const auto& wt : subtask.reward.terms) merged.terms.push_back(wt);
    for (const auto& pred : subtask.reward.success)
      merged.success.push_back(pred);
    merged.success_bonus += subtask.reward.success_bonus;
  }
  merged.success_bonus /= static_cast<double>(task.subtasks.size());
  merged.source = rdsl::program_text(merged);
  return merged;
}

CurriculumRun train_monolithic(
    const task::TaskSpec& task, const SceneSpec& scene,
    const ppo::PPOConfig& ppo_cfg, const sim::SimConfig& sim_cfg,
    long total_budget,
    const std::function<void(int, const ppo::MetricsRecord&)>& on_metrics) {
  CurriculumRun run;
  run.task = task;
  run.monolithic = true;

  ppo::PPOConfig cfg = ppo_cfg;
  cfg.max_env_steps = total_budget;

  auto callback = on_metrics ? [&](const ppo::MetricsRecord& rec) {
    on_metrics(0, rec);
  } : std::function<void(const ppo::MetricsRecord&)>{};

  const rdsl::RewardProgram merged = monolithic_program(task);
  ppo::TrainResult result = ppo::train_subtask(
      scene, merged, sim::DefaultInit{}, cfg, sim_cfg, callback);
  run.subtasks.push_back({"monolithic", merged, std::move(result)});
  return run;
}

ChainReport chain_eval(const std::vector<const ppo::PolicyNet*>& policies,
                       const std::vector<const rdsl::RewardProgram*>& programs,
                       const SceneSpec& scene, const sim::SimConfig& sim_cfg,
                       int episodes, uint64_t seed) {
  const int stages = static_cast<int>(programs.size());
  ChainReport report;
  report.episodes = episodes;
  report.reached.assign(stages, 0);
  report.succeeded.assign(stages, 0);

  sim::Simulator sim(scene, sim_cfg);
  Rng rng(seed);
  ppo::EvalScratch scratch;
  std::vector<double> action(sim::kActionDim);
  int end_to_end = 0;

  for (int ep = 0; ep < episodes; ++ep) {
    sim.reset(rng, sim::DefaultInit{});
    bool alive = true;
    for (int s = 0; s < stages && alive; ++s) {
      ++report.reached[s];
      sim.bind_task(*programs[s]);  // retarget; does not touch sim state
      const ppo::PolicyNet& policy = *policies[s];
      bool stage_done = false;
      for (int t = 0; t < sim::kEpisodeStepCap; ++t) {
        const std::vector<double> obs = sim.observe();
        policy.mean_action(obs.data(), action.data(), scratch);
        sim.step(ppo::action_to_command(action.data(), sim.config()));
        if (rdsl::check_success(*programs[s], sim.view())) {
          stage_done = true;
          break;
        }
      }
      if (stage_done)
        ++report.succeeded[s];
      else
        alive = false;
    }
    if (alive) ++end_to_end;
  }

  report.end_to_end = static_cast<double>(end_to_end) / episodes;
  report.stage_conditional.assign(stages, 0.0);
  for (int s = 0; s < stages; ++s)
    if (report.reached[s] > 0)
      report.stage_conditional[s] =
          static_cast<double>(report.succeeded[s]) / report.reached[s];
  return report;
}

ChainReport chain_eval(const CurriculumRun& run, const SceneSpec& scene,
                       const sim::SimConfig& sim_cfg, int episodes,
                       uint64_t seed) {
  std::vector<const ppo::PolicyNet*> policies;
  std::vector<const rdsl::RewardProgram*> programs;
  if (run.monolithic) {
    // One policy executed against every stage predicate in order.
    for (const auto& subtask : run.task.subtasks) {
      policies.push_back(&run.subtasks.front().result.policy);
      programs.push_back(&subtask.reward);
    }
  } else {
    for (const auto& stage : run.subtasks) {
      policies.push_back(&stage.result.policy);
      programs.push_back(&stage.program);
    }
  }
  return chain_eval(policies, programs, scene, sim_cfg, episodes, seed);
}

std::string chain_report_json(const ChainReport& report) {
  json doc;
  doc["episodes"] = report.episodes;
  doc["end_to_end"] = report.end_to_end;
  doc["reached"] = report.reached;
  doc["succeeded"] = report.succeeded;
  doc["stage_conditional"] = report.stage_conditional;
  return doc.dump(2) + "\n";
}

std::string chain_report_table(const ChainReport& report,
                               const std::vector<std::string>& stage_names) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-28s %8s %8s %12s\n", "stage", "reached",
                "passed", "conditional");
  out += buf;
  for (size_t s = 0; s < stage_names.size(); ++s) {
    std::snprintf(buf, sizeof(buf), "%-28s %8d %8d %11.1f%%\n",
                  stage_names[s].c_str(), report.reached[s],
                  report.succeeded[s], 100.0 * report.stage_conditional[s]);
    out += buf;
  }
  std::snprintf(buf, sizeof(buf), "end-to-end: %.1f%% over %d episodes\n",
                100.0 * report.end_to_end, report.episodes);
  out += buf;
  return out;
}

void save_run(const fs::path& dir, const CurriculumRun& run,
              const std::string& scene_hash, const std::string& config_json) {
  fs::create_directories(dir);
  task::persist_tasks({run.task}, scene_hash, dir / "task.json");
  write_file_atomic(dir / "config.json", config_json);

  for (size_t i = 0; i < run.subtasks.size(); ++i) {
    const auto& stage = run.subtasks[i];
    const fs::path stage_dir =
        dir / stage_dir_name(static_cast<int>(i), stage.name);
    fs::create_directories(stage_dir);

    json meta;
    meta["subtask"] = stage.name;
    meta["program"] = rdsl::program_text(stage.program);
    meta["converged"] = stage.result.converged;
    meta["env_steps"] = stage.result.env_steps;
    meta["final_eval_success"] = stage.result.final_eval_success;
    ppo::save_policy(stage_dir / "policy.bin", stage.result.policy,
                     meta.dump());

    std::string terminals;
    for (const auto& s : stage.result.terminals.states())
      terminals += sim::state_json(s) + "\n";
    write_file_atomic(stage_dir / "terminals.jsonl", terminals);
    write_file_atomic(stage_dir / "metrics.jsonl",
                      ppo::metrics_jsonl(stage.result.metrics));
  }
}

LoadedRun load_run(const fs::path& dir) {
  LoadedRun out;
  const task::TaskFile tf = task::load_tasks(dir / "task.json");
  if (tf.tasks.empty()) throw IoError("run has an empty task file");
  out.task = tf.tasks.front();

  json cfg = json::parse(read_file(dir / "config.json"));
  out.monolithic = cfg.value("ablation", "") == "monolithic";

  std::vector<fs::path> stage_dirs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory() &&
        entry.path().filename().string().rfind("subtask_", 0) == 0)
      stage_dirs.push_back(entry.path());
  std::sort(stage_dirs.begin(), stage_dirs.end());

  for (const auto& stage_dir : stage_dirs) {
    ppo::LoadedPolicy loaded = ppo::load_policy(stage_dir / "policy.bin");
    const json meta = json::parse(loaded.meta_json);
    out.subtask_names.push_back(meta.at("subtask").get<std::string>());
    out.programs.push_back(
        rdsl::parse_reward(meta.at("program").get<std::string>()));
    out.policies.push_back(std::move(loaded.policy));
  }
  if (out.policies.empty()) throw IoError("run directory has no subtask policies");
  return out;
}

}  // namespace skillsim::curriculum
