#include "skillsim/cli/commands.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <iostream>
#include <set>

#include "skillsim/curriculum/curriculum.hpp"
#include "skillsim/error.hpp"
#include "skillsim/io_util.hpp"
#include "skillsim/phys/params.hpp"
#include "skillsim/task/task.hpp"

namespace skillsim::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void expect_keys(const json& obj, const std::set<std::string>& known,
                 const std::string& context) {
  for (const auto& item : obj.items())
    if (!known.count(item.key()))
      throw Error("ConfigError",
                  "unknown key \"" + item.key() + "\" in " + context);
}

Vec3 vec3_of(const json& arr) {
  return {arr.at(0).get<double>(), arr.at(1).get<double>(),
          arr.at(2).get<double>()};
}

void apply_provider(const json& j, llm::ProviderConfig& p) {
  expect_keys(j,
              {"endpoint_url", "api_key_env_var", "timeout_s", "max_retries",
               "mode", "backoff_base_s"},
              "provider");
  p.endpoint_url = j.value("endpoint_url", p.endpoint_url);
  p.api_key_env_var = j.value("api_key_env_var", p.api_key_env_var);
  p.timeout_s = j.value("timeout_s", p.timeout_s);
  p.max_retries = j.value("max_retries", p.max_retries);
  p.backoff_base_s = j.value("backoff_base_s", p.backoff_base_s);
  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "http") p.mode = llm::ProviderMode::Http;
    else if (mode == "replay") p.mode = llm::ProviderMode::Replay;
    else throw Error("ConfigError", "provider.mode must be http or replay");
  }
}

void apply_sim(const json& j, sim::SimConfig& s) {
  expect_keys(j,
              {"dt", "max_ee_speed", "max_ee_ang_speed", "grasp_radius",
               "close_threshold", "gripper_rate", "reset_jitter",
               "workspace_lo", "workspace_hi"},
              "sim");
  s.dt = j.value("dt", s.dt);
  s.max_ee_speed = j.value("max_ee_speed", s.max_ee_speed);
  s.max_ee_ang_speed = j.value("max_ee_ang_speed", s.max_ee_ang_speed);
  s.grasp_radius = j.value("grasp_radius", s.grasp_radius);
  s.close_threshold = j.value("close_threshold", s.close_threshold);
  s.gripper_rate = j.value("gripper_rate", s.gripper_rate);
  s.reset_jitter = j.value("reset_jitter", s.reset_jitter);
  if (j.contains("workspace_lo")) s.workspace_lo = vec3_of(j.at("workspace_lo"));
  if (j.contains("workspace_hi")) s.workspace_hi = vec3_of(j.at("workspace_hi"));
  if (s.dt <= 0 || s.max_ee_speed <= 0 || s.max_ee_ang_speed <= 0 ||
      s.grasp_radius <= 0 || s.gripper_rate <= 0 ||
      (s.workspace_hi - s.workspace_lo).minCoeff() <= 0)
    throw Error("ConfigError", "sim config values must be positive");
}

void apply_ppo(const json& j, ppo::PPOConfig& p) {
  expect_keys(j,
              {"gamma", "gae_lambda", "clip_eps", "learning_rate", "epochs",
               "minibatches", "entropy_coef", "value_coef", "num_envs",
               "horizon", "max_env_steps", "grad_clip", "threads",
               "eval_episodes", "eval_success_threshold", "eval_interval"},
              "ppo");
  p.gamma = j.value("gamma", p.gamma);
  p.gae_lambda = j.value("gae_lambda", p.gae_lambda);
  p.clip_eps = j.value("clip_eps", p.clip_eps);
  p.learning_rate = j.value("learning_rate", p.learning_rate);
  p.epochs = j.value("epochs", p.epochs);
  p.minibatches = j.value("minibatches", p.minibatches);
  p.entropy_coef = j.value("entropy_coef", p.entropy_coef);
  p.value_coef = j.value("value_coef", p.value_coef);
  p.num_envs = j.value("num_envs", p.num_envs);
  p.horizon = j.value("horizon", p.horizon);
  p.max_env_steps = j.value("max_env_steps", p.max_env_steps);
  p.grad_clip = j.value("grad_clip", p.grad_clip);
  p.threads = j.value("threads", p.threads);
  p.eval_episodes = j.value("eval_episodes", p.eval_episodes);
  p.eval_success_threshold =
      j.value("eval_success_threshold", p.eval_success_threshold);
  p.eval_interval = j.value("eval_interval", p.eval_interval);
  if (p.gamma < 0 || p.gamma > 1 || p.gae_lambda < 0 || p.gae_lambda > 1 ||
      p.clip_eps <= 0)
    throw Error("ConfigError", "ppo gamma/gae_lambda must lie in [0,1], clip_eps > 0");
  if (p.epochs < 1 || p.minibatches < 1 || p.num_envs < 1 || p.horizon < 1 ||
      p.threads < 1 || p.eval_episodes < 1 || p.eval_interval < 1)
    throw Error("ConfigError", "ppo counts must be >= 1");
}

}  // namespace

PipelineConfig load_pipeline_config(const std::string& path) {
  PipelineConfig cfg;
  if (path.empty()) return cfg;
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error("ConfigError", "config " + path + ": " + e.what());
  }
  expect_keys(doc,
              {"scene_manifest", "cache_dir", "output_dir", "seed", "provider",
               "sim", "ppo"},
              "config");
  cfg.scene_manifest = doc.value("scene_manifest", cfg.scene_manifest);
  cfg.cache_dir = doc.value("cache_dir", cfg.cache_dir);
  cfg.output_dir = doc.value("output_dir", cfg.output_dir);
  cfg.seed = doc.value("seed", cfg.seed);
  if (doc.contains("provider")) apply_provider(doc.at("provider"), cfg.provider);
  if (doc.contains("sim")) apply_sim(doc.at("sim"), cfg.sim);
  if (doc.contains("ppo")) apply_ppo(doc.at("ppo"), cfg.ppo);
  if (!cfg.scene_manifest.empty() && !fs::exists(cfg.scene_manifest))
    throw Error("ConfigError",
                "scene_manifest path does not resolve: " + cfg.scene_manifest);
  return cfg;
}

std::string pipeline_config_json(const PipelineConfig& cfg) {
  json doc;
  doc["scene_manifest"] = cfg.scene_manifest;
  doc["cache_dir"] = cfg.cache_dir;
  doc["output_dir"] = cfg.output_dir;
  doc["seed"] = cfg.seed;
  doc["provider"] = {
      {"endpoint_url", cfg.provider.endpoint_url},
      {"api_key_env_var", cfg.provider.api_key_env_var},
      {"timeout_s", cfg.provider.timeout_s},
      {"max_retries", cfg.provider.max_retries},
      {"backoff_base_s", cfg.provider.backoff_base_s},
      {"mode", cfg.provider.mode == llm::ProviderMode::Http ? "http" : "replay"},
  };
  doc["sim"] = {
      {"dt", cfg.sim.dt},
      {"max_ee_speed", cfg.sim.max_ee_speed},
      {"max_ee_ang_speed", cfg.sim.max_ee_ang_speed},
      {"grasp_radius", cfg.sim.grasp_radius},
      {"close_threshold", cfg.sim.close_threshold},
      {"gripper_rate", cfg.sim.gripper_rate},
      {"reset_jitter", cfg.sim.reset_jitter},
      {"workspace_lo",
       {cfg.sim.workspace_lo.x(), cfg.sim.workspace_lo.y(), cfg.sim.workspace_lo.z()}},
      {"workspace_hi",
       {cfg.sim.workspace_hi.x(), cfg.sim.workspace_hi.y(), cfg.sim.workspace_hi.z()}},
  };
  doc["ppo"] = {
      {"gamma", cfg.ppo.gamma},
      {"gae_lambda", cfg.ppo.gae_lambda},
      {"clip_eps", cfg.ppo.clip_eps},
      {"learning_rate", cfg.ppo.learning_rate},
      {"epochs", cfg.ppo.epochs},
      {"minibatches", cfg.ppo.minibatches},
      {"entropy_coef", cfg.ppo.entropy_coef},
      {"value_coef", cfg.ppo.value_coef},
      {"num_envs", cfg.ppo.num_envs},
      {"horizon", cfg.ppo.horizon},
      {"max_env_steps", cfg.ppo.max_env_steps},
      {"grad_clip", cfg.ppo.grad_clip},
      {"threads", cfg.ppo.threads},
      {"eval_episodes", cfg.ppo.eval_episodes},
      {"eval_success_threshold", cfg.ppo.eval_success_threshold},
      {"eval_interval", cfg.ppo.eval_interval},
  };
  return doc.dump(2) + "\n";
}

int exit_code_for(const Error& e) {
  static const std::set<std::string> usage = {
      "ConfigError", "MissingApiKey", "IoError", "SchemaVersionMismatch"};
  return usage.count(e.kind()) ? 2 : 1;
}

int cmd_assets_build(const AssetsBuildArgs& args) {
  try {
    const PipelineConfig cfg = load_pipeline_config(args.config_path);
    const std::string out_dir =
        args.out_dir.empty() ? cfg.output_dir : args.out_dir;

    const phys::TriMesh mesh = phys::load_obj(args.mesh_path);
    Rng rng(args.seed);
    const PhysicalParams params = phys::sample_physical_params(
        args.category, phys::default_param_table(), rng);
    const phys::TriMesh scaled = phys::scale_mesh_to_size(mesh, params.size_m);

    const std::string mesh_name = args.category + ".obj";
    const urdf::AssetModel asset =
        phys::build_rigid_asset(args.category, scaled, params, mesh_name);

    fs::create_directories(out_dir);
    phys::save_obj(scaled, fs::path(out_dir) / mesh_name);
    const fs::path urdf_path = fs::path(out_dir) / (args.category + ".urdf");
    write_file_atomic(urdf_path, urdf::emit_urdf(asset));
    std::cerr << "wrote " << urdf_path.string() << " (mass "
              << fmt_compact(params.mass_kg) << " kg)\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

int cmd_assets_describe(const AssetsDescribeArgs& args) {
  try {
    const urdf::AssetModel asset = urdf::parse_urdf(read_file(args.urdf_path));
    std::cout << urdf::describe_asset(asset);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

namespace {

llm::LLMRequest build_scene_request(const SceneSpec& scene) {
  const llm::PromptBundle bundle = llm::assemble_prompt(
      scene, llm::default_exemplars(), llm::default_query_text());
  return llm::render_messages(bundle);
}

}  // namespace

int cmd_tasks_generate(const TasksGenerateArgs& args) {
  try {
    PipelineConfig cfg = load_pipeline_config(args.config_path);
    if (!args.cache_dir.empty()) cfg.provider.cache_dir = args.cache_dir;
    if (cfg.provider.cache_dir.empty()) cfg.provider.cache_dir = cfg.cache_dir;
    if (args.provider == "http") cfg.provider.mode = llm::ProviderMode::Http;
    else if (args.provider == "replay") cfg.provider.mode = llm::ProviderMode::Replay;
    else if (!args.provider.empty())
      throw Error("ConfigError", "--provider must be replay or http");

    const std::string manifest_path =
        args.scene_manifest.empty() ? cfg.scene_manifest : args.scene_manifest;
    if (manifest_path.empty())
      throw Error("ConfigError", "no scene manifest given (--scene or config)");
    const SceneManifest manifest = load_scene_manifest(manifest_path);

    const llm::LLMRequest request = build_scene_request(manifest.scene);
    const std::string response = llm::query(request, cfg.provider);

    std::vector<task::TaskSpec> accepted;
    std::set<std::string> seen;
    const auto raw_tasks = task::parse_task_response(response);
    for (const auto& raw : raw_tasks) {
      try {
        task::TaskSpec valid = task::validate_task(raw, manifest.scene);
        if (!seen.insert(valid.task_name).second) {
          std::cerr << "warning: duplicate task \"" << valid.task_name
                    << "\" dropped\n";
          continue;
        }
        accepted.push_back(std::move(valid));
      } catch (const Error& e) {
        std::cerr << "warning: task \"" << raw.task_name
                  << "\" rejected: " << e.what() << "\n";
      }
    }
    if (accepted.empty())
      throw Error("NoTaskAccepted", "no scene-valid task in the response");

    const std::string out_path =
        args.out_path.empty()
            ? (fs::path(cfg.output_dir) / "tasks.json").string()
            : args.out_path;
    task::persist_tasks(accepted, scene_hash(manifest.scene), out_path);
    for (const auto& t : accepted)
      std::cout << t.task_name << " (" << t.subtasks.size() << " subtasks)\n";
    std::cerr << "wrote " << out_path << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

int cmd_tasks_seed_replay(const SeedReplayArgs& args) {
  try {
    PipelineConfig cfg = load_pipeline_config(args.config_path);
    const std::string cache_dir =
        args.cache_dir.empty() ? cfg.cache_dir : args.cache_dir;
    const SceneManifest manifest = load_scene_manifest(args.scene_manifest);
    const std::string response = read_file(args.response_path);
    llm::seed_replay_cache(build_scene_request(manifest.scene), response,
                           cache_dir);
    std::cerr << "seeded replay cache in " << cache_dir << "\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

int cmd_train(const TrainArgs& args) {
  try {
    PipelineConfig cfg = load_pipeline_config(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (args.threads) cfg.ppo.threads = *args.threads;
    const long budget = args.budget ? *args.budget : cfg.ppo.max_env_steps;
    cfg.ppo.max_env_steps = budget;
    cfg.ppo.seed = cfg.seed;
    const std::string out_dir =
        args.out_dir.empty() ? cfg.output_dir : args.out_dir;

    const std::string manifest_path =
        args.scene_manifest.empty() ? cfg.scene_manifest : args.scene_manifest;
    if (manifest_path.empty())
      throw Error("ConfigError", "no scene manifest given (--scene or config)");
    const SceneManifest manifest = load_scene_manifest(manifest_path);
    const task::TaskFile tasks = task::load_tasks(args.tasks_path);
    const std::string hash = scene_hash(manifest.scene);
    if (!tasks.scene_hash.empty() && tasks.scene_hash != hash)
      std::cerr << "warning: task file was generated for a different scene\n";

    json resolved = json::parse(pipeline_config_json(cfg));
    if (args.monolithic) resolved["ablation"] = "monolithic";

    int trained = 0;
    for (const auto& t : tasks.tasks) {
      if (!args.task_name.empty() && t.task_name != args.task_name) continue;
      task::validate_task(t, manifest.scene);

      auto progress = [&](int stage, const ppo::MetricsRecord& rec) {
        if (rec.iteration % 10 != 0 && !rec.eval_success) return;
        std::string eval_part;
        if (rec.eval_success)
          eval_part = " eval " + fmt_compact(*rec.eval_success);
        std::fprintf(stderr,
                     "[%s stage %d] iter %d steps %ld return %.2f success "
                     "%.2f%s\n",
                     t.task_name.c_str(), stage, rec.iteration, rec.env_steps,
                     rec.mean_return, rec.success_rate, eval_part.c_str());
      };

      curriculum::CurriculumRun run =
          args.monolithic
              ? curriculum::train_monolithic(t, manifest.scene, cfg.ppo,
                                             cfg.sim, budget, progress)
              : curriculum::train_sequence(t, manifest.scene, cfg.ppo, cfg.sim,
                                           budget, progress);

      const fs::path run_dir =
          fs::path(out_dir) /
          (args.monolithic ? t.task_name + "-monolithic" : t.task_name);
      curriculum::save_run(run_dir, run, hash, resolved.dump(2) + "\n");
      std::cerr << "saved run to " << run_dir.string() << "\n";
      ++trained;
    }
    if (trained == 0)
      throw Error("NoTaskAccepted", "no task matched " + args.task_name);
    return 0;
  } catch (const SequenceAborted& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

int cmd_eval(const EvalArgs& args) {
  try {
    PipelineConfig cfg = load_pipeline_config(args.config_path);
    if (args.seed) cfg.seed = *args.seed;

    const std::string manifest_path =
        args.scene_manifest.empty() ? cfg.scene_manifest : args.scene_manifest;
    if (manifest_path.empty())
      throw Error("ConfigError", "no scene manifest given (--scene or config)");
    const SceneManifest manifest = load_scene_manifest(manifest_path);

    const curriculum::LoadedRun run = curriculum::load_run(args.run_dir);
    std::vector<const ppo::PolicyNet*> policies;
    std::vector<const rdsl::RewardProgram*> programs;
    std::vector<std::string> names;
    if (run.monolithic) {
      for (const auto& subtask : run.task.subtasks) {
        policies.push_back(&run.policies.front());
        programs.push_back(&subtask.reward);
        names.push_back(subtask.name);
      }
    } else {
      for (size_t i = 0; i < run.policies.size(); ++i) {
        policies.push_back(&run.policies[i]);
        programs.push_back(&run.programs[i]);
        names.push_back(run.subtask_names[i]);
      }
    }

    const curriculum::ChainReport report = curriculum::chain_eval(
        policies, programs, manifest.scene, cfg.sim, args.episodes, cfg.seed);

    write_file_atomic(fs::path(args.run_dir) / "chain_eval.json",
                      curriculum::chain_report_json(report));
    std::cout << curriculum::chain_report_table(report, names);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace skillsim::cli
