#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "skillsim/ppo/net.hpp"
#include "skillsim/rdsl/reward.hpp"
#include "skillsim/scene.hpp"
#include "skillsim/sim/simulator.hpp"

namespace skillsim::ppo {

struct PPOConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double learning_rate = 3e-4;
  int epochs = 4;
  int minibatches = 4;
  double entropy_coef = 0.01;
  double value_coef = 0.5;
  int num_envs = 16;
  int horizon = 128;
  long max_env_steps = 300000;  // budget
  double grad_clip = 0.5;
  uint64_t seed = 0;
  int threads = 1;  // 1 = deterministic single-threaded mode; results are
                    // thread-count invariant by construction either way
  int eval_episodes = 50;
  double eval_success_threshold = 0.9;
  int eval_interval = 5;        // iterations between evaluations
  int min_terminal_states = 200;
  size_t terminal_capacity = 1000;
};

// Fixed-horizon batch of transitions, indexed (env * horizon + t).
struct RolloutBuffer {
  int num_envs = 0, horizon = 0, obs_dim = 0, act_dim = 0;
  std::vector<double> obs;        // n*h*obs_dim
  std::vector<double> actions;    // n*h*act_dim
  std::vector<double> logp;       // n*h
  std::vector<double> rewards;    // n*h
  std::vector<double> values;     // n*h
  std::vector<uint8_t> dones;     // n*h
  std::vector<uint8_t> successes; // n*h
  std::vector<double> bootstrap_values;  // n
  std::vector<double> advantages; // n*h, filled by compute_gae
  std::vector<double> returns;    // n*h

  int size() const { return num_envs * horizon; }
  void allocate(int n, int h, int od, int ad);
};

// One environment instance plus its private random stream and episode
// bookkeeping; rollout workers never share mutable state.
struct EnvSlot {
  sim::Simulator sim;
  Rng rng;
  sim::InitDistribution init;
  EvalScratch scratch;
  int ep_steps = 0;
  double ep_return = 0.0;

  EnvSlot(sim::Simulator s, uint64_t seed, sim::InitDistribution i)
      : sim(std::move(s)), rng(seed), init(i) {}
};

// Scale a raw policy action into a simulator command (per-step caps).
sim::ActionCommand action_to_command(const double* action,
                                     const sim::SimConfig& cfg);

struct RolloutStats {
  int episodes = 0;
  int successes = 0;
  double return_sum = 0.0;
};

// Step every env `horizon` times with the stochastic policy; episodes end
// on check_success or the 256-step cap and auto-reset. Successful terminal
// states are pushed into `terminals` when provided.
RolloutStats collect_rollouts(const PolicyNet& policy,
                              std::vector<EnvSlot>& envs,
                              const rdsl::RewardProgram& program, int horizon,
                              RolloutBuffer& buffer,
                              sim::TerminalBuffer* terminals, int threads);

// GAE(gamma, lambda): delta_t = r_t + gamma*V(s_{t+1})*(1-done_t) - V(s_t),
// A_t = delta_t + gamma*lambda*(1-done_t)*A_{t+1}; returns = A + V.
void compute_gae(RolloutBuffer& buffer, double gamma, double gae_lambda);

// Normalize advantages to zero mean / unit std over the whole batch.
void normalize_advantages(RolloutBuffer& buffer);

struct TrainStats {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;
  double clip_fraction = 0.0;
};

// Batch PPO loss at the current parameters; accumulates the gradient of
//   policy_loss + value_coef*value_loss - entropy_coef*entropy
// into `grad` when non-null. Exposed for gradient verification.
TrainStats ppo_loss(const PolicyNet& policy, const RolloutBuffer& buffer,
                    const std::vector<int>& indices, const PPOConfig& cfg,
                    double* grad, int threads = 1);

class AdamOptimizer {
 public:
  AdamOptimizer(int n, double lr) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}
  void step(std::vector<double>& params, const std::vector<double>& grad);

 private:
  double lr_;
  double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::vector<double> m_, v_;
};

// Epochs x minibatches of clipped-surrogate updates with global grad-norm
// clipping. Throws NonFiniteLoss with diagnostics on NaN/Inf.
TrainStats ppo_update(PolicyNet& policy, const RolloutBuffer& buffer,
                      const PPOConfig& cfg, AdamOptimizer& opt,
                      Rng& shuffle_rng);

struct MetricsRecord {
  int iteration = 0;
  long env_steps = 0;
  double mean_return = 0.0;
  double success_rate = 0.0;
  std::optional<double> eval_success;
  TrainStats stats;
};

std::string metrics_jsonl(const std::vector<MetricsRecord>& records);

struct TrainResult {
  PolicyNet policy;
  sim::TerminalBuffer terminals;
  std::vector<MetricsRecord> metrics;
  bool budget_exhausted = false;
  bool converged = false;
  double final_eval_success = 0.0;
  long env_steps = 0;            // steps consumed (incl. terminal top-up)
  long steps_to_converge = -1;   // env steps when eval first passed threshold

  TrainResult(PolicyNet p, size_t terminal_capacity)
      : policy(std::move(p)), terminals(terminal_capacity) {}
};

// Deterministic-mean-action evaluation: fraction of episodes whose success
// predicate fires within the step cap.
double eval_success_rate(const PolicyNet& policy, const SceneSpec& scene,
                         const rdsl::RewardProgram& program,
                         const sim::InitDistribution& init,
                         const sim::SimConfig& sim_cfg, int episodes,
                         uint64_t seed);

// collect -> GAE -> update until eval success >= threshold or the step
// budget runs out; keeps >= min_terminal_states successful terminals.
TrainResult train_subtask(
    const SceneSpec& scene, const rdsl::RewardProgram& program,
    const sim::InitDistribution& init, const PPOConfig& cfg,
    const sim::SimConfig& sim_cfg,
    const std::function<void(const MetricsRecord&)>& on_metrics = {});

// Checkpoint container: magic, schema version, JSON header, raw doubles.
void save_policy(const std::filesystem::path& path, const PolicyNet& policy,
                 const std::string& meta_json);
struct LoadedPolicy {
  PolicyNet policy;
  std::string meta_json;
};
LoadedPolicy load_policy(const std::filesystem::path& path);

}  // namespace skillsim::ppo
