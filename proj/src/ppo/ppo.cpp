#include "skillsim/ppo/ppo.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <thread>

#include "skillsim/error.hpp"
#include "skillsim/io_util.hpp"

namespace skillsim::ppo {

using nlohmann::json;

namespace {

// Gradient accumulation uses a fixed chunk count so reduction order (and
// therefore every bit of the result) is independent of the thread count.
constexpr int kGradChunks = 8;

void run_workers(int jobs, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || jobs <= 1) {
    for (int j = 0; j < jobs; ++j) fn(j);
    return;
  }
  const int workers = std::min(threads, jobs);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int j = w; j < jobs; j += workers) fn(j);
    });
  }
  for (auto& t : pool) t.join();
}

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  uint64_t x = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  return x;
}

}  // namespace

void RolloutBuffer::allocate(int n, int h, int od, int ad) {
  num_envs = n;
  horizon = h;
  obs_dim = od;
  act_dim = ad;
  const int total = n * h;
  obs.assign(static_cast<size_t>(total) * od, 0.0);
  actions.assign(static_cast<size_t>(total) * ad, 0.0);
  logp.assign(total, 0.0);
  rewards.assign(total, 0.0);
  values.assign(total, 0.0);
  dones.assign(total, 0);
  successes.assign(total, 0);
  bootstrap_values.assign(n, 0.0);
  advantages.assign(total, 0.0);
  returns.assign(total, 0.0);
}

sim::ActionCommand action_to_command(const double* action,
                                     const sim::SimConfig& cfg) {
  sim::ActionCommand cmd;
  const double cap_p = cfg.max_ee_speed * cfg.dt;
  const double cap_r = cfg.max_ee_ang_speed * cfg.dt;
  cmd.delta_pos = Vec3(action[0], action[1], action[2]) * cap_p;
  cmd.delta_rot = Vec3(action[3], action[4], action[5]) * cap_r;
  cmd.gripper_cmd = action[6];
  return cmd;
}

RolloutStats collect_rollouts(const PolicyNet& policy,
                              std::vector<EnvSlot>& envs,
                              const rdsl::RewardProgram& program, int horizon,
                              RolloutBuffer& buffer,
                              sim::TerminalBuffer* terminals, int threads) {
  const int n = static_cast<int>(envs.size());
  buffer.allocate(n, horizon, sim::kObsDim, policy.act_dim());

  struct PerEnv {
    std::vector<sim::SimState> terminal_states;
    int episodes = 0;
    int successes = 0;
    double return_sum = 0.0;
  };
  std::vector<PerEnv> results(n);

  run_workers(n, threads, [&](int e) {
    EnvSlot& slot = envs[e];
    PerEnv& res = results[e];
    std::vector<double> action(policy.act_dim());
    for (int t = 0; t < horizon; ++t) {
      const int idx = e * horizon + t;
      const std::vector<double> obs = slot.sim.observe();
      std::copy(obs.begin(), obs.end(),
                buffer.obs.begin() + static_cast<size_t>(idx) * buffer.obs_dim);

      double logp = 0.0;
      policy.sample_action(obs.data(), slot.rng, action.data(), &logp,
                           slot.scratch);
      std::copy(action.begin(), action.end(),
                buffer.actions.begin() +
                    static_cast<size_t>(idx) * buffer.act_dim);
      buffer.logp[idx] = logp;
      buffer.values[idx] = policy.value(obs.data(), slot.scratch);

      slot.sim.step(action_to_command(action.data(), slot.sim.config()));
      const auto view = slot.sim.view();
      const double reward = rdsl::evaluate(program, view);
      const bool success = rdsl::check_success(program, view);
      ++slot.ep_steps;
      const bool done = success || slot.ep_steps >= sim::kEpisodeStepCap;

      buffer.rewards[idx] = reward;
      buffer.dones[idx] = done ? 1 : 0;
      buffer.successes[idx] = success ? 1 : 0;
      slot.ep_return += reward;

      if (success) res.terminal_states.push_back(slot.sim.state());
      if (done) {
        ++res.episodes;
        if (success) ++res.successes;
        res.return_sum += slot.ep_return;
        slot.sim.reset(slot.rng, slot.init);
        slot.ep_steps = 0;
        slot.ep_return = 0.0;
      }
    }
    const std::vector<double> last_obs = slot.sim.observe();
    buffer.bootstrap_values[e] = policy.value(last_obs.data(), slot.scratch);
  });

  RolloutStats stats;
  for (auto& res : results) {
    stats.episodes += res.episodes;
    stats.successes += res.successes;
    stats.return_sum += res.return_sum;
    if (terminals)
      for (auto& s : res.terminal_states) terminals->push(std::move(s));
  }
  return stats;
}

void compute_gae(RolloutBuffer& buffer, double gamma, double gae_lambda) {
  for (int e = 0; e < buffer.num_envs; ++e) {
    double running = 0.0;
    for (int t = buffer.horizon - 1; t >= 0; --t) {
      const int idx = e * buffer.horizon + t;
      const double nonterminal = buffer.dones[idx] ? 0.0 : 1.0;
      const double next_value = (t == buffer.horizon - 1)
                                    ? buffer.bootstrap_values[e]
                                    : buffer.values[idx + 1];
      const double delta = buffer.rewards[idx] +
                           gamma * next_value * nonterminal -
                           buffer.values[idx];
      running = delta + gamma * gae_lambda * nonterminal * running;
      buffer.advantages[idx] = running;
      buffer.returns[idx] = running + buffer.values[idx];
    }
  }
}

void normalize_advantages(RolloutBuffer& buffer) {
  const int total = buffer.size();
  double mean = 0.0;
  for (int i = 0; i < total; ++i) mean += buffer.advantages[i];
  mean /= total;
  double var = 0.0;
  for (int i = 0; i < total; ++i) {
    const double d = buffer.advantages[i] - mean;
    var += d * d;
  }
  const double std = std::sqrt(var / total);
  for (int i = 0; i < total; ++i)
    buffer.advantages[i] = (buffer.advantages[i] - mean) / (std + 1e-8);
}

TrainStats ppo_loss(const PolicyNet& policy, const RolloutBuffer& buffer,
                    const std::vector<int>& indices, const PPOConfig& cfg,
                    double* grad, int threads) {
  const int batch = static_cast<int>(indices.size());
  const double inv_batch = 1.0 / batch;
  const int n_params = policy.param_count();
  const int chunks = std::min(kGradChunks, batch);

  struct ChunkResult {
    std::vector<double> grad;
    double policy_loss = 0.0, value_loss = 0.0, entropy = 0.0;
    double kl = 0.0, clipped = 0.0;
  };
  std::vector<ChunkResult> partial(chunks);

  run_workers(chunks, threads, [&](int c) {
    ChunkResult& res = partial[c];
    if (grad) res.grad.assign(n_params, 0.0);
    EvalScratch scratch;
    const int begin = static_cast<int>(static_cast<long>(batch) * c / chunks);
    const int end = static_cast<int>(static_cast<long>(batch) * (c + 1) / chunks);
    for (int k = begin; k < end; ++k) {
      const int i = indices[k];
      const double* obs = buffer.obs.data() + static_cast<size_t>(i) * buffer.obs_dim;
      const double* act =
          buffer.actions.data() + static_cast<size_t>(i) * buffer.act_dim;
      const auto ev = policy.forward_sample(obs, act, scratch);

      const double adv = buffer.advantages[i];
      const double ratio = std::exp(ev.logp - buffer.logp[i]);
      const double clipped_ratio =
          std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
      const double unclipped = ratio * adv;
      const double clipped = clipped_ratio * adv;
      const bool use_unclipped = unclipped <= clipped;
      const double surrogate = use_unclipped ? unclipped : clipped;

      const double verr = ev.value - buffer.returns[i];
      res.policy_loss += -surrogate;
      res.value_loss += verr * verr;
      res.entropy += ev.entropy;
      res.kl += buffer.logp[i] - ev.logp;
      res.clipped += std::abs(ratio - 1.0) > cfg.clip_eps ? 1.0 : 0.0;

      if (grad) {
        // d(-surrogate)/dlogp = -ratio*adv on the unclipped branch, else 0.
        const double d_logp = use_unclipped ? -unclipped * inv_batch : 0.0;
        const double d_value = cfg.value_coef * 2.0 * verr * inv_batch;
        const double d_entropy = -cfg.entropy_coef * inv_batch;
        policy.backward_sample(scratch, d_logp, d_entropy, d_value,
                               res.grad.data());
      }
    }
  });

  TrainStats stats;
  for (int c = 0; c < chunks; ++c) {
    stats.policy_loss += partial[c].policy_loss;
    stats.value_loss += partial[c].value_loss;
    stats.entropy += partial[c].entropy;
    stats.approx_kl += partial[c].kl;
    stats.clip_fraction += partial[c].clipped;
    if (grad)
      for (int p = 0; p < n_params; ++p) grad[p] += partial[c].grad[p];
  }
  stats.policy_loss *= inv_batch;
  stats.value_loss *= inv_batch;
  stats.entropy *= inv_batch;
  stats.approx_kl *= inv_batch;
  stats.clip_fraction *= inv_batch;

  const double total = stats.policy_loss + cfg.value_coef * stats.value_loss -
                       cfg.entropy_coef * stats.entropy;
  if (!std::isfinite(total))
    throw NonFiniteLoss("policy_loss=" + fmt_compact(stats.policy_loss) +
                        " value_loss=" + fmt_compact(stats.value_loss) +
                        " entropy=" + fmt_compact(stats.entropy) +
                        " kl=" + fmt_compact(stats.approx_kl));
  return stats;
}

void AdamOptimizer::step(std::vector<double>& params,
                         const std::vector<double>& grad) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (size_t i = 0; i < params.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
  }
}

TrainStats ppo_update(PolicyNet& policy, const RolloutBuffer& buffer,
                      const PPOConfig& cfg, AdamOptimizer& opt,
                      Rng& shuffle_rng) {
  const int total = buffer.size();
  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);

  std::vector<double> grad(policy.param_count());
  TrainStats acc;
  int updates = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    for (int mb = 0; mb < cfg.minibatches; ++mb) {
      const int begin = static_cast<int>(static_cast<long>(total) * mb / cfg.minibatches);
      const int end =
          static_cast<int>(static_cast<long>(total) * (mb + 1) / cfg.minibatches);
      std::vector<int> batch(order.begin() + begin, order.begin() + end);

      std::fill(grad.begin(), grad.end(), 0.0);
      const TrainStats stats =
          ppo_loss(policy, buffer, batch, cfg, grad.data(), cfg.threads);

      double norm_sq = 0.0;
      for (double g : grad) norm_sq += g * g;
      const double norm = std::sqrt(norm_sq);
      if (norm > cfg.grad_clip)
        for (double& g : grad) g *= cfg.grad_clip / norm;

      opt.step(policy.params(), grad);

      acc.policy_loss += stats.policy_loss;
      acc.value_loss += stats.value_loss;
      acc.entropy += stats.entropy;
      acc.approx_kl += stats.approx_kl;
      acc.clip_fraction += stats.clip_fraction;
      ++updates;
    }
  }
  acc.policy_loss /= updates;
  acc.value_loss /= updates;
  acc.entropy /= updates;
  acc.approx_kl /= updates;
  acc.clip_fraction /= updates;
  return acc;
}

double eval_success_rate(const PolicyNet& policy, const SceneSpec& scene,
                         const rdsl::RewardProgram& program,
                         const sim::InitDistribution& init,
                         const sim::SimConfig& sim_cfg, int episodes,
                         uint64_t seed) {
  sim::Simulator sim(scene, sim_cfg);
  sim.bind_task(program);
  Rng rng(seed);
  EvalScratch scratch;
  std::vector<double> action(policy.act_dim());

  int successes = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    sim.reset(rng, init);
    for (int t = 0; t < sim::kEpisodeStepCap; ++t) {
      const std::vector<double> obs = sim.observe();
      policy.mean_action(obs.data(), action.data(), scratch);
      sim.step(action_to_command(action.data(), sim.config()));
      if (rdsl::check_success(program, sim.view())) {
        ++successes;
        break;
      }
    }
  }
  return static_cast<double>(successes) / episodes;
}

std::string metrics_jsonl(const std::vector<MetricsRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    json line;
    line["iteration"] = r.iteration;
    line["env_steps"] = r.env_steps;
    line["mean_return"] = r.mean_return;
    line["success_rate"] = r.success_rate;
    if (r.eval_success)
      line["eval_success"] = *r.eval_success;
    else
      line["eval_success"] = nullptr;
    line["policy_loss"] = r.stats.policy_loss;
    line["value_loss"] = r.stats.value_loss;
    line["entropy"] = r.stats.entropy;
    line["approx_kl"] = r.stats.approx_kl;
    line["clip_fraction"] = r.stats.clip_fraction;
    out += line.dump() + "\n";
  }
  return out;
}

TrainResult train_subtask(
    const SceneSpec& scene, const rdsl::RewardProgram& program,
    const sim::InitDistribution& init, const PPOConfig& cfg,
    const sim::SimConfig& sim_cfg,
    const std::function<void(const MetricsRecord&)>& on_metrics) {
  PolicyNet policy(sim::kObsDim, sim::kActionDim);
  Rng init_rng(mix_seed(cfg.seed, 0));
  policy.init_params(init_rng);

  TrainResult result(policy, cfg.terminal_capacity);

  sim::Simulator proto(scene, sim_cfg);
  proto.bind_task(program);
  std::vector<EnvSlot> envs;
  envs.reserve(cfg.num_envs);
  for (int e = 0; e < cfg.num_envs; ++e) {
    envs.emplace_back(proto, mix_seed(cfg.seed, 100 + e), init);
    envs.back().sim.reset(envs.back().rng, init);
  }

  AdamOptimizer opt(policy.param_count(), cfg.learning_rate);
  Rng shuffle_rng(mix_seed(cfg.seed, 1));
  const uint64_t eval_seed = mix_seed(cfg.seed, 2);

  RolloutBuffer buffer;
  const long batch_steps = static_cast<long>(cfg.num_envs) * cfg.horizon;

  std::vector<double> best_params = policy.params();
  double best_eval = -1.0;
  double last_success_rate = 0.0;
  int iteration = 0;

  while (true) {
    if (result.env_steps + batch_steps > cfg.max_env_steps) {
      result.budget_exhausted = true;
      break;
    }
    ++iteration;
    const RolloutStats rstats = collect_rollouts(
        policy, envs, program, cfg.horizon, buffer, &result.terminals,
        cfg.threads);
    result.env_steps += batch_steps;

    compute_gae(buffer, cfg.gamma, cfg.gae_lambda);
    normalize_advantages(buffer);
    const TrainStats tstats = ppo_update(policy, buffer, cfg, opt, shuffle_rng);

    MetricsRecord rec;
    rec.iteration = iteration;
    rec.env_steps = result.env_steps;
    rec.mean_return =
        rstats.episodes > 0 ? rstats.return_sum / rstats.episodes : 0.0;
    if (rstats.episodes > 0)
      last_success_rate =
          static_cast<double>(rstats.successes) / rstats.episodes;
    rec.success_rate = last_success_rate;
    rec.stats = tstats;

    if (iteration % cfg.eval_interval == 0) {
      const double es =
          eval_success_rate(policy, scene, program, init, sim_cfg,
                            cfg.eval_episodes, eval_seed);
      rec.eval_success = es;
      if (es > best_eval) {
        best_eval = es;
        best_params = policy.params();
      }
      if (es >= cfg.eval_success_threshold) {
        result.converged = true;
        result.steps_to_converge = result.env_steps;
      }
    }
    result.metrics.push_back(rec);
    if (on_metrics) on_metrics(rec);
    if (result.converged) break;
  }

  if (!result.converged && best_eval >= 0.0) policy.params() = best_params;

  result.final_eval_success = eval_success_rate(
      policy, scene, program, init, sim_cfg, cfg.eval_episodes, eval_seed);
  if (!result.converged &&
      result.final_eval_success >= cfg.eval_success_threshold) {
    result.converged = true;
    result.steps_to_converge = result.env_steps;
  }

  // Top up the terminal buffer with stochastic episodes of the final policy
  // so the next curriculum stage has enough reset seeds. These episodes
  // consume budget like any other env steps.
  if (result.terminals.size() <
      static_cast<size_t>(cfg.min_terminal_states)) {
    sim::Simulator sim(scene, sim_cfg);
    sim.bind_task(program);
    Rng fill_rng(mix_seed(cfg.seed, 3));
    EvalScratch scratch;
    std::vector<double> action(policy.act_dim());
    const int max_fill_episodes = 2000;
    for (int ep = 0; ep < max_fill_episodes &&
                     result.env_steps < cfg.max_env_steps &&
                     result.terminals.size() <
                         static_cast<size_t>(cfg.min_terminal_states);
         ++ep) {
      sim.reset(fill_rng, init);
      for (int t = 0;
           t < sim::kEpisodeStepCap && result.env_steps < cfg.max_env_steps;
           ++t) {
        const std::vector<double> obs = sim.observe();
        double logp = 0.0;
        policy.sample_action(obs.data(), fill_rng, action.data(), &logp,
                             scratch);
        sim.step(action_to_command(action.data(), sim.config()));
        ++result.env_steps;
        if (rdsl::check_success(program, sim.view())) {
          result.terminals.push(sim.state());
          break;
        }
      }
    }
  }

  result.policy = std::move(policy);
  return result;
}

namespace {
constexpr char kCheckpointMagic[8] = {'S', 'K', 'S', 'M', 'P', 'O', 'L', '1'};
constexpr uint32_t kCheckpointVersion = 1;

void append_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void append_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
uint32_t read_u32(const std::string& s, size_t off) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<uint32_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
  return v;
}
uint64_t read_u64(const std::string& s, size_t off) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<uint64_t>(static_cast<unsigned char>(s[off + i])) << (8 * i);
  return v;
}
}  // namespace

void save_policy(const std::filesystem::path& path, const PolicyNet& policy,
                 const std::string& meta_json) {
  json header;
  header["obs_dim"] = policy.obs_dim();
  header["act_dim"] = policy.act_dim();
  header["hidden"] = policy.hidden_sizes();
  header["meta"] = meta_json.empty() ? json(nullptr) : json::parse(meta_json);
  const std::string header_text = header.dump();

  std::string blob(kCheckpointMagic, sizeof(kCheckpointMagic));
  append_u32(blob, kCheckpointVersion);
  append_u32(blob, static_cast<uint32_t>(header_text.size()));
  blob += header_text;
  const auto& params = policy.params();
  append_u64(blob, params.size());
  const size_t data_off = blob.size();
  blob.resize(blob.size() + params.size() * sizeof(double));
  std::memcpy(blob.data() + data_off, params.data(),
              params.size() * sizeof(double));
  write_file_atomic(path, blob);
}

LoadedPolicy load_policy(const std::filesystem::path& path) {
  const std::string blob = read_file(path);
  if (blob.size() < 16 ||
      std::memcmp(blob.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0)
    throw SchemaVersionMismatch("not a policy checkpoint: " + path.string());
  if (read_u32(blob, 8) != kCheckpointVersion)
    throw SchemaVersionMismatch("checkpoint " + path.string() +
                                " has unsupported version");
  const uint32_t header_len = read_u32(blob, 12);
  const json header = json::parse(blob.substr(16, header_len));
  size_t off = 16 + header_len;
  const uint64_t count = read_u64(blob, off);
  off += 8;
  if (blob.size() < off + count * sizeof(double))
    throw SchemaVersionMismatch("checkpoint " + path.string() + " truncated");

  PolicyNet policy(header.at("obs_dim").get<int>(),
                   header.at("act_dim").get<int>(),
                   header.at("hidden").get<std::vector<int>>());
  if (policy.params().size() != count)
    throw SchemaVersionMismatch("checkpoint parameter count mismatch");
  std::memcpy(policy.params().data(), blob.data() + off,
              count * sizeof(double));

  LoadedPolicy out{std::move(policy), ""};
  if (!header.at("meta").is_null()) out.meta_json = header.at("meta").dump();
  return out;
}

}  // namespace skillsim::ppo
