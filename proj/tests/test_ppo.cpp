#include <doctest.h>

#include <cmath>
#include <numeric>

#include "skillsim/error.hpp"
#include "skillsim/io_util.hpp"
#include "skillsim/ppo/ppo.hpp"
#include "test_helpers.hpp"

using namespace skillsim;
using namespace skillsim::ppo;

namespace {

SceneSpec microwave_scene() {
  return load_scene_manifest(testutil::data_path("scenes/microwave_scene.json"))
      .scene;
}

rdsl::RewardProgram door_program() {
  return rdsl::parse_reward(
      "(reward (term 1 (dist-ee Microwave.handle))"
      " (term 1 (joint-err Microwave.door-joint 1.0))"
      " (term 1 (grasped Microwave.handle)))"
      " (success (joint-near Microwave.door-joint 1.0 0.05))");
}

// Independent brute-force GAE oracle: A_t = sum_k (gamma*lambda)^k delta_{t+k},
// cutting the sum at episode boundaries.
std::vector<double> gae_oracle(const RolloutBuffer& b, double gamma,
                               double lambda) {
  std::vector<double> adv(b.size(), 0.0);
  for (int e = 0; e < b.num_envs; ++e) {
    for (int t = 0; t < b.horizon; ++t) {
      double acc = 0.0, w = 1.0;
      for (int k = t; k < b.horizon; ++k) {
        const int idx = e * b.horizon + k;
        const double next_v = (k == b.horizon - 1) ? b.bootstrap_values[e]
                                                   : b.values[idx + 1];
        const double nonterm = b.dones[idx] ? 0.0 : 1.0;
        const double delta =
            b.rewards[idx] + gamma * next_v * nonterm - b.values[idx];
        acc += w * delta;
        if (b.dones[idx]) break;
        w *= gamma * lambda;
      }
      adv[e * b.horizon + t] = acc;
    }
  }
  return adv;
}

RolloutBuffer random_buffer(Rng& rng, int envs, int horizon, int obs_dim,
                            int act_dim) {
  RolloutBuffer b;
  b.allocate(envs, horizon, obs_dim, act_dim);
  for (auto& v : b.obs) v = rng.uniform(-1, 1);
  for (auto& v : b.actions) v = rng.uniform(-1, 1);
  for (auto& v : b.logp) v = rng.uniform(-3, 0);
  for (auto& v : b.rewards) v = rng.uniform(-1, 1);
  for (auto& v : b.values) v = rng.uniform(-1, 1);
  for (auto& v : b.bootstrap_values) v = rng.uniform(-1, 1);
  for (auto& v : b.dones) v = rng.uniform() < 0.1 ? 1 : 0;
  return b;
}

}  // namespace

TEST_CASE("gae with lambda 0 collapses to the TD residual") {
  Rng rng(1);
  RolloutBuffer b = random_buffer(rng, 2, 16, 3, 2);
  compute_gae(b, 0.9, 0.0);
  for (int e = 0; e < b.num_envs; ++e) {
    for (int t = 0; t < b.horizon; ++t) {
      const int idx = e * b.horizon + t;
      const double next_v =
          (t == b.horizon - 1) ? b.bootstrap_values[e] : b.values[idx + 1];
      const double nonterm = b.dones[idx] ? 0.0 : 1.0;
      const double delta =
          b.rewards[idx] + 0.9 * next_v * nonterm - b.values[idx];
      CHECK(b.advantages[idx] == doctest::Approx(delta).epsilon(1e-12));
    }
  }
}

TEST_CASE("gae hand recursion on a 3-step episode") {
  RolloutBuffer b;
  b.allocate(1, 3, 1, 1);
  b.rewards = {1.0, 1.0, 1.0};
  b.values = {0.5, 0.5, 0.5};
  b.dones = {0, 0, 1};  // terminal at the last step
  b.bootstrap_values = {0.0};
  const double gamma = 0.9, lambda = 0.8;
  compute_gae(b, gamma, lambda);

  // Hand recursion, back to front.
  const double d2 = 1.0 - 0.5;                     // terminal: no bootstrap
  const double d1 = 1.0 + gamma * 0.5 - 0.5;
  const double d0 = 1.0 + gamma * 0.5 - 0.5;
  const double a2 = d2;
  const double a1 = d1 + gamma * lambda * a2;
  const double a0 = d0 + gamma * lambda * a1;
  CHECK(b.advantages[0] == doctest::Approx(a0).epsilon(1e-15));
  CHECK(b.advantages[1] == doctest::Approx(a1).epsilon(1e-15));
  CHECK(b.advantages[2] == doctest::Approx(a2).epsilon(1e-15));
  CHECK(b.returns[0] == doctest::Approx(a0 + 0.5));
}

TEST_CASE("gae matches the brute-force series oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    RolloutBuffer b = random_buffer(rng, 3, 24, 2, 2);
    const double gamma = rng.uniform(0.8, 1.0);
    const double lambda = rng.uniform(0.0, 1.0);
    compute_gae(b, gamma, lambda);
    const auto oracle = gae_oracle(b, gamma, lambda);
    for (int i = 0; i < b.size(); ++i)
      CHECK(b.advantages[i] == doctest::Approx(oracle[i]).epsilon(1e-10));
  }
}

TEST_CASE("advantage normalization hits zero mean unit std") {
  Rng rng(6);
  RolloutBuffer b = random_buffer(rng, 4, 32, 2, 2);
  compute_gae(b, 0.99, 0.95);
  normalize_advantages(b);
  double mean = 0.0;
  for (double a : b.advantages) mean += a;
  mean /= b.size();
  double var = 0.0;
  for (double a : b.advantages) var += (a - mean) * (a - mean);
  const double std = std::sqrt(var / b.size());
  CHECK(std::abs(mean) <= 1e-6);
  CHECK(std::abs(std - 1.0) <= 1e-6);
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(7);
  for (int trial = 0; trial < 4; ++trial) {
    PolicyNet net(3, 2, {4});
    net.init_params(rng);
    // Keep log-std strictly inside the clamp so the gradient is smooth.
    std::vector<double> obs = {rng.uniform(-1, 1), rng.uniform(-1, 1),
                               rng.uniform(-1, 1)};
    std::vector<double> act = {rng.uniform(-1, 1), rng.uniform(-1, 1)};

    const int n = net.param_count();
    for (int head = 0; head < 3; ++head) {
      std::vector<double> grad(n, 0.0);
      EvalScratch scratch;
      net.forward_sample(obs.data(), act.data(), scratch);
      net.backward_sample(scratch, head == 0 ? 1.0 : 0.0,
                          head == 1 ? 1.0 : 0.0, head == 2 ? 1.0 : 0.0,
                          grad.data());

      const double h = 1e-6;
      double max_rel = 0.0;
      for (int p = 0; p < n; ++p) {
        EvalScratch s2;
        const double saved = net.params()[p];
        net.params()[p] = saved + h;
        const auto up = net.forward_sample(obs.data(), act.data(), s2);
        net.params()[p] = saved - h;
        const auto dn = net.forward_sample(obs.data(), act.data(), s2);
        net.params()[p] = saved;
        const double up_v =
            head == 0 ? up.logp : (head == 1 ? up.entropy : up.value);
        const double dn_v =
            head == 0 ? dn.logp : (head == 1 ? dn.entropy : dn.value);
        const double fd = (up_v - dn_v) / (2 * h);
        const double denom = std::max({std::abs(fd), std::abs(grad[p]), 1e-6});
        max_rel = std::max(max_rel, std::abs(fd - grad[p]) / denom);
      }
      CHECK(max_rel <= 1e-4);
    }
  }
}

TEST_CASE("full ppo loss gradient matches finite differences") {
  Rng rng(8);
  PolicyNet net(3, 2, {4});
  net.init_params(rng);
  RolloutBuffer b = random_buffer(rng, 1, 8, 3, 2);
  compute_gae(b, 0.99, 0.95);
  normalize_advantages(b);
  // Make stored log-probs the current policy's own values shifted slightly
  // so ratios sit near 1, far from the clip kinks.
  EvalScratch scratch;
  for (int i = 0; i < b.size(); ++i) {
    const auto ev = net.forward_sample(b.obs.data() + i * 3,
                                       b.actions.data() + i * 2, scratch);
    b.logp[i] = ev.logp + rng.uniform(-0.01, 0.01);
  }

  PPOConfig cfg;
  std::vector<int> idx(b.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> grad(net.param_count(), 0.0);
  const TrainStats st0 = ppo_loss(net, b, idx, cfg, grad.data(), 1);
  (void)st0;

  auto total_loss = [&] {
    const TrainStats st = ppo_loss(net, b, idx, cfg, nullptr, 1);
    return st.policy_loss + cfg.value_coef * st.value_loss -
           cfg.entropy_coef * st.entropy;
  };

  const double h = 1e-6;
  Rng pick(17);
  double max_rel = 0.0;
  for (int k = 0; k < 200; ++k) {  // spot-check a subset of parameters
    const int p = pick.uniform_int(net.param_count());
    const double saved = net.params()[p];
    net.params()[p] = saved + h;
    const double up = total_loss();
    net.params()[p] = saved - h;
    const double dn = total_loss();
    net.params()[p] = saved;
    const double fd = (up - dn) / (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(grad[p]), 1e-6});
    max_rel = std::max(max_rel, std::abs(fd - grad[p]) / denom);
  }
  CHECK(max_rel <= 1e-4);
}

TEST_CASE("ratio one makes the surrogate the mean advantage") {
  Rng rng(9);
  PolicyNet net(3, 2, {4});
  net.init_params(rng);
  RolloutBuffer b = random_buffer(rng, 1, 16, 3, 2);
  compute_gae(b, 0.99, 0.95);
  normalize_advantages(b);
  EvalScratch scratch;
  double mean_adv = 0.0;
  for (int i = 0; i < b.size(); ++i) {
    b.logp[i] = net.forward_sample(b.obs.data() + i * 3,
                                   b.actions.data() + i * 2, scratch).logp;
    mean_adv += b.advantages[i];
  }
  mean_adv /= b.size();

  PPOConfig cfg;
  std::vector<int> idx(b.size());
  std::iota(idx.begin(), idx.end(), 0);
  const TrainStats st = ppo_loss(net, b, idx, cfg, nullptr, 1);
  CHECK(st.policy_loss == doctest::Approx(-mean_adv).epsilon(1e-9));
  CHECK(st.clip_fraction == 0.0);
  CHECK(std::abs(st.approx_kl) < 1e-12);
}

TEST_CASE("clip saturation zeroes the actor gradient") {
  Rng rng(10);
  PolicyNet net(3, 2, {4});
  net.init_params(rng);
  RolloutBuffer b = random_buffer(rng, 1, 4, 3, 2);
  compute_gae(b, 0.99, 0.95);
  EvalScratch scratch;
  for (int i = 0; i < b.size(); ++i) {
    // rho = exp(logp - logp_old) >> 1 + eps, with positive advantage.
    b.logp[i] = net.forward_sample(b.obs.data() + i * 3,
                                   b.actions.data() + i * 2, scratch).logp - 1.0;
    b.advantages[i] = 1.0;
    b.returns[i] = net.forward_sample(b.obs.data() + i * 3,
                                      b.actions.data() + i * 2, scratch).value;
  }
  PPOConfig cfg;
  cfg.value_coef = 0.0;
  cfg.entropy_coef = 0.0;
  std::vector<int> idx(b.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> grad(net.param_count(), 0.0);
  const TrainStats st = ppo_loss(net, b, idx, cfg, grad.data(), 1);
  CHECK(st.clip_fraction == doctest::Approx(1.0));
  double gnorm = 0.0;
  for (double g : grad) gnorm += g * g;
  CHECK(gnorm == 0.0);  // fully saturated: no gradient flows
}

TEST_CASE("gaussian log density integrates to one (1-D Monte Carlo)") {
  Rng rng(11);
  PolicyNet net(2, 1, {4});
  net.init_params(rng);
  const double obs[2] = {0.3, -0.2};
  EvalScratch scratch;

  // sigma = exp(-0.5); integrate exp(logp) over a wide interval by MC.
  const double lo = -6.0, hi = 6.0;
  const int n = 200000;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double a = rng.uniform(lo, hi);
    const double act[1] = {a};
    acc += std::exp(net.forward_sample(obs, act, scratch).logp);
  }
  const double integral = acc / n * (hi - lo);
  CHECK(std::abs(integral - 1.0) < 0.01);
}

TEST_CASE("non-finite advantages raise NonFiniteLoss") {
  Rng rng(12);
  PolicyNet net(3, 2, {4});
  net.init_params(rng);
  RolloutBuffer b = random_buffer(rng, 1, 4, 3, 2);
  b.advantages.assign(b.size(), std::numeric_limits<double>::quiet_NaN());
  b.returns.assign(b.size(), 0.0);
  PPOConfig cfg;
  std::vector<int> idx(b.size());
  std::iota(idx.begin(), idx.end(), 0);
  CHECK_THROWS_AS(ppo_loss(net, b, idx, cfg, nullptr, 1), NonFiniteLoss);
}

TEST_CASE("collect_rollouts shapes, episode boundaries, determinism") {
  const SceneSpec scene = microwave_scene();
  const auto program = door_program();
  PolicyNet policy(sim::kObsDim, sim::kActionDim);
  Rng prng(13);
  policy.init_params(prng);

  auto collect_once = [&](uint64_t seed) {
    sim::SimConfig sim_cfg;
    sim::Simulator proto(scene, sim_cfg);
    proto.bind_task(program);
    std::vector<EnvSlot> envs;
    for (int e = 0; e < 2; ++e) {
      envs.emplace_back(proto, seed + e, sim::InitDistribution{sim::DefaultInit{}});
      envs.back().sim.reset(envs.back().rng, envs.back().init);
    }
    RolloutBuffer buffer;
    collect_rollouts(policy, envs, program, 3, buffer, nullptr, 1);
    return buffer;
  };

  const RolloutBuffer a = collect_once(100);
  CHECK(a.size() == 6);
  CHECK(a.obs.size() == 6u * sim::kObsDim);

  const RolloutBuffer b = collect_once(100);
  CHECK(a.obs == b.obs);
  CHECK(a.actions == b.actions);
  CHECK(a.logp == b.logp);
  CHECK(a.rewards == b.rewards);
  CHECK(a.bootstrap_values == b.bootstrap_values);
}

TEST_CASE("episode cap triggers done and auto-reset") {
  const SceneSpec scene = microwave_scene();
  const auto program = door_program();
  PolicyNet policy(sim::kObsDim, sim::kActionDim);
  Rng prng(14);
  policy.init_params(prng);

  sim::SimConfig sim_cfg;
  sim::Simulator proto(scene, sim_cfg);
  proto.bind_task(program);
  std::vector<EnvSlot> envs;
  envs.emplace_back(proto, 5, sim::InitDistribution{sim::DefaultInit{}});
  envs.back().sim.reset(envs.back().rng, envs.back().init);

  RolloutBuffer buffer;
  const RolloutStats stats = collect_rollouts(policy, envs, program,
                                              sim::kEpisodeStepCap + 10, buffer,
                                              nullptr, 1);
  CHECK(stats.episodes >= 1);
  CHECK(buffer.dones[sim::kEpisodeStepCap - 1] == 1);
  // After the cap the env was reset: time restarted.
  CHECK(envs[0].ep_steps == 10);
}

TEST_CASE("rollout collection and updates are thread-count invariant") {
  const SceneSpec scene = microwave_scene();
  const auto program = door_program();

  auto train_once = [&](int threads) {
    PPOConfig cfg;
    cfg.num_envs = 4;
    cfg.horizon = 16;
    cfg.threads = threads;
    cfg.seed = 21;
    PolicyNet policy(sim::kObsDim, sim::kActionDim);
    Rng prng(cfg.seed);
    policy.init_params(prng);

    sim::SimConfig sim_cfg;
    sim::Simulator proto(scene, sim_cfg);
    proto.bind_task(program);
    std::vector<EnvSlot> envs;
    for (int e = 0; e < cfg.num_envs; ++e) {
      envs.emplace_back(proto, 1000 + e, sim::InitDistribution{sim::DefaultInit{}});
      envs.back().sim.reset(envs.back().rng, envs.back().init);
    }
    RolloutBuffer buffer;
    collect_rollouts(policy, envs, program, cfg.horizon, buffer, nullptr,
                     threads);
    compute_gae(buffer, cfg.gamma, cfg.gae_lambda);
    normalize_advantages(buffer);
    AdamOptimizer opt(policy.param_count(), cfg.learning_rate);
    Rng shuffle_rng(99);
    ppo_update(policy, buffer, cfg, opt, shuffle_rng);
    return policy.params();
  };

  const auto serial = train_once(1);
  const auto parallel = train_once(2);
  REQUIRE(serial.size() == parallel.size());
  for (size_t i = 0; i < serial.size(); ++i) CHECK(serial[i] == parallel[i]);
}

TEST_CASE("constant reward exhausts the budget without success") {
  const SceneSpec scene = microwave_scene();
  // Weight zero: reward identically zero; success unreachable in practice.
  const auto program = rdsl::parse_reward(
      "(reward (term 0 (dist-ee Microwave.handle)))"
      " (success (joint-near Microwave.door-joint 1.0 0.001))");
  PPOConfig cfg;
  cfg.num_envs = 2;
  cfg.horizon = 32;
  cfg.max_env_steps = 512;
  cfg.eval_episodes = 5;
  cfg.seed = 3;
  const auto result = ppo::train_subtask(scene, program,
                                         sim::DefaultInit{}, cfg,
                                         sim::SimConfig{});
  CHECK(result.budget_exhausted);
  CHECK_FALSE(result.converged);
  CHECK(result.final_eval_success <= 0.2);
}

TEST_CASE("train loop metrics are sane and deterministic") {
  const SceneSpec scene = microwave_scene();
  const auto program = door_program();
  PPOConfig cfg;
  cfg.num_envs = 2;
  cfg.horizon = 32;
  cfg.max_env_steps = 256;
  cfg.eval_episodes = 2;
  cfg.seed = 8;

  auto run = [&] {
    return ppo::train_subtask(scene, program, sim::DefaultInit{}, cfg,
                              sim::SimConfig{});
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.policy.params() == b.policy.params());
  CHECK(metrics_jsonl(a.metrics) == metrics_jsonl(b.metrics));
  for (const auto& rec : a.metrics) {
    CHECK(rec.stats.clip_fraction >= 0.0);
    CHECK(rec.stats.clip_fraction <= 1.0);
    CHECK(std::isfinite(rec.stats.approx_kl));
  }
}

TEST_CASE("checkpoint round trip preserves every parameter bit") {
  Rng rng(15);
  PolicyNet policy(sim::kObsDim, sim::kActionDim);
  policy.init_params(rng);
  const auto dir = testutil::temp_dir("ckpt");

  save_policy(dir / "p.bin", policy, R"({"subtask":"door"})");
  const LoadedPolicy loaded = load_policy(dir / "p.bin");
  CHECK(loaded.policy.params() == policy.params());
  CHECK(loaded.meta_json.find("door") != std::string::npos);

  // Same payload twice: identical bytes on disk.
  save_policy(dir / "q.bin", policy, R"({"subtask":"door"})");
  CHECK(read_file(dir / "p.bin") == read_file(dir / "q.bin"));

  write_file_atomic(dir / "junk.bin", "not a checkpoint at all");
  CHECK_THROWS_AS(load_policy(dir / "junk.bin"), SchemaVersionMismatch);
}

TEST_CASE("action_to_command scales by per-step caps") {
  sim::SimConfig cfg;
  const double a[7] = {1.0, -1.0, 0.5, 0.0, 1.0, 0.0, -0.7};
  const auto cmd = action_to_command(a, cfg);
  CHECK(cmd.delta_pos.x() == doctest::Approx(cfg.max_ee_speed * cfg.dt));
  CHECK(cmd.delta_pos.y() == doctest::Approx(-cfg.max_ee_speed * cfg.dt));
  CHECK(cmd.delta_rot.y() == doctest::Approx(cfg.max_ee_ang_speed * cfg.dt));
  CHECK(cmd.gripper_cmd == doctest::Approx(-0.7));
}
