#pragma once

#include <cstdint>
#include <vector>

#include "skillsim/rng.hpp"

namespace skillsim::ppo {

// Fully connected net with tanh hidden layers and a linear output layer.
// Parameters live in an external flat vector: per layer, row-major weight
// matrix (out x in) followed by the bias.
struct MlpNet {
  std::vector<int> sizes;  // {in, hidden..., out}

  explicit MlpNet(std::vector<int> layer_sizes) : sizes(std::move(layer_sizes)) {}

  int param_count() const {
    int n = 0;
    for (size_t l = 0; l + 1 < sizes.size(); ++l)
      n += sizes[l + 1] * sizes[l] + sizes[l + 1];
    return n;
  }

  // Post-activation values per layer; acts[0] is the input, acts.back() is
  // the linear output. Reused across calls to avoid allocation.
  struct Cache {
    std::vector<std::vector<double>> acts;
  };

  void forward(const double* params, const double* input, Cache& cache) const;

  // Reverse pass. `grad_out` is dL/d(output); accumulates dL/dparams into
  // `grad_params` (same layout as params). Requires the cache of the
  // matching forward call.
  void backward(const double* params, const Cache& cache,
                const double* grad_out, double* grad_params) const;

  // Gaussian init scaled by 1/sqrt(fan_in); `out_scale` shrinks the output
  // layer (small initial policy head).
  void init(double* params, Rng& rng, double out_scale = 1.0) const;
};

// Per-caller working memory so a shared const PolicyNet can be evaluated
// from many threads at once.
struct EvalScratch {
  MlpNet::Cache actor_cache, critic_cache;
  std::vector<double> z, mean;
  std::vector<uint8_t> interior;
};

// Diagonal-Gaussian actor plus value critic over one flat parameter vector:
// [actor MLP | per-dim log-std | critic MLP]. The action mean is
// tanh-squashed; log-std is state independent and clamped to [-5, 2].
class PolicyNet {
 public:
  PolicyNet(int obs_dim, int act_dim, std::vector<int> hidden = {64, 64});

  int obs_dim() const { return obs_dim_; }
  int act_dim() const { return act_dim_; }
  const std::vector<int>& hidden_sizes() const { return hidden_; }
  int param_count() const { return static_cast<int>(params_.size()); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  void init_params(Rng& rng);

  // Deterministic (mean) action, tanh-squashed into (-1, 1)^act_dim.
  void mean_action(const double* obs, double* action, EvalScratch& s) const;

  // Stochastic action a = mean + sigma * z with its log density.
  void sample_action(const double* obs, Rng& rng, double* action, double* logp,
                     EvalScratch& s) const;

  double value(const double* obs, EvalScratch& s) const;

  struct SampleEval {
    double logp = 0.0;
    double entropy = 0.0;
    double value = 0.0;
  };

  // Log-prob of `action`, entropy, and value at `obs`; fills the scratch so
  // backward_sample can run without a second forward pass.
  SampleEval forward_sample(const double* obs, const double* action,
                            EvalScratch& s) const;

  // Accumulates
  //   d_logp * dlogp/dtheta + d_entropy * dH/dtheta + d_value * dv/dtheta
  // into grad (flat, same layout as params), using the scratch of the
  // matching forward_sample call. This is the single reverse-mode path used
  // by both the PPO update and the finite-difference checks.
  void backward_sample(const EvalScratch& s, double d_logp, double d_entropy,
                       double d_value, double* grad) const;

  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;
  static constexpr double kLogStdInit = -0.5;

 private:
  int obs_dim_, act_dim_;
  std::vector<int> hidden_;
  MlpNet actor_, critic_;
  int actor_offset_ = 0, log_std_offset_ = 0, critic_offset_ = 0;
  std::vector<double> params_;
};

}  // namespace skillsim::ppo
