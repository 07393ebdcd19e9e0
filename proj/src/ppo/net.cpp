#include "skillsim/ppo/net.hpp"

#include <cmath>

namespace skillsim::ppo {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;  // log(2*pi)
}

void MlpNet::forward(const double* params, const double* input,
                     Cache& cache) const {
  const size_t layers = sizes.size() - 1;
  cache.acts.resize(layers + 1);
  cache.acts[0].assign(input, input + sizes[0]);

  int off = 0;
  for (size_t l = 0; l < layers; ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    const double* w = params + off;
    const double* b = params + off + out * in;
    auto& h = cache.acts[l + 1];
    h.resize(out);
    const double* x = cache.acts[l].data();
    for (int r = 0; r < out; ++r) {
      double z = b[r];
      const double* wr = w + r * in;
      for (int c = 0; c < in; ++c) z += wr[c] * x[c];
      h[r] = (l + 1 < layers) ? std::tanh(z) : z;
    }
    off += out * in + out;
  }
}

void MlpNet::backward(const double* params, const Cache& cache,
                      const double* grad_out, double* grad_params) const {
  const size_t layers = sizes.size() - 1;
  std::vector<double> delta(grad_out, grad_out + sizes.back());

  std::vector<int> offsets(layers);
  int off = 0;
  for (size_t l = 0; l < layers; ++l) {
    offsets[l] = off;
    off += sizes[l + 1] * sizes[l] + sizes[l + 1];
  }

  for (size_t l = layers; l-- > 0;) {
    const int in = sizes[l], out = sizes[l + 1];
    const double* w = params + offsets[l];
    double* gw = grad_params + offsets[l];
    double* gb = gw + out * in;
    const double* x = cache.acts[l].data();

    for (int r = 0; r < out; ++r) {
      const double d = delta[r];
      double* gwr = gw + r * in;
      for (int c = 0; c < in; ++c) gwr[c] += d * x[c];
      gb[r] += d;
    }
    if (l == 0) break;

    std::vector<double> prev(in, 0.0);
    for (int r = 0; r < out; ++r) {
      const double d = delta[r];
      const double* wr = w + r * in;
      for (int c = 0; c < in; ++c) prev[c] += wr[c] * d;
    }
    // The input of layer l is the tanh output of layer l-1.
    for (int c = 0; c < in; ++c) prev[c] *= 1.0 - x[c] * x[c];
    delta = std::move(prev);
  }
}

void MlpNet::init(double* params, Rng& rng, double out_scale) const {
  const size_t layers = sizes.size() - 1;
  int off = 0;
  for (size_t l = 0; l < layers; ++l) {
    const int in = sizes[l], out = sizes[l + 1];
    const double scale = (1.0 / std::sqrt(static_cast<double>(in))) *
                         ((l + 1 == layers) ? out_scale : 1.0);
    for (int i = 0; i < out * in; ++i) params[off + i] = scale * rng.normal();
    for (int i = 0; i < out; ++i) params[off + out * in + i] = 0.0;
    off += out * in + out;
  }
}

PolicyNet::PolicyNet(int obs_dim, int act_dim, std::vector<int> hidden)
    : obs_dim_(obs_dim),
      act_dim_(act_dim),
      hidden_(hidden),
      actor_([&] {
        std::vector<int> s{obs_dim};
        s.insert(s.end(), hidden.begin(), hidden.end());
        s.push_back(act_dim);
        return s;
      }()),
      critic_([&] {
        std::vector<int> s{obs_dim};
        s.insert(s.end(), hidden.begin(), hidden.end());
        s.push_back(1);
        return s;
      }()) {
  actor_offset_ = 0;
  log_std_offset_ = actor_.param_count();
  critic_offset_ = log_std_offset_ + act_dim_;
  params_.assign(critic_offset_ + critic_.param_count(), 0.0);
}

void PolicyNet::init_params(Rng& rng) {
  actor_.init(params_.data() + actor_offset_, rng, 0.01);
  for (int i = 0; i < act_dim_; ++i) params_[log_std_offset_ + i] = kLogStdInit;
  critic_.init(params_.data() + critic_offset_, rng, 1.0);
}

void PolicyNet::mean_action(const double* obs, double* action,
                            EvalScratch& s) const {
  actor_.forward(params_.data() + actor_offset_, obs, s.actor_cache);
  for (int i = 0; i < act_dim_; ++i)
    action[i] = std::tanh(s.actor_cache.acts.back()[i]);
}

void PolicyNet::sample_action(const double* obs, Rng& rng, double* action,
                              double* logp, EvalScratch& s) const {
  actor_.forward(params_.data() + actor_offset_, obs, s.actor_cache);
  double lp = 0.0;
  for (int i = 0; i < act_dim_; ++i) {
    const double mean = std::tanh(s.actor_cache.acts.back()[i]);
    const double log_std =
        std::clamp(params_[log_std_offset_ + i], kLogStdMin, kLogStdMax);
    const double sigma = std::exp(log_std);
    action[i] = mean + sigma * rng.normal();
    const double z = (action[i] - mean) / sigma;
    lp += -0.5 * z * z - log_std - 0.5 * kLog2Pi;
  }
  if (logp) *logp = lp;
}

double PolicyNet::value(const double* obs, EvalScratch& s) const {
  critic_.forward(params_.data() + critic_offset_, obs, s.critic_cache);
  return s.critic_cache.acts.back()[0];
}

PolicyNet::SampleEval PolicyNet::forward_sample(const double* obs,
                                                const double* action,
                                                EvalScratch& s) const {
  SampleEval out;
  actor_.forward(params_.data() + actor_offset_, obs, s.actor_cache);
  critic_.forward(params_.data() + critic_offset_, obs, s.critic_cache);
  s.z.resize(act_dim_);
  s.mean.resize(act_dim_);
  s.interior.resize(act_dim_);
  for (int i = 0; i < act_dim_; ++i) {
    const double mean = std::tanh(s.actor_cache.acts.back()[i]);
    const double raw = params_[log_std_offset_ + i];
    const double log_std = std::clamp(raw, kLogStdMin, kLogStdMax);
    const double sigma = std::exp(log_std);
    const double z = (action[i] - mean) / sigma;
    s.mean[i] = mean;
    s.z[i] = z;
    s.interior[i] = raw > kLogStdMin && raw < kLogStdMax;
    out.logp += -0.5 * z * z - log_std - 0.5 * kLog2Pi;
    out.entropy += log_std + 0.5 * (kLog2Pi + 1.0);
  }
  out.value = s.critic_cache.acts.back()[0];
  return out;
}

void PolicyNet::backward_sample(const EvalScratch& s, double d_logp,
                                double d_entropy, double d_value,
                                double* grad) const {
  std::vector<double> grad_pre(act_dim_, 0.0);
  for (int i = 0; i < act_dim_; ++i) {
    const double log_std =
        std::clamp(params_[log_std_offset_ + i], kLogStdMin, kLogStdMax);
    const double sigma = std::exp(log_std);
    // dlogp/dmean = z/sigma, dmean/dpre = 1 - mean^2.
    grad_pre[i] = d_logp * (s.z[i] / sigma) * (1.0 - s.mean[i] * s.mean[i]);
    // dlogp/dlog_std = z^2 - 1; dH/dlog_std = 1. The clamp gates both.
    if (s.interior[i])
      grad[log_std_offset_ + i] += d_logp * (s.z[i] * s.z[i] - 1.0) + d_entropy;
  }
  actor_.backward(params_.data() + actor_offset_, s.actor_cache,
                  grad_pre.data(), grad + actor_offset_);
  if (d_value != 0.0) {
    const double gv[1] = {d_value};
    critic_.backward(params_.data() + critic_offset_, s.critic_cache, gv,
                     grad + critic_offset_);
  }
}

}  // namespace skillsim::ppo
