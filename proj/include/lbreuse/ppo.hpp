#pragma once

// PPO with a clipped surrogate objective, GAE advantages and analytic
// gradients through the PolicyNet.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "lbreuse/env.hpp"
#include "lbreuse/errors.hpp"
#include "lbreuse/nn.hpp"
#include "lbreuse/policy_net.hpp"
#include "lbreuse/runner.hpp"
#include "lbreuse/scenarios.hpp"

namespace lbreuse {

struct PpoConfig {
  double discount = 0.99;
  double gae_lambda = 0.95;
  double clip_ratio = 0.2;
  double learning_rate = 1e-3;
  int epochs_per_iter = 10;
  int minibatch_size = 64;
  int rollout_length = 240;  // per scenario and iteration
  long total_interactions = 50000;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  double max_grad_norm = 0.5;
  double init_log_std = -0.5;
  double reward_scale = 1.0;  // applied to rewards before GAE only
  int days_per_reset = 7;     // training episodes between simulator resets
  PolicyNetShape net;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(discount > 0.0 && discount <= 1.0)) throw ConfigError("discount must be in (0, 1]");
    if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("gae_lambda must be in [0, 1]");
    if (!(clip_ratio > 0.0)) throw ConfigError("clip_ratio must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (epochs_per_iter < 1 || minibatch_size < 1 || rollout_length < 1) throw ConfigError("PPO sizes must be >= 1");
    if (total_interactions < 1) throw ConfigError("total_interactions must be >= 1");
    if (days_per_reset < 1) throw ConfigError("days_per_reset must be >= 1");
  }
};

// Per-sample clipped surrogate  min(r A, clip(r, 1-eps, 1+eps) A).
inline double clipped_surrogate(double ratio, double adv, double eps) {
  return std::min(ratio * adv, std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv);
}

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantages + values
};

// dones[t] marks that the episode ended after step t (no bootstrap across it).
// last_value bootstraps the step after the final one when it is not terminal.
inline GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                             const std::vector<bool>& dones, double last_value, double discount, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) throw InvalidArgument("GAE inputs differ in length");
  GaeResult g;
  g.advantages.assign(n, 0.0);
  g.returns.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const double next_v = dones[t] ? 0.0 : (t + 1 < n ? values[t + 1] : last_value);
    const double nonterminal = dones[t] ? 0.0 : 1.0;
    const double delta = rewards[t] + discount * next_v - values[t];
    running = delta + discount * lambda * nonterminal * running;
    g.advantages[t] = running;
    g.returns[t] = running + values[t];
  }
  return g;
}

struct PpoBatch {
  Mat obs;         // B x obs
  Mat u;           // B x act, pre-squash actions
  Vec logp_old;    // B
  Vec advantages;  // B
  Vec returns;     // B
  int size() const { return static_cast<int>(obs.rows()); }
};

struct PpoLoss {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
};

// Loss = -mean(surrogate) + c_v mean((V - R)^2) - c_e H, where H is the
// entropy of the pre-squash Gaussian. Writes d loss / d params into grad when
// given (grad is overwritten).
inline PpoLoss ppo_loss(const PolicyNet& net, const std::vector<double>& params, const PpoBatch& batch,
                        const PpoConfig& cfg, std::vector<double>* grad) {
  const int b = batch.size();
  if (b == 0) throw InvalidArgument("empty PPO batch");
  const PolicyForward f = net.forward_with(params, batch.obs);
  const TensorShape& ls_t = net.tensor(net.log_std_index());
  const Vec raw_ls = vec_view(params, ls_t);
  const Vec ls = raw_ls.cwiseMax(kLogStdMin).cwiseMin(kLogStdMax);
  const int act = static_cast<int>(ls.size());
  const Vec inv_var = (-2.0 * ls).array().exp();

  PpoLoss out;
  Mat d_mu = Mat::Zero(b, act);
  Vec d_ls = Vec::Zero(act);
  Vec d_v = Vec::Zero(b);
  for (int i = 0; i < b; ++i) {
    const Vec mu_i = f.mu.row(i).transpose();
    const Vec u_i = batch.u.row(i).transpose();
    const double logp = PolicyNet::squashed_log_prob(u_i.data(), mu_i.data(), ls);
    const double ratio = std::exp(logp - batch.logp_old[i]);
    const double adv = batch.advantages[i];
    const double eps = cfg.clip_ratio;
    const double surr = clipped_surrogate(ratio, adv, eps);
    out.policy -= surr / b;
    out.approx_kl += (batch.logp_old[i] - logp) / b;
    const bool clipped = ratio * adv > std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
    if (clipped) out.clip_fraction += 1.0 / b;
    const double diff = f.value[i] - batch.returns[i];
    out.value += diff * diff / b;
    if (grad) {
      // d(-surr/b)/d logp
      const double g_logp = clipped ? 0.0 : -ratio * adv / b;
      for (int k = 0; k < act; ++k) {
        const double z = u_i[k] - mu_i[k];
        d_mu(i, k) = g_logp * z * inv_var[k];
        d_ls[k] += g_logp * (z * z * inv_var[k] - 1.0);
      }
      d_v[i] = cfg.value_coef * 2.0 * diff / b;
    }
  }
  out.entropy = (ls.array() + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e)).sum();
  out.total = out.policy + cfg.value_coef * out.value - cfg.entropy_coef * out.entropy;
  if (!std::isfinite(out.total)) throw NumericalError("non-finite PPO loss; try a lower learning rate");

  if (grad) {
    grad->assign(params.size(), 0.0);
    // mean and value heads
    Mat dh2 = dense_backward(f.h2, d_mu, params, *grad, net.tensor(4), net.tensor(5));
    Mat dv = d_v;
    dh2 += dense_backward(f.h2, dv, params, *grad, net.tensor(net.value_weight_index()),
                          net.tensor(net.value_bias_index()));
    const Mat dz2 = dh2.array() * (1.0 - f.h2.array().square());
    const Mat dh1 = dense_backward(f.h1, dz2, params, *grad, net.tensor(2), net.tensor(3));
    const Mat dz1 = dh1.array() * (1.0 - f.h1.array().square());
    dense_backward(f.x, dz1, params, *grad, net.tensor(0), net.tensor(1));
    for (int k = 0; k < act; ++k) {
      const double inside = raw_ls[k] >= kLogStdMin && raw_ls[k] <= kLogStdMax ? 1.0 : 0.0;
      (*grad)[ls_t.offset + k] = inside * (d_ls[k] - cfg.entropy_coef);
    }
  }
  return out;
}

// Max relative error of the analytic PPO gradient against central differences.
inline double check_gradients(const PolicyNet& net, const PpoBatch& batch, const PpoConfig& cfg,
                              std::uint64_t seed, int count = 200, double h = 1e-5) {
  std::vector<double> g;
  ppo_loss(net, net.params(), batch, cfg, &g);
  auto loss = [&](const std::vector<double>& p) { return ppo_loss(net, p, batch, cfg, nullptr).total; };
  return finite_difference_check(net.params(), g, loss, count, seed, h).max_relative_error;
}

struct TrainResult {
  PolicyNet net;
  std::vector<double> curve;  // mean per-step reward of each iteration's rollouts
  long interactions = 0;
  int iterations = 0;
};

struct TrainContext {
  SectorTopology topology = SectorTopology::standard();
  SimConfig sim;
  EnvConfig env;
  RewardConfig reward;
};

namespace detail {

struct RolloutStream {
  LbEnv env;
  const ScenarioSpec* scenario;
  std::uint64_t seed_base;
  int resets = 0;
  int days = 0;

  void fresh() {
    env.reset(*scenario, 0, mix_seed(seed_base, static_cast<std::uint64_t>(resets++)));
    days = 0;
  }
};

struct Rollout {
  std::vector<std::vector<double>> obs, u;
  std::vector<double> logp, values, rewards;
  std::vector<bool> dones;
  double last_value = 0.0;
};

inline Rollout collect(RolloutStream& st, const PolicyNet& net, int n, Rng& rng, const PpoConfig& cfg) {
  Rollout r;
  for (int t = 0; t < n; ++t) {
    const EnvState s = st.env.state();
    ActionSample a = net.sample(s.history, rng);
    const Transition tr = st.env.step(a.a);
    r.obs.push_back(s.history);
    r.u.push_back(std::move(a.u));
    r.logp.push_back(a.log_prob);
    r.values.push_back(a.value);
    r.rewards.push_back(tr.r * cfg.reward_scale);
    r.dones.push_back(tr.done);
    if (tr.done) {
      if (++st.days >= cfg.days_per_reset) st.fresh();
      else st.env.begin_episode();
    }
  }
  r.last_value = r.dones.back() ? 0.0 : net.value(st.env.state().history);
  return r;
}

}  // namespace detail

// Joint training: every iteration collects rollout_length steps from each
// scenario and performs one shared update over the pooled batch.
inline TrainResult train_joint_policy(const std::vector<const ScenarioSpec*>& scenarios, const TrainContext& ctx,
                                      const PpoConfig& cfg,
                                      const std::function<void(int, double)>& on_iteration = {}) {
  cfg.validate();
  if (scenarios.empty()) throw InvalidArgument("need at least one training scenario");
  if (ctx.env.state_size() != cfg.net.obs) throw ConfigError("policy input width must equal the env state size");

  TrainResult res{PolicyNet(cfg.net), {}, 0, 0};
  res.net.init(mix_seed(cfg.seed, 1), cfg.init_log_std);
  Rng rng(mix_seed(cfg.seed, 2));
  Adam adam(res.net.params().size(), AdamConfig{cfg.learning_rate});

  std::vector<detail::RolloutStream> streams;
  streams.reserve(scenarios.size());
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    streams.push_back({LbEnv(ctx.topology, ctx.sim, ctx.env, ctx.reward), scenarios[i],
                       mix_seed(cfg.seed, 100 + i), 0, 0});
    streams.back().fresh();
  }

  const int obs_n = cfg.net.obs, act_n = cfg.net.act;
  std::vector<double> grad;
  while (res.interactions < cfg.total_interactions) {
    std::vector<std::vector<double>> obs, us;
    std::vector<double> logp, adv, ret;
    double reward_sum = 0.0;
    long steps = 0;
    for (auto& st : streams) {
      detail::Rollout r = detail::collect(st, res.net, cfg.rollout_length, rng, cfg);
      const GaeResult g = compute_gae(r.rewards, r.values, r.dones, r.last_value, cfg.discount, cfg.gae_lambda);
      for (double x : r.rewards) reward_sum += x / cfg.reward_scale;
      steps += static_cast<long>(r.rewards.size());
      obs.insert(obs.end(), r.obs.begin(), r.obs.end());
      us.insert(us.end(), r.u.begin(), r.u.end());
      logp.insert(logp.end(), r.logp.begin(), r.logp.end());
      adv.insert(adv.end(), g.advantages.begin(), g.advantages.end());
      ret.insert(ret.end(), g.returns.begin(), g.returns.end());
    }
    res.interactions += steps;

    const int n = static_cast<int>(obs.size());
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (int epoch = 0; epoch < cfg.epochs_per_iter; ++epoch) {
      rng.shuffle(idx);
      for (int start = 0; start < n; start += cfg.minibatch_size) {
        const int b = std::min(cfg.minibatch_size, n - start);
        PpoBatch mb{Mat(b, obs_n), Mat(b, act_n), Vec(b), Vec(b), Vec(b)};
        for (int r = 0; r < b; ++r) {
          const int k = idx[start + r];
          for (int c = 0; c < obs_n; ++c) mb.obs(r, c) = obs[k][c];
          for (int c = 0; c < act_n; ++c) mb.u(r, c) = us[k][c];
          mb.logp_old[r] = logp[k];
          mb.advantages[r] = adv[k];
          mb.returns[r] = ret[k];
        }
        const double mean = mb.advantages.mean();
        const double sd = std::sqrt((mb.advantages.array() - mean).square().mean());
        mb.advantages = (mb.advantages.array() - mean) / std::max(sd, 1e-8);
        ppo_loss(res.net, res.net.params(), mb, cfg, &grad);
        clip_global_norm(grad, cfg.max_grad_norm);
        adam.step(res.net.params(), grad);
        res.net.project();
      }
    }
    if (!all_finite(res.net.params())) throw NumericalError("PPO diverged (non-finite parameters)");
    res.curve.push_back(reward_sum / steps);
    ++res.iterations;
    if (on_iteration) on_iteration(res.iterations, res.curve.back());
  }
  return res;
}

inline TrainResult train_policy(const ScenarioSpec& scenario, const TrainContext& ctx, const PpoConfig& cfg,
                                const std::function<void(int, double)>& on_iteration = {}) {
  return train_joint_policy({&scenario}, ctx, cfg, on_iteration);
}

struct PolicyEvaluation {
  std::vector<double> day_rewards;  // scored days only (day 2 onward)
  double mean_reward = 0.0;
  RunResult run;
};

// Day 1 under BasicLB, then the policy's mean action for the remaining days.
inline PolicyEvaluation evaluate_policy(const PolicyNet& net, const ScenarioSpec& scenario, int days,
                                        std::uint64_t seed, const TrainContext& ctx, int policy_id = 0,
                                        const std::string& method = "policy") {
  if (days < 2) throw InvalidArgument("evaluation needs >= 2 days");
  LbEnv env(ctx.topology, ctx.sim, ctx.env, ctx.reward);
  PolicyEvaluation ev;
  ev.run = run_after_basic_day(env, scenario, days, seed, policy_day(net, policy_id), method);
  ev.day_rewards.assign(ev.run.day_mean_reward.begin() + 1, ev.run.day_mean_reward.end());
  ev.mean_reward = ev.run.mean_reward_from(1);
  return ev;
}

}  // namespace lbreuse
