#pragma once

// The load-balancing MDP on top of the simulator: k-frame normalized state,
// [-1, 1] action vector decoded onto LbParams bounds, reward from the newest
// interval's KPIs.

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "lbreuse/errors.hpp"
#include "lbreuse/metrics.hpp"
#include "lbreuse/rules.hpp"
#include "lbreuse/scenarios.hpp"
#include "lbreuse/sim.hpp"

namespace lbreuse {

inline constexpr int kFrameSize = kNumCells * kFeaturesPerCell;  // 12
inline constexpr int kActionSize = 3 * kNumPairs;                 // 36

struct EnvConfig {
  int history_k = 4;
  int horizon = 24;
  double ue_norm = 10.0;
  double throughput_norm_mbps = 10.0;

  int state_size() const { return history_k * kFrameSize; }

  void validate() const {
    if (history_k < 1) throw ConfigError("history_k must be >= 1");
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    if (!(ue_norm > 0.0) || !(throughput_norm_mbps > 0.0)) throw ConfigError("normalizers must be positive");
  }
};

using Frame = std::array<double, kFrameSize>;

// Per cell: (active UEs / ue_norm, utilization, throughput / t_ref).
inline Frame normalize_frame(const CellObservations& obs, const EnvConfig& cfg) {
  Frame f{};
  for (int c = 0; c < kNumCells; ++c) {
    f[c * kFeaturesPerCell + 0] = obs[c].active_ues / cfg.ue_norm;
    f[c * kFeaturesPerCell + 1] = obs[c].prb_utilization;
    f[c * kFeaturesPerCell + 2] = obs[c].throughput_mbps / cfg.throughput_norm_mbps;
  }
  return f;
}

// Sliding window of the last k frames.
class FrameHistory {
 public:
  explicit FrameHistory(int k = 4) : k_(k) {}
  void clear() { frames_.clear(); }
  void push(const Frame& f) {
    frames_.push_back(f);
    while (static_cast<int>(frames_.size()) > k_) frames_.pop_front();
  }
  bool full() const { return static_cast<int>(frames_.size()) == k_; }
  const Frame& newest() const { return frames_.back(); }
  std::vector<double> flatten() const {
    std::vector<double> out;
    out.reserve(k_ * kFrameSize);
    for (const auto& f : frames_) out.insert(out.end(), f.begin(), f.end());
    return out;
  }

 private:
  int k_;
  std::deque<Frame> frames_;
};

struct EnvState {
  std::vector<double> history;  // oldest frame first
  int hour_of_week = 0;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

using ActionVector = std::vector<double>;

// Layout: [a (12 pairs), beta (12 pairs), gamma (12 pairs)], pairs row-major.
inline LbParams decode_action(const ActionVector& action, const LbBounds& b) {
  if (action.size() != kActionSize) throw InvalidArgument("action must have 36 entries");
  for (double v : action)
    if (!std::isfinite(v)) throw InvalidArgument("non-finite action entry");
  auto map = [](double u, double lo, double hi) {
    u = std::clamp(u, -1.0, 1.0);
    return lo + 0.5 * (u + 1.0) * (hi - lo);
  };
  LbParams p = LbParams::uniform(0.0, 0.0, 0.0);
  const auto pairs = ordered_pairs();
  for (int k = 0; k < kNumPairs; ++k) {
    const auto [i, j] = pairs[k];
    p.cio_db[i][j] = map(action[k], b.cio_min_db, b.cio_max_db);
    p.beta_dbm[i][j] = map(action[kNumPairs + k], b.threshold_min_dbm, b.threshold_max_dbm);
    p.gamma_dbm[i][j] = map(action[2 * kNumPairs + k], b.threshold_min_dbm, b.threshold_max_dbm);
  }
  return p;
}

inline ActionVector encode_action(const LbParams& p, const LbBounds& b) {
  auto unmap = [](double v, double lo, double hi) { return hi > lo ? 2.0 * (v - lo) / (hi - lo) - 1.0 : 0.0; };
  ActionVector a(kActionSize);
  const auto pairs = ordered_pairs();
  for (int k = 0; k < kNumPairs; ++k) {
    const auto [i, j] = pairs[k];
    a[k] = unmap(p.cio_db[i][j], b.cio_min_db, b.cio_max_db);
    a[kNumPairs + k] = unmap(p.beta_dbm[i][j], b.threshold_min_dbm, b.threshold_max_dbm);
    a[2 * kNumPairs + k] = unmap(p.gamma_dbm[i][j], b.threshold_min_dbm, b.threshold_max_dbm);
  }
  return a;
}

struct Transition {
  EnvState s;
  ActionVector a;
  double r = 0.0;
  EnvState s_next;
  bool done = false;
};

inline void to_json(nlohmann::json& j, const Transition& t) {
  j = {{"hour_of_week", t.s.hour_of_week}, {"s", t.s.history}, {"a", t.a}, {"r", t.r}, {"s_next", t.s_next.history},
       {"done", t.done}};
}

// One transition per line.
inline void write_ndjson(std::ostream& os, const std::vector<Transition>& ts) {
  for (const auto& t : ts) os << nlohmann::json(t).dump() << '\n';
}

// Seed of the simulator instance used for (scenario, run seed).
inline std::uint64_t sim_seed_for(const ScenarioSpec& scenario, std::uint64_t seed) {
  return mix_seed(scenario.rng_seed, seed);
}

class LbEnv {
 public:
  LbEnv(SectorTopology topology, SimConfig sim_config, EnvConfig env_config = {}, RewardConfig reward = {})
      : topology_(std::move(topology)),
        sim_config_(sim_config),
        cfg_(env_config),
        reward_(reward),
        frames_(env_config.history_k) {
    topology_.validate();
    sim_config_.validate();
    cfg_.validate();
    reward_.validate();
  }

  const EnvConfig& config() const { return cfg_; }
  const SimConfig& sim_config() const { return sim_config_; }
  const SectorTopology& topology() const { return topology_; }
  const RewardConfig& reward_config() const { return reward_; }

  // A fresh simulator, warmed up with history_k intervals of BasicLB on the
  // hours just before start_hour.
  EnvState reset(const ScenarioSpec& scenario, int start_hour, std::uint64_t seed) {
    if (start_hour < 0 || start_hour >= kHoursPerWeek) throw InvalidArgument("start_hour must be in [0, 168)");
    if (scenario.hours.size() != kHoursPerWeek) throw InvalidArgument("scenario needs 168 hourly profiles");
    scenario_ = &scenario;
    SimConfig sc = sim_config_;
    sc.rng_seed = sim_seed_for(scenario, seed);
    sim_ = std::make_unique<Simulator>(topology_, sc);
    frames_.clear();
    const LbParams warm = basic_lb();
    for (int w = cfg_.history_k; w >= 1; --w) {
      const IntervalResult r = sim_->run_control_interval(warm, scenario.hour(start_hour - w));
      frames_.push(normalize_frame(r.observations, cfg_));
      last_ = r;
    }
    hour_ = start_hour;
    steps_ = 0;
    return state();
  }

  // Start a new episode without resetting the simulator (day boundary in a
  // multi-day run).
  void begin_episode() {
    require_reset();
    steps_ = 0;
  }

  Transition step(const ActionVector& action) {
    require_reset();
    Transition t;
    t.a = action;
    return step_impl(decode_action(action, sim_config_.bounds), std::move(t));
  }

  // Same as step() but with raw parameters (rule-based controllers).
  Transition step_params(const LbParams& params) {
    require_reset();
    return step_impl(params, Transition{});
  }

  EnvState state() const {
    EnvState s;
    s.hour_of_week = hour_;
    s.history = frames_.flatten();
    return s;
  }

  const IntervalResult& last_interval() const { return last_; }
  const MetricsRecord& last_metrics() const { return last_metrics_; }
  const Frame& newest_frame() const { return frames_.newest(); }
  int steps_in_episode() const { return steps_; }
  int hour_of_week() const { return hour_; }
  bool ready() const { return sim_ != nullptr; }
  Simulator& simulator() {
    require_reset();
    return *sim_;
  }

 private:
  void require_reset() const {
    if (!sim_) throw InvalidArgument("environment used before reset()");
  }

  Transition step_impl(const LbParams& params, Transition t) {
    t.s = state();
    last_ = sim_->run_control_interval(params, scenario_->hour(hour_));
    frames_.push(normalize_frame(last_.observations, cfg_));
    last_metrics_ = compute_metrics(last_, reward_.epsilon_mbps);
    t.r = compute_reward(last_metrics_, reward_);
    hour_ = (hour_ + 1) % kHoursPerWeek;
    ++steps_;
    t.done = steps_ >= cfg_.horizon;
    t.s_next = state();
    return t;
  }

  SectorTopology topology_;
  SimConfig sim_config_;
  EnvConfig cfg_;
  RewardConfig reward_;
  const ScenarioSpec* scenario_ = nullptr;
  std::unique_ptr<Simulator> sim_;
  FrameHistory frames_;
  IntervalResult last_;
  MetricsRecord last_metrics_;
  int hour_ = 0;
  int steps_ = 0;
};

}  // namespace lbreuse
