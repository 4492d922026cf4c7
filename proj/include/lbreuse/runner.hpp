#pragma once

// Multi-day runs with a per-day controller schedule. Every evaluation path
// (single-policy evaluation, bank search, the selection loop, rule baselines,
// the transient experiment) goes through run_days, so runs that share a seed
// see the same exogenous randomness and differ only in the controllers used.

#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "lbreuse/env.hpp"
#include "lbreuse/metrics.hpp"
#include "lbreuse/policy_net.hpp"
#include "lbreuse/rules.hpp"
#include "lbreuse/scenarios.hpp"

namespace lbreuse {

class Controller {
 public:
  virtual ~Controller() = default;
  // Parameters for the next hour given the env (state, last interval) and the
  // parameters applied in the previous hour.
  virtual LbParams next(const LbEnv& env, const LbParams& prev) = 0;
};

class FixedController : public Controller {
 public:
  explicit FixedController(LbParams p) : p_(p) {}
  LbParams next(const LbEnv&, const LbParams&) override { return p_; }

 private:
  LbParams p_;
};

class AdaptController : public Controller {
 public:
  explicit AdaptController(AdaptLbConfig cfg) : cfg_(cfg) {}
  LbParams next(const LbEnv& env, const LbParams& prev) override {
    return adapt_lb(env.last_interval().observations, prev, cfg_, env.sim_config().bounds);
  }

 private:
  AdaptLbConfig cfg_;
};

class PolicyController : public Controller {
 public:
  explicit PolicyController(const PolicyNet& net) : net_(&net) {}
  LbParams next(const LbEnv& env, const LbParams&) override {
    return decode_action(net_->act(env.state().history), env.sim_config().bounds);
  }

 private:
  const PolicyNet* net_;
};

inline constexpr int kBasicLbPolicyId = -1;

struct DayPlan {
  std::string label;                 // e.g. "BasicLB", "policy:3"
  int policy_id = kBasicLbPolicyId;  // bank id, or -1 for rule controllers
  std::shared_ptr<Controller> controller;
};

inline DayPlan basic_day(const BasicLbConfig& cfg = {}) {
  return {"BasicLB", kBasicLbPolicyId, std::make_shared<FixedController>(basic_lb(cfg))};
}

inline DayPlan policy_day(const PolicyNet& net, int policy_id) {
  return {"policy:" + std::to_string(policy_id), policy_id, std::make_shared<PolicyController>(net)};
}

struct HourRow {
  int scenario_id = 0;
  int day = 0;   // 1-based
  int hour = 0;  // hour of day
  std::string method;
  int policy_id = kBasicLbPolicyId;
  MetricsRecord metrics;
  double reward = 0.0;
};

// Consecutive days on one scenario; the simulator is reset (hour 0) at the
// start of every segment.
struct RunSegment {
  const ScenarioSpec* scenario = nullptr;
  int days = 0;
};

struct RunResult {
  std::vector<HourRow> rows;
  std::vector<double> day_mean_reward;
  std::vector<int> day_policy;
  std::vector<std::string> day_label;
  std::vector<int> day_scenario;
  std::vector<std::vector<Frame>> day_frames;  // 24 normalized frames per day

  int days() const { return static_cast<int>(day_mean_reward.size()); }

  // Mean of day rewards over days [first, days()).
  double mean_reward_from(int first_day) const {
    if (first_day >= days()) return 0.0;
    return std::accumulate(day_mean_reward.begin() + first_day, day_mean_reward.end(), 0.0) / (days() - first_day);
  }
};

// Called at the start of each day (0-based index) with everything logged so far.
using DayChooser = std::function<DayPlan(int day, const RunResult& so_far)>;

inline std::uint64_t segment_seed(std::uint64_t seed, int segment) {
  return segment == 0 ? seed : mix_seed(seed, 7000 + segment);
}

inline RunResult run_days(LbEnv& env, const std::vector<RunSegment>& segments, std::uint64_t seed,
                          const DayChooser& choose, const std::string& method) {
  RunResult res;
  LbParams current = basic_lb();
  int day = 0;
  for (int s = 0; s < static_cast<int>(segments.size()); ++s) {
    const RunSegment& seg = segments[s];
    if (seg.scenario == nullptr || seg.days < 1) throw InvalidArgument("run segment needs a scenario and >= 1 day");
    env.reset(*seg.scenario, 0, segment_seed(seed, s));
    for (int d = 0; d < seg.days; ++d, ++day) {
      DayPlan plan = choose(day, res);
      if (!plan.controller) throw InvalidArgument("day plan without controller");
      env.begin_episode();
      double sum = 0.0;
      std::vector<Frame> frames;
      frames.reserve(kHoursPerDay);
      for (int h = 0; h < kHoursPerDay; ++h) {
        current = plan.controller->next(env, current);
        const Transition t = env.step_params(current);
        HourRow row;
        row.scenario_id = seg.scenario->id;
        row.day = day + 1;
        row.hour = h;
        row.method = method;
        row.policy_id = plan.policy_id;
        row.metrics = env.last_metrics();
        row.reward = t.r;
        sum += t.r;
        res.rows.push_back(std::move(row));
        frames.push_back(env.newest_frame());
      }
      res.day_mean_reward.push_back(sum / kHoursPerDay);
      res.day_policy.push_back(plan.policy_id);
      res.day_label.push_back(plan.label);
      res.day_scenario.push_back(seg.scenario->id);
      res.day_frames.push_back(std::move(frames));
    }
  }
  return res;
}

// Day 1 under BasicLB, every later day under a fixed plan.
inline RunResult run_after_basic_day(LbEnv& env, const ScenarioSpec& scenario, int days, std::uint64_t seed,
                                     const DayPlan& plan, const std::string& method) {
  return run_days(env, {{&scenario, days}}, seed,
                  [&](int day, const RunResult&) { return day == 0 ? basic_day() : plan; }, method);
}

}  // namespace lbreuse
