#pragma once

// Comparison methods that are not the selector: the two rule baselines (in
// rules.hpp / runner.hpp), random and exhaustive bank choice, and training
// from scratch on the target scenario.

#include <cstdint>
#include <string>
#include <vector>

#include "lbreuse/policy_bank.hpp"
#include "lbreuse/ppo.hpp"
#include "lbreuse/rng.hpp"
#include "lbreuse/rules.hpp"
#include "lbreuse/runner.hpp"

namespace lbreuse {

enum class BaselineKind { BasicLB, AdaptLB, RandPi, BestPi, NewPi };

inline const char* baseline_name(BaselineKind k) {
  switch (k) {
    case BaselineKind::BasicLB: return "BasicLB";
    case BaselineKind::AdaptLB: return "AdaptLB";
    case BaselineKind::RandPi: return "RandPi";
    case BaselineKind::BestPi: return "BestPi";
    case BaselineKind::NewPi: return "NewPi";
  }
  return "?";
}

// Oracle methods need the target scenario's own performance or training.
inline bool is_oracle(BaselineKind k) { return k == BaselineKind::BestPi || k == BaselineKind::NewPi; }

inline int rand_pi(int bank_size, std::uint64_t seed, int day) {
  if (bank_size < 1) throw InvalidArgument("empty bank");
  Rng rng(mix_seed(seed, 60000 + static_cast<std::uint64_t>(day)));
  return static_cast<int>(rng.below(static_cast<std::uint64_t>(bank_size)));
}

inline DayChooser rand_pi_chooser(const PolicyBank& bank, std::uint64_t seed, const BasicLbConfig& basic = {}) {
  return [&bank, seed, basic](int day, const RunResult&) -> DayPlan {
    if (day == 0) return basic_day(basic);
    const int id = rand_pi(bank.size(), seed, day);
    return policy_day(bank.get(id), id);
  };
}

inline DayChooser adapt_lb_chooser(const AdaptLbConfig& cfg, const BasicLbConfig& basic = {}) {
  auto adapt = std::make_shared<AdaptController>(cfg);
  return [adapt, basic](int day, const RunResult&) -> DayPlan {
    if (day == 0) return basic_day(basic);
    return {"AdaptLB", kBasicLbPolicyId, adapt};
  };
}

inline DayChooser basic_lb_chooser(const BasicLbConfig& basic = {}) {
  return [basic](int, const RunResult&) { return basic_day(basic); };
}

struct BestPiResult {
  int policy_id = 0;
  // rewards[policy][scored day]
  std::vector<std::vector<double>> day_rewards;
  std::vector<double> mean_rewards;
  std::vector<RunResult> runs;
};

// Evaluate every bank policy on the scenario with the same seed; argmax of the
// scored-day mean, ties to the lowest id.
inline BestPiResult best_pi(const PolicyBank& bank, const ScenarioSpec& scenario, int days, std::uint64_t seed,
                            const TrainContext& ctx, bool keep_runs = false) {
  if (bank.size() < 1) throw InvalidArgument("empty bank");
  BestPiResult res;
  for (int p = 0; p < bank.size(); ++p) {
    PolicyEvaluation ev = evaluate_policy(bank.get(p), scenario, days, seed, ctx, p, "BestPi");
    res.day_rewards.push_back(ev.day_rewards);
    res.mean_rewards.push_back(ev.mean_reward);
    if (keep_runs) res.runs.push_back(std::move(ev.run));
    if (ev.mean_reward > res.mean_rewards[res.policy_id]) res.policy_id = p;
  }
  return res;
}

// Train from scratch on the target scenario with the bank's seeding rule.
inline PolicyNet new_pi(const ScenarioSpec& scenario, const TrainContext& ctx, PpoConfig cfg) {
  cfg.seed = policy_seed_for(cfg.seed, scenario);
  return train_policy(scenario, ctx, cfg).net;
}

}  // namespace lbreuse
