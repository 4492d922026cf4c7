#pragma once

// Throughput KPIs over the controlled cell group and the scalar reward built
// from them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>

#include "lbreuse/errors.hpp"
#include "lbreuse/sim.hpp"

namespace lbreuse {

struct MetricsRecord {
  std::array<double, kNumCells> per_cell_throughput_mbps{};
  double g_avg = 0.0;
  double g_min = 0.0;
  double g_sd = 0.0;
  double g_cong = 0.0;
  double delta_t = 0.0;
};

struct RewardConfig {
  double w_avg = 0.25;
  double w_min = 0.25;
  double w_sd = 0.25;
  double w_cong = 0.25;
  double t_ref_mbps = 10.0;
  double sd_reciprocal_cap = 10.0;
  double epsilon_mbps = 1.0;

  void validate() const {
    if (w_avg < 0 || w_min < 0 || w_sd < 0 || w_cong < 0) throw ConfigError("reward weights must be nonnegative");
    if (!(w_avg + w_min + w_sd + w_cong > 0.0)) throw ConfigError("at least one reward weight must be positive");
    if (!(t_ref_mbps > 0.0)) throw ConfigError("t_ref must be positive");
    if (!(sd_reciprocal_cap > 0.0)) throw ConfigError("sd_reciprocal_cap must be positive");
  }
};

inline constexpr double kSdFloor = 1e-6;

// per_cell_bits are the bits delivered by each cell during delta_t seconds.
inline MetricsRecord compute_metrics(const std::array<double, kNumCells>& per_cell_bits, double delta_t,
                                     double epsilon_mbps = 1.0) {
  if (!(delta_t > 0.0)) throw InvalidArgument("delta_t must be positive");
  MetricsRecord m;
  m.delta_t = delta_t;
  double sum = 0.0;
  for (int c = 0; c < kNumCells; ++c) {
    m.per_cell_throughput_mbps[c] = per_cell_bits[c] / delta_t / 1e6;
    sum += m.per_cell_throughput_mbps[c];
  }
  m.g_avg = sum / kNumCells;
  m.g_min = *std::min_element(m.per_cell_throughput_mbps.begin(), m.per_cell_throughput_mbps.end());
  double var = 0.0;
  int uncongested = 0;
  for (double g : m.per_cell_throughput_mbps) {
    var += (g - m.g_avg) * (g - m.g_avg);
    if (g > epsilon_mbps) ++uncongested;
  }
  m.g_sd = std::sqrt(var / kNumCells);
  m.g_cong = static_cast<double>(uncongested) / kNumCells;
  return m;
}

inline MetricsRecord compute_metrics(const IntervalResult& r, double epsilon_mbps = 1.0) {
  return compute_metrics(r.delivered_bits, r.duration_s, epsilon_mbps);
}

inline double compute_reward(const MetricsRecord& m, const RewardConfig& cfg) {
  const double cap = cfg.sd_reciprocal_cap;
  const double sd_term = std::min(1.0 / std::max(m.g_sd, kSdFloor), cap) / cap;
  const double num = cfg.w_avg * (m.g_avg / cfg.t_ref_mbps) + cfg.w_min * (m.g_min / cfg.t_ref_mbps) +
                     cfg.w_sd * sd_term + cfg.w_cong * m.g_cong;
  return num / (cfg.w_avg + cfg.w_min + cfg.w_sd + cfg.w_cong);
}

inline const char* metrics_csv_header() {
  return "scenario_id,day,hour,policy_id,g_avg,g_min,g_sd,g_cong,reward";
}

inline std::string metrics_csv_row(int scenario_id, int day, int hour, const std::string& policy_id,
                                   const MetricsRecord& m, double reward) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%d,%d,%s,%.9g,%.9g,%.9g,%.9g,%.9g", scenario_id, day, hour, policy_id.c_str(),
                m.g_avg, m.g_min, m.g_sd, m.g_cong, reward);
  return buf;
}

}  // namespace lbreuse
