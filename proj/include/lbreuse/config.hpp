#pragma once

// JSON (de)serialization of every configuration struct. Missing keys keep
// their defaults; unknown keys are rejected so typos surface as config errors.

#include <fstream>
#include <initializer_list>
#include <set>
#include <string>

#include <json.hpp>

#include "lbreuse/env.hpp"
#include "lbreuse/errors.hpp"
#include "lbreuse/metrics.hpp"
#include "lbreuse/ppo.hpp"
#include "lbreuse/rules.hpp"
#include "lbreuse/scenarios.hpp"
#include "lbreuse/sim.hpp"

namespace lbreuse {

namespace cfgio {

inline void only_keys(const nlohmann::json& j, const char* what, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(std::string("unknown key '") + it.key() + "' in " + what);
}

template <class T>
void opt(const nlohmann::json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace cfgio

inline void to_json(nlohmann::json& j, const Vec2& v) { j = {v.x, v.y}; }
inline void from_json(const nlohmann::json& j, Vec2& v) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("a 2-D position must be [x_m, y_m]");
  v = {j[0].get<double>(), j[1].get<double>()};
}

inline void to_json(nlohmann::json& j, const Cell& c) {
  j = {{"id", c.id},
       {"carrier_freq_mhz", c.carrier_freq_mhz},
       {"bandwidth_prb", c.bandwidth_prb},
       {"tx_power_dbm", c.tx_power_dbm},
       {"position_m", c.position_m},
       {"pathloss_exponent", c.pathloss_exponent}};
}
inline void from_json(const nlohmann::json& j, Cell& c) {
  cfgio::only_keys(j, "cell", {"id", "carrier_freq_mhz", "bandwidth_prb", "tx_power_dbm", "position_m", "pathloss_exponent"});
  cfgio::opt(j, "id", c.id);
  cfgio::opt(j, "carrier_freq_mhz", c.carrier_freq_mhz);
  cfgio::opt(j, "bandwidth_prb", c.bandwidth_prb);
  cfgio::opt(j, "tx_power_dbm", c.tx_power_dbm);
  cfgio::opt(j, "position_m", c.position_m);
  cfgio::opt(j, "pathloss_exponent", c.pathloss_exponent);
}

inline void to_json(nlohmann::json& j, const Rect& r) { j = {{"min_m", r.min_m}, {"max_m", r.max_m}}; }
inline void from_json(const nlohmann::json& j, Rect& r) {
  cfgio::only_keys(j, "service_area", {"min_m", "max_m"});
  cfgio::opt(j, "min_m", r.min_m);
  cfgio::opt(j, "max_m", r.max_m);
}

inline void to_json(nlohmann::json& j, const SectorTopology& t) {
  nlohmann::json sites = nlohmann::json::array();
  for (const auto& bs : t.base_stations) sites.push_back({{"position_m", bs.position_m}, {"sector_azimuths_deg", bs.sector_azimuths_deg}});
  j = {{"cells", t.cells},
       {"base_stations", sites},
       {"controlled", {{"base_station", t.controlled.base_station}, {"sector", t.controlled.sector}}},
       {"service_area", t.service_area}};
}
inline void from_json(const nlohmann::json& j, SectorTopology& t) {
  cfgio::only_keys(j, "topology", {"cells", "base_stations", "controlled", "service_area"});
  if (j.contains("cells")) {
    auto cells = j.at("cells").get<std::vector<Cell>>();
    if (cells.size() != kNumCells) throw ConfigError("topology.cells must list exactly 4 cells");
    for (int c = 0; c < kNumCells; ++c) t.cells[c] = cells[c];
  }
  if (j.contains("base_stations")) {
    t.base_stations.clear();
    for (const auto& b : j.at("base_stations")) {
      cfgio::only_keys(b, "base station", {"position_m", "sector_azimuths_deg"});
      BaseStation bs;
      cfgio::opt(b, "position_m", bs.position_m);
      cfgio::opt(b, "sector_azimuths_deg", bs.sector_azimuths_deg);
      t.base_stations.push_back(bs);
    }
  }
  if (j.contains("controlled")) {
    const auto& c = j.at("controlled");
    cfgio::only_keys(c, "controlled", {"base_station", "sector"});
    cfgio::opt(c, "base_station", t.controlled.base_station);
    cfgio::opt(c, "sector", t.controlled.sector);
  }
  cfgio::opt(j, "service_area", t.service_area);
}

inline void to_json(nlohmann::json& j, const LbBounds& b) {
  j = {{"cio_min_db", b.cio_min_db},
       {"cio_max_db", b.cio_max_db},
       {"threshold_min_dbm", b.threshold_min_dbm},
       {"threshold_max_dbm", b.threshold_max_dbm}};
}
inline void from_json(const nlohmann::json& j, LbBounds& b) {
  cfgio::only_keys(j, "bounds", {"cio_min_db", "cio_max_db", "threshold_min_dbm", "threshold_max_dbm"});
  cfgio::opt(j, "cio_min_db", b.cio_min_db);
  cfgio::opt(j, "cio_max_db", b.cio_max_db);
  cfgio::opt(j, "threshold_min_dbm", b.threshold_min_dbm);
  cfgio::opt(j, "threshold_max_dbm", b.threshold_max_dbm);
}

inline void to_json(nlohmann::json& j, const SimConfig& c) {
  j = {{"hysteresis_db", c.hysteresis_db},
       {"inner_steps_per_hour", c.inner_steps_per_hour},
       {"inner_dt_s", c.inner_dt_s},
       {"noise_floor_dbm", c.noise_floor_dbm},
       {"rng_seed", c.rng_seed},
       {"reference_distance_m", c.reference_distance_m},
       {"prb_bandwidth_hz", c.prb_bandwidth_hz},
       {"max_spectral_efficiency", c.max_spectral_efficiency},
       {"heading_noise_rad", c.heading_noise_rad},
       {"min_speed_mps", c.min_speed_mps},
       {"max_speed_mps", c.max_speed_mps},
       {"max_buffer_bits", c.max_buffer_bits},
       {"shadowing", c.shadowing},
       {"shadowing_sigma_db", c.shadowing_sigma_db},
       {"check_invariants", c.check_invariants},
       {"bounds", c.bounds}};
}
inline void from_json(const nlohmann::json& j, SimConfig& c) {
  cfgio::only_keys(j, "sim",
                   {"hysteresis_db", "inner_steps_per_hour", "inner_dt_s", "noise_floor_dbm", "rng_seed",
                    "reference_distance_m", "prb_bandwidth_hz", "max_spectral_efficiency", "heading_noise_rad",
                    "min_speed_mps", "max_speed_mps", "max_buffer_bits", "shadowing", "shadowing_sigma_db",
                    "check_invariants", "bounds"});
  cfgio::opt(j, "hysteresis_db", c.hysteresis_db);
  cfgio::opt(j, "inner_steps_per_hour", c.inner_steps_per_hour);
  cfgio::opt(j, "inner_dt_s", c.inner_dt_s);
  cfgio::opt(j, "noise_floor_dbm", c.noise_floor_dbm);
  cfgio::opt(j, "rng_seed", c.rng_seed);
  cfgio::opt(j, "reference_distance_m", c.reference_distance_m);
  cfgio::opt(j, "prb_bandwidth_hz", c.prb_bandwidth_hz);
  cfgio::opt(j, "max_spectral_efficiency", c.max_spectral_efficiency);
  cfgio::opt(j, "heading_noise_rad", c.heading_noise_rad);
  cfgio::opt(j, "min_speed_mps", c.min_speed_mps);
  cfgio::opt(j, "max_speed_mps", c.max_speed_mps);
  cfgio::opt(j, "max_buffer_bits", c.max_buffer_bits);
  cfgio::opt(j, "shadowing", c.shadowing);
  cfgio::opt(j, "shadowing_sigma_db", c.shadowing_sigma_db);
  cfgio::opt(j, "check_invariants", c.check_invariants);
  cfgio::opt(j, "bounds", c.bounds);
}

inline void to_json(nlohmann::json& j, const EnvConfig& c) {
  j = {{"history_k", c.history_k},
       {"horizon", c.horizon},
       {"ue_norm", c.ue_norm},
       {"throughput_norm_mbps", c.throughput_norm_mbps}};
}
inline void from_json(const nlohmann::json& j, EnvConfig& c) {
  cfgio::only_keys(j, "env", {"history_k", "horizon", "ue_norm", "throughput_norm_mbps"});
  cfgio::opt(j, "history_k", c.history_k);
  cfgio::opt(j, "horizon", c.horizon);
  cfgio::opt(j, "ue_norm", c.ue_norm);
  cfgio::opt(j, "throughput_norm_mbps", c.throughput_norm_mbps);
}

inline void to_json(nlohmann::json& j, const RewardConfig& c) {
  j = {{"w_avg", c.w_avg},
       {"w_min", c.w_min},
       {"w_sd", c.w_sd},
       {"w_cong", c.w_cong},
       {"t_ref_mbps", c.t_ref_mbps},
       {"sd_reciprocal_cap", c.sd_reciprocal_cap},
       {"epsilon_mbps", c.epsilon_mbps}};
}
inline void from_json(const nlohmann::json& j, RewardConfig& c) {
  cfgio::only_keys(j, "reward", {"w_avg", "w_min", "w_sd", "w_cong", "t_ref_mbps", "sd_reciprocal_cap", "epsilon_mbps"});
  cfgio::opt(j, "w_avg", c.w_avg);
  cfgio::opt(j, "w_min", c.w_min);
  cfgio::opt(j, "w_sd", c.w_sd);
  cfgio::opt(j, "w_cong", c.w_cong);
  cfgio::opt(j, "t_ref_mbps", c.t_ref_mbps);
  cfgio::opt(j, "sd_reciprocal_cap", c.sd_reciprocal_cap);
  cfgio::opt(j, "epsilon_mbps", c.epsilon_mbps);
}

inline void to_json(nlohmann::json& j, const PolicyNetShape& s) {
  j = {{"obs", s.obs}, {"hidden1", s.hidden1}, {"hidden2", s.hidden2}, {"act", s.act}};
}
inline void from_json(const nlohmann::json& j, PolicyNetShape& s) {
  cfgio::only_keys(j, "ppo.net", {"obs", "hidden1", "hidden2", "act"});
  cfgio::opt(j, "obs", s.obs);
  cfgio::opt(j, "hidden1", s.hidden1);
  cfgio::opt(j, "hidden2", s.hidden2);
  cfgio::opt(j, "act", s.act);
}

inline void to_json(nlohmann::json& j, const PpoConfig& c) {
  j = {{"discount", c.discount},
       {"gae_lambda", c.gae_lambda},
       {"clip_ratio", c.clip_ratio},
       {"learning_rate", c.learning_rate},
       {"epochs_per_iter", c.epochs_per_iter},
       {"minibatch_size", c.minibatch_size},
       {"rollout_length", c.rollout_length},
       {"total_interactions", c.total_interactions},
       {"value_coef", c.value_coef},
       {"entropy_coef", c.entropy_coef},
       {"max_grad_norm", c.max_grad_norm},
       {"init_log_std", c.init_log_std},
       {"reward_scale", c.reward_scale},
       {"days_per_reset", c.days_per_reset},
       {"net", c.net},
       {"seed", c.seed}};
}
inline void from_json(const nlohmann::json& j, PpoConfig& c) {
  cfgio::only_keys(j, "ppo",
                   {"discount", "gae_lambda", "clip_ratio", "learning_rate", "epochs_per_iter", "minibatch_size",
                    "rollout_length", "total_interactions", "value_coef", "entropy_coef", "max_grad_norm",
                    "init_log_std", "reward_scale", "days_per_reset", "net", "seed"});
  cfgio::opt(j, "discount", c.discount);
  cfgio::opt(j, "gae_lambda", c.gae_lambda);
  cfgio::opt(j, "clip_ratio", c.clip_ratio);
  cfgio::opt(j, "learning_rate", c.learning_rate);
  cfgio::opt(j, "epochs_per_iter", c.epochs_per_iter);
  cfgio::opt(j, "minibatch_size", c.minibatch_size);
  cfgio::opt(j, "rollout_length", c.rollout_length);
  cfgio::opt(j, "total_interactions", c.total_interactions);
  cfgio::opt(j, "value_coef", c.value_coef);
  cfgio::opt(j, "entropy_coef", c.entropy_coef);
  cfgio::opt(j, "max_grad_norm", c.max_grad_norm);
  cfgio::opt(j, "init_log_std", c.init_log_std);
  cfgio::opt(j, "reward_scale", c.reward_scale);
  cfgio::opt(j, "days_per_reset", c.days_per_reset);
  cfgio::opt(j, "net", c.net);
  cfgio::opt(j, "seed", c.seed);
}

inline void to_json(nlohmann::json& j, const ArchetypeParams& a) {
  j = {{"group", a.group},
       {"ue_count_min", a.ue_count_min},
       {"ue_count_max", a.ue_count_max},
       {"hotspot_distance_min_m", a.hotspot_distance_min_m},
       {"hotspot_distance_max_m", a.hotspot_distance_max_m},
       {"hotspot_radius_m", a.hotspot_radius_m},
       {"hotspot_fraction_min", a.hotspot_fraction_min},
       {"hotspot_fraction_max", a.hotspot_fraction_max},
       {"interarrival_min_ms", a.interarrival_min_ms},
       {"interarrival_max_ms", a.interarrival_max_ms},
       {"diurnal_depth_min", a.diurnal_depth_min},
       {"diurnal_depth_max", a.diurnal_depth_max},
       {"hour_jitter", a.hour_jitter}};
}
inline void from_json(const nlohmann::json& j, ArchetypeParams& a) {
  cfgio::only_keys(j, "archetype",
                   {"group", "ue_count_min", "ue_count_max", "hotspot_distance_min_m", "hotspot_distance_max_m",
                    "hotspot_radius_m", "hotspot_fraction_min", "hotspot_fraction_max", "interarrival_min_ms",
                    "interarrival_max_ms", "diurnal_depth_min", "diurnal_depth_max", "hour_jitter"});
  cfgio::opt(j, "group", a.group);
  cfgio::opt(j, "ue_count_min", a.ue_count_min);
  cfgio::opt(j, "ue_count_max", a.ue_count_max);
  cfgio::opt(j, "hotspot_distance_min_m", a.hotspot_distance_min_m);
  cfgio::opt(j, "hotspot_distance_max_m", a.hotspot_distance_max_m);
  cfgio::opt(j, "hotspot_radius_m", a.hotspot_radius_m);
  cfgio::opt(j, "hotspot_fraction_min", a.hotspot_fraction_min);
  cfgio::opt(j, "hotspot_fraction_max", a.hotspot_fraction_max);
  cfgio::opt(j, "interarrival_min_ms", a.interarrival_min_ms);
  cfgio::opt(j, "interarrival_max_ms", a.interarrival_max_ms);
  cfgio::opt(j, "diurnal_depth_min", a.diurnal_depth_min);
  cfgio::opt(j, "diurnal_depth_max", a.diurnal_depth_max);
  cfgio::opt(j, "hour_jitter", a.hour_jitter);
}

inline void to_json(nlohmann::json& j, const BasicLbConfig& c) {
  j = {{"cio_db", c.cio_db}, {"beta_dbm", c.beta_dbm}, {"gamma_dbm", c.gamma_dbm}};
}
inline void from_json(const nlohmann::json& j, BasicLbConfig& c) {
  cfgio::only_keys(j, "baselines.basic_lb", {"cio_db", "beta_dbm", "gamma_dbm"});
  cfgio::opt(j, "cio_db", c.cio_db);
  cfgio::opt(j, "beta_dbm", c.beta_dbm);
  cfgio::opt(j, "gamma_dbm", c.gamma_dbm);
}

inline void to_json(nlohmann::json& j, const AdaptLbConfig& c) {
  j = {{"high_utilization", c.high_utilization},
       {"low_utilization", c.low_utilization},
       {"cio_step_db", c.cio_step_db},
       {"threshold_step_dbm", c.threshold_step_dbm}};
}
inline void from_json(const nlohmann::json& j, AdaptLbConfig& c) {
  cfgio::only_keys(j, "baselines.adapt_lb", {"high_utilization", "low_utilization", "cio_step_db", "threshold_step_dbm"});
  cfgio::opt(j, "high_utilization", c.high_utilization);
  cfgio::opt(j, "low_utilization", c.low_utilization);
  cfgio::opt(j, "cio_step_db", c.cio_step_db);
  cfgio::opt(j, "threshold_step_dbm", c.threshold_step_dbm);
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  try {
    return nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
}

}  // namespace lbreuse
