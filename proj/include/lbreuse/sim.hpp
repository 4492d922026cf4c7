#pragma once

// Discrete-time simulation of the controlled sector: four co-sited cells on
// different carriers, a random-walk UE population with Poisson packet traffic,
// an equal-share PRB scheduler, handover for active UEs and cell-reselection
// for idle UEs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "lbreuse/errors.hpp"
#include "lbreuse/rng.hpp"
#include "lbreuse/traffic.hpp"

namespace lbreuse {

inline constexpr int kNumCells = 4;
inline constexpr int kFeaturesPerCell = 3;
inline constexpr int kNumPairs = kNumCells * (kNumCells - 1);
inline constexpr int kBaseStations = 7;
inline constexpr int kSectorsPerBs = 3;

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Cell {
  int id = 0;
  double carrier_freq_mhz = 0.0;
  int bandwidth_prb = 1;
  double tx_power_dbm = 0.0;
  Vec2 position_m;
  double pathloss_exponent = 3.0;
};

struct BaseStation {
  Vec2 position_m;
  std::array<double, kSectorsPerBs> sector_azimuths_deg{60.0, 180.0, 300.0};
};

struct SectorRef {
  int base_station = 0;
  int sector = 0;
};

struct Rect {
  Vec2 min_m;
  Vec2 max_m;
  double width() const { return max_m.x - min_m.x; }
  double height() const { return max_m.y - min_m.y; }
  bool contains(Vec2 p) const {
    return p.x >= min_m.x && p.x <= max_m.x && p.y >= min_m.y && p.y <= max_m.y;
  }
};

// Seven-site layout; only the controlled sector is simulated, the remaining
// sectors are background context.
struct SectorTopology {
  std::array<Cell, kNumCells> cells{};
  std::vector<BaseStation> base_stations;
  SectorRef controlled;
  Rect service_area;

  std::vector<SectorRef> neighbor_sectors() const {
    std::vector<SectorRef> out;
    for (int b = 0; b < static_cast<int>(base_stations.size()); ++b)
      for (int s = 0; s < kSectorsPerBs; ++s)
        if (b != controlled.base_station || s != controlled.sector) out.push_back({b, s});
    return out;
  }

  void validate() const {
    for (int i = 0; i < kNumCells; ++i) {
      const Cell& c = cells[i];
      if (c.id != i) throw ConfigError("cell ids must be contiguous from 0");
      if (c.bandwidth_prb < 1) throw ConfigError("cell bandwidth_prb must be >= 1");
      if (!(c.pathloss_exponent >= 2.0)) throw ConfigError("cell pathloss_exponent must be >= 2");
      if (!(c.carrier_freq_mhz > 0.0)) throw ConfigError("cell carrier_freq_mhz must be positive");
    }
    if (base_stations.size() != kBaseStations) throw ConfigError("topology needs exactly 7 base stations");
    if (controlled.base_station < 0 || controlled.base_station >= kBaseStations || controlled.sector < 0 ||
        controlled.sector >= kSectorsPerBs)
      throw ConfigError("controlled sector reference out of range");
    if (!(service_area.width() > 0.0 && service_area.height() > 0.0))
      throw ConfigError("service area must have positive extent");
  }

  // Center site at the origin, six neighbours on a 500 m hexagonal ring. The
  // controlled sector is the north-east sector (azimuth 60 deg) of the center
  // site; its four cells share the site position. Carrier and power choices
  // give nested best-server rings: cell 3 closest, then 2, 1, and 0 at the edge.
  static SectorTopology standard() {
    SectorTopology t;
    t.base_stations.push_back({{0.0, 0.0}});
    constexpr double isd = 500.0;
    for (int k = 0; k < 6; ++k) {
      const double ang = std::numbers::pi / 6.0 + k * std::numbers::pi / 3.0;
      t.base_stations.push_back({{isd * std::cos(ang), isd * std::sin(ang)}});
    }
    t.controlled = {0, 0};
    t.service_area = {{0.0, 0.0}, {300.0, 300.0}};
    t.cells[0] = {0, 800.0, 6, 2.5, {0.0, 0.0}, 3.5};
    t.cells[1] = {1, 1800.0, 10, 13.8, {0.0, 0.0}, 3.8};
    t.cells[2] = {2, 2100.0, 10, 18.8, {0.0, 0.0}, 4.1};
    t.cells[3] = {3, 2600.0, 5, 23.5, {0.0, 0.0}, 4.4};
    return t;
  }
};

struct LbBounds {
  double cio_min_db = -6.0;
  double cio_max_db = 6.0;
  double threshold_min_dbm = -110.0;
  double threshold_max_dbm = -80.0;
};

struct SimConfig {
  double hysteresis_db = 3.0;
  int inner_steps_per_hour = 300;
  double inner_dt_s = 1.0;
  double noise_floor_dbm = -110.0;
  std::uint64_t rng_seed = 1;
  double reference_distance_m = 10.0;
  double prb_bandwidth_hz = 180e3;
  double max_spectral_efficiency = 6.0;
  double heading_noise_rad = 1.5;
  double min_speed_mps = 1.0;
  double max_speed_mps = 5.0;
  double max_buffer_bits = 20e6;
  bool shadowing = false;
  double shadowing_sigma_db = 6.0;
  bool check_invariants = false;
  LbBounds bounds;

  double hour_duration_s() const { return inner_steps_per_hour * inner_dt_s; }

  void validate() const {
    if (inner_steps_per_hour < 1 || !(inner_dt_s > 0.0)) throw ConfigError("inner step count and dt must be positive");
    if (!(hysteresis_db >= 0.0)) throw ConfigError("hysteresis must be nonnegative");
    if (!(reference_distance_m > 0.0)) throw ConfigError("reference distance must be positive");
    if (!(min_speed_mps >= 0.0 && max_speed_mps >= min_speed_mps)) throw ConfigError("invalid speed range");
    if (!(bounds.cio_min_db <= bounds.cio_max_db && bounds.threshold_min_dbm <= bounds.threshold_max_dbm))
      throw ConfigError("invalid LB parameter bounds");
  }
};

// Load-balancing control parameters for every ordered pair (i, j) of cells.
// Diagonal entries are ignored.
struct LbParams {
  using Matrix = std::array<std::array<double, kNumCells>, kNumCells>;
  Matrix cio_db{};
  Matrix beta_dbm{};
  Matrix gamma_dbm{};

  static LbParams uniform(double cio_db, double beta_dbm, double gamma_dbm) {
    LbParams p;
    for (int i = 0; i < kNumCells; ++i)
      for (int j = 0; j < kNumCells; ++j) {
        p.cio_db[i][j] = i == j ? 0.0 : cio_db;
        p.beta_dbm[i][j] = i == j ? 0.0 : beta_dbm;
        p.gamma_dbm[i][j] = i == j ? 0.0 : gamma_dbm;
      }
    return p;
  }

  bool within(const LbBounds& b) const {
    for (int i = 0; i < kNumCells; ++i)
      for (int j = 0; j < kNumCells; ++j) {
        if (i == j) continue;
        if (!(cio_db[i][j] >= b.cio_min_db && cio_db[i][j] <= b.cio_max_db)) return false;
        if (!(beta_dbm[i][j] >= b.threshold_min_dbm && beta_dbm[i][j] <= b.threshold_max_dbm)) return false;
        if (!(gamma_dbm[i][j] >= b.threshold_min_dbm && gamma_dbm[i][j] <= b.threshold_max_dbm)) return false;
      }
    return true;
  }

  LbParams clamped(const LbBounds& b) const {
    LbParams p = *this;
    for (int i = 0; i < kNumCells; ++i)
      for (int j = 0; j < kNumCells; ++j) {
        if (i == j) continue;
        p.cio_db[i][j] = std::clamp(cio_db[i][j], b.cio_min_db, b.cio_max_db);
        p.beta_dbm[i][j] = std::clamp(beta_dbm[i][j], b.threshold_min_dbm, b.threshold_max_dbm);
        p.gamma_dbm[i][j] = std::clamp(gamma_dbm[i][j], b.threshold_min_dbm, b.threshold_max_dbm);
      }
    return p;
  }

  friend bool operator==(const LbParams&, const LbParams&) = default;
};

// Ordered pairs (i, j), i != j, in row-major order. Shared by every consumer
// that flattens LbParams.
inline std::array<std::array<int, 2>, kNumPairs> ordered_pairs() {
  std::array<std::array<int, 2>, kNumPairs> out{};
  int k = 0;
  for (int i = 0; i < kNumCells; ++i)
    for (int j = 0; j < kNumCells; ++j)
      if (i != j) out[k++] = {i, j};
  return out;
}

enum class UeMode { Idle, Active };

struct UserEquipment {
  int id = 0;
  Vec2 position_m;
  double heading_rad = 0.0;
  double speed_mps = 3.0;
  UeMode mode = UeMode::Idle;
  int attached_cell = 0;
  double buffer_bits = 0.0;
  double next_arrival_s = 0.0;
  std::array<double, kNumCells> shadow_db{};
};

struct LinkMeasurement {
  int ue_id = 0;
  std::array<double, kNumCells> rsrp_dbm{};
};

// Free-space loss at the reference distance, f in MHz and d in meters.
inline double reference_pathloss_db(double carrier_freq_mhz, double reference_distance_m) {
  return 20.0 * std::log10(reference_distance_m) + 20.0 * std::log10(carrier_freq_mhz) - 27.55;
}

// Log-distance path loss, clamped at the reference distance.
inline double compute_rsrp(Vec2 ue_position, const Cell& cell, const SimConfig& config) {
  const double d0 = config.reference_distance_m;
  const double d = std::max(distance(ue_position, cell.position_m), d0);
  return cell.tx_power_dbm - (reference_pathloss_db(cell.carrier_freq_mhz, d0) +
                              10.0 * cell.pathloss_exponent * std::log10(d / d0));
}

// Active-UE handover: neighbour j beats serving cell i by offset plus hysteresis.
inline bool handover_triggered(double f_i, double f_j, double a_ij, double h) { return f_j > f_i + a_ij + h; }

// Idle-UE reselection: camped cell weak and neighbour strong enough.
inline bool reselection_triggered(double f_i, double f_j, double beta_ij, double gamma_ij) {
  return f_i < beta_ij && f_j > gamma_ij;
}

// bits/s delivered by one PRB at the given RSRP.
inline double rate_per_prb(double rsrp_dbm, const SimConfig& config) {
  const double snr = std::pow(10.0, (rsrp_dbm - config.noise_floor_dbm) / 10.0);
  return config.prb_bandwidth_hz * std::min(std::log2(1.0 + snr), config.max_spectral_efficiency);
}

struct CellObservation {
  double active_ues = 0.0;
  double prb_utilization = 0.0;
  double throughput_mbps = 0.0;

  friend bool operator==(const CellObservation&, const CellObservation&) = default;
};

using CellObservations = std::array<CellObservation, kNumCells>;

struct StepStats {
  std::array<int, kNumCells> active_ues{};
  std::array<double, kNumCells> prb_utilization{};
  std::array<double, kNumCells> delivered_bits{};
  int handovers = 0;
  int reselections = 0;
};

struct IntervalResult {
  CellObservations observations{};
  std::array<double, kNumCells> delivered_bits{};
  double duration_s = 0.0;
  int handovers = 0;
  int reselections = 0;
};

namespace detail {

// Pick the strongest eligible neighbour; ties go to the lower cell id.
template <class Eligible>
int best_target(const std::array<double, kNumCells>& rsrp, int serving, Eligible&& eligible) {
  int best = -1;
  for (int j = 0; j < kNumCells; ++j) {
    if (j == serving || !eligible(j)) continue;
    if (best < 0 || rsrp[j] > rsrp[best]) best = j;
  }
  return best;
}

}  // namespace detail

// One simulation instance. Not thread-safe; independent instances share no state.
//
// Randomness is split into three streams (mobility, traffic, placement) whose
// consumption never depends on the LB parameters, so two runs with the same
// seed see identical exogenous randomness under different policies.
class Simulator {
 public:
  Simulator(SectorTopology topology, SimConfig config)
      : topology_(std::move(topology)),
        config_(config),
        mobility_rng_(mix_seed(config.rng_seed, 1)),
        traffic_rng_(mix_seed(config.rng_seed, 2)),
        placement_rng_(mix_seed(config.rng_seed, 3)) {
    topology_.validate();
    config_.validate();
    // Cells sharing a site share the distance term of the path loss.
    for (int c = 0; c < kNumCells; ++c) {
      const Cell& cell = topology_.cells[c];
      site_of_cell_[c] = -1;
      for (int s = 0; s < static_cast<int>(sites_.size()); ++s)
        if (sites_[s] == cell.position_m) site_of_cell_[c] = s;
      if (site_of_cell_[c] < 0) {
        site_of_cell_[c] = static_cast<int>(sites_.size());
        sites_.push_back(cell.position_m);
      }
      rsrp_at_d0_[c] = cell.tx_power_dbm - reference_pathloss_db(cell.carrier_freq_mhz, config_.reference_distance_m);
    }
  }

  const SectorTopology& topology() const { return topology_; }
  const SimConfig& config() const { return config_; }
  const std::vector<UserEquipment>& ues() const { return ues_; }
  std::vector<UserEquipment>& mutable_ues() { return ues_; }
  double clock_s() const { return clock_s_; }
  const HourProfile& profile() const { return profile_; }

  // Install the traffic profile of a new hour: resize the population, then
  // re-place every UE (hotspot members first, the rest uniform) and let it
  // camp on its strongest cell. Buffers carry over.
  void apply_profile(const HourProfile& profile) {
    profile.validate();
    profile_ = profile;
    const int n = profile.ue_count;
    if (static_cast<int>(ues_.size()) > n) ues_.resize(n);
    while (static_cast<int>(ues_.size()) < n) {
      UserEquipment ue;
      ue.id = next_ue_id_++;
      ues_.push_back(ue);
    }

    const Rect& area = topology_.service_area;
    int idx = 0;
    auto place = [&](UserEquipment& ue, const Hotspot* hs) {
      if (hs != nullptr) {
        const double r = hs->radius_m * std::sqrt(placement_rng_.uniform());
        const double th = 2.0 * std::numbers::pi * placement_rng_.uniform();
        ue.position_m = {std::clamp(hs->center_m.x + r * std::cos(th), area.min_m.x, area.max_m.x),
                         std::clamp(hs->center_m.y + r * std::sin(th), area.min_m.y, area.max_m.y)};
      } else {
        ue.position_m = {placement_rng_.uniform(area.min_m.x, area.max_m.x),
                         placement_rng_.uniform(area.min_m.y, area.max_m.y)};
      }
      ue.heading_rad = 2.0 * std::numbers::pi * placement_rng_.uniform();
      ue.speed_mps = placement_rng_.uniform(config_.min_speed_mps, config_.max_speed_mps);
      for (auto& s : ue.shadow_db) s = config_.shadowing ? placement_rng_.normal(0.0, config_.shadowing_sigma_db) : 0.0;
      ue.attached_cell = strongest_cell(measure_rsrp(ue));
      ue.next_arrival_s = clock_s_ + draw_interarrival();
    };
    for (const auto& hs : profile.hotspots) {
      const int members = static_cast<int>(std::lround(hs.ue_fraction * n));
      for (int k = 0; k < members && idx < n; ++k) place(ues_[idx++], &hs);
    }
    while (idx < n) place(ues_[idx++], nullptr);
  }

  // Advance one inner step of inner_dt_s seconds.
  StepStats step_inner(const LbParams& params) {
    if (!params.within(config_.bounds)) throw InvalidArgument("LB parameters outside bounds (malformed action)");
    StepStats stats;
    const double dt = config_.inner_dt_s;
    const double t_end = clock_s_ + dt;

    move_ues(dt);
    generate_arrivals(t_end);

    rsrp_.resize(ues_.size());
    for (std::size_t u = 0; u < ues_.size(); ++u) rsrp_[u] = measure_rsrp(ues_[u]);

    schedule(stats, dt);

    for (std::size_t u = 0; u < ues_.size(); ++u) {
      UserEquipment& ue = ues_[u];
      const auto& f = rsrp_[u];
      const int i = ue.attached_cell;
      int target = -1;
      if (ue.mode == UeMode::Active) {
        target = detail::best_target(f, i, [&](int j) {
          return handover_triggered(f[i], f[j], params.cio_db[i][j], config_.hysteresis_db);
        });
        if (target >= 0) ++stats.handovers;
      } else {
        target = detail::best_target(f, i, [&](int j) {
          return reselection_triggered(f[i], f[j], params.beta_dbm[i][j], params.gamma_dbm[i][j]);
        });
        if (target >= 0) ++stats.reselections;
      }
      if (target >= 0) ue.attached_cell = target;
    }

    clock_s_ = t_end;
    if (config_.check_invariants) check_invariants();
    return stats;
  }

  // One control interval (one logical hour) with parameters held fixed.
  IntervalResult run_control_interval(const LbParams& params, const HourProfile& profile) {
    if (!params.within(config_.bounds)) throw InvalidArgument("LB parameters outside bounds (malformed action)");
    apply_profile(profile);
    IntervalResult out;
    std::array<double, kNumCells> active_sum{}, util_sum{};
    const int steps = config_.inner_steps_per_hour;
    for (int s = 0; s < steps; ++s) {
      const StepStats st = step_inner(params);
      for (int c = 0; c < kNumCells; ++c) {
        active_sum[c] += st.active_ues[c];
        util_sum[c] += st.prb_utilization[c];
        out.delivered_bits[c] += st.delivered_bits[c];
      }
      out.handovers += st.handovers;
      out.reselections += st.reselections;
    }
    out.duration_s = config_.hour_duration_s();
    for (int c = 0; c < kNumCells; ++c) {
      out.observations[c].active_ues = active_sum[c] / steps;
      out.observations[c].prb_utilization = util_sum[c] / steps;
      out.observations[c].throughput_mbps = out.delivered_bits[c] / out.duration_s / 1e6;
    }
    return out;
  }

  LinkMeasurement measure(const UserEquipment& ue) const { return {ue.id, measure_rsrp(ue)}; }

  // Throws if any population invariant is broken.
  void check_invariants() const {
    for (const auto& ue : ues_) {
      if (ue.attached_cell < 0 || ue.attached_cell >= kNumCells) throw NumericalError("UE attached to no valid cell");
      if (!(ue.buffer_bits >= 0.0) || !std::isfinite(ue.buffer_bits)) throw NumericalError("UE buffer invalid");
      if ((ue.mode == UeMode::Active) != (ue.buffer_bits > 0.0)) throw NumericalError("UE mode/buffer mismatch");
      if (!std::isfinite(ue.position_m.x) || !std::isfinite(ue.position_m.y)) throw NumericalError("UE position invalid");
    }
  }

 private:
  // Same values as compute_rsrp, with the distance term shared per site.
  std::array<double, kNumCells> measure_rsrp(const UserEquipment& ue) const {
    std::array<double, kNumCells> log_ratio{};
    const double d0 = config_.reference_distance_m;
    for (std::size_t s = 0; s < sites_.size(); ++s) {
      const double d = std::max(distance(ue.position_m, sites_[s]), d0);
      log_ratio[s] = std::log10(d / d0);
    }
    std::array<double, kNumCells> f{};
    for (int c = 0; c < kNumCells; ++c)
      f[c] = rsrp_at_d0_[c] - 10.0 * topology_.cells[c].pathloss_exponent * log_ratio[site_of_cell_[c]] + ue.shadow_db[c];
    return f;
  }

  static int strongest_cell(const std::array<double, kNumCells>& f) {
    int best = 0;
    for (int c = 1; c < kNumCells; ++c)
      if (f[c] > f[best]) best = c;
    return best;
  }

  double draw_interarrival() { return traffic_rng_.exponential(1000.0 / profile_.mean_interarrival_ms); }

  void move_ues(double dt) {
    const Rect& a = topology_.service_area;
    constexpr double pi = std::numbers::pi;
    for (auto& ue : ues_) {
      double h = ue.heading_rad + mobility_rng_.normal(0.0, config_.heading_noise_rad);
      double x = ue.position_m.x + ue.speed_mps * dt * std::cos(h);
      double y = ue.position_m.y + ue.speed_mps * dt * std::sin(h);
      if (x < a.min_m.x) { x = 2.0 * a.min_m.x - x; h = pi - h; }
      if (x > a.max_m.x) { x = 2.0 * a.max_m.x - x; h = pi - h; }
      if (y < a.min_m.y) { y = 2.0 * a.min_m.y - y; h = -h; }
      if (y > a.max_m.y) { y = 2.0 * a.max_m.y - y; h = -h; }
      ue.position_m = {std::clamp(x, a.min_m.x, a.max_m.x), std::clamp(y, a.min_m.y, a.max_m.y)};
      if (h > pi || h < -pi) h -= 2.0 * pi * std::floor((h + pi) / (2.0 * pi));
      ue.heading_rad = h;
    }
  }

  void generate_arrivals(double t_end) {
    const double lo = 1000.0 * profile_.packet_size_min_kb;
    const double hi = 1000.0 * profile_.packet_size_max_kb;
    for (auto& ue : ues_) {
      while (ue.next_arrival_s < t_end) {
        ue.buffer_bits = std::min(ue.buffer_bits + traffic_rng_.uniform(lo, hi), config_.max_buffer_bits);
        ue.next_arrival_s += draw_interarrival();
      }
      if (ue.buffer_bits > 0.0) ue.mode = UeMode::Active;
    }
  }

  // Equal PRB split among the active UEs of each cell.
  void schedule(StepStats& stats, double dt) {
    for (const auto& ue : ues_)
      if (ue.mode == UeMode::Active) ++stats.active_ues[ue.attached_cell];
    std::array<double, kNumCells> used_prb{};
    for (std::size_t u = 0; u < ues_.size(); ++u) {
      UserEquipment& ue = ues_[u];
      if (ue.mode != UeMode::Active) continue;
      const int c = ue.attached_cell;
      const double share = static_cast<double>(topology_.cells[c].bandwidth_prb) / stats.active_ues[c];
      const double per_prb_bits = rate_per_prb(rsrp_[u][c], config_) * dt;
      const double sent = std::min(ue.buffer_bits, share * per_prb_bits);
      ue.buffer_bits -= sent;
      if (ue.buffer_bits < 1e-9) ue.buffer_bits = 0.0;
      stats.delivered_bits[c] += sent;
      used_prb[c] += sent / per_prb_bits;
      if (ue.buffer_bits == 0.0) ue.mode = UeMode::Idle;
    }
    for (int c = 0; c < kNumCells; ++c)
      stats.prb_utilization[c] = std::min(used_prb[c] / topology_.cells[c].bandwidth_prb, 1.0);
  }

  SectorTopology topology_;
  SimConfig config_;
  Rng mobility_rng_;
  Rng traffic_rng_;
  Rng placement_rng_;
  std::vector<Vec2> sites_;
  std::array<int, kNumCells> site_of_cell_{};
  std::array<double, kNumCells> rsrp_at_d0_{};
  std::vector<UserEquipment> ues_;
  std::vector<std::array<double, kNumCells>> rsrp_;
  HourProfile profile_;
  double clock_s_ = 0.0;
  int next_ue_id_ = 0;
};

}  // namespace lbreuse
