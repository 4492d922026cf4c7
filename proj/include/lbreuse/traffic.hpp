#pragma once

#include <string>
#include <vector>

#include "lbreuse/errors.hpp"

namespace lbreuse {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline bool operator==(const Vec2& a, const Vec2& b) { return a.x == b.x && a.y == b.y; }

// Allowed ranges for generated traffic.
inline constexpr double kMinInterarrivalMs = 10.0;
inline constexpr double kMaxInterarrivalMs = 320.0;
inline constexpr double kMinPacketKb = 50.0;
inline constexpr double kMaxPacketKb = 2000.0;

struct Hotspot {
  Vec2 center_m;
  double radius_m = 0.0;
  double ue_fraction = 0.0;
};

inline bool operator==(const Hotspot& a, const Hotspot& b) {
  return a.center_m == b.center_m && a.radius_m == b.radius_m && a.ue_fraction == b.ue_fraction;
}

// Traffic conditions for one simulated hour. UEs not claimed by a hotspot are
// spread uniformly over the service area.
struct HourProfile {
  int ue_count = 0;
  std::vector<Hotspot> hotspots;
  double mean_interarrival_ms = 200.0;
  double packet_size_min_kb = 50.0;
  double packet_size_max_kb = 150.0;

  // Empty string when every field is within range, otherwise the first violation.
  std::string violation() const {
    if (ue_count < 0) return "ue_count must be nonnegative";
    if (!(mean_interarrival_ms >= kMinInterarrivalMs && mean_interarrival_ms <= kMaxInterarrivalMs))
      return "mean_interarrival_ms outside [10, 320]";
    if (!(packet_size_min_kb >= kMinPacketKb && packet_size_max_kb <= kMaxPacketKb &&
          packet_size_min_kb <= packet_size_max_kb))
      return "packet_size_range_kb not a sub-range of [50, 2000]";
    double total = 0.0;
    for (const auto& h : hotspots) {
      if (!(h.radius_m > 0.0)) return "hotspot radius must be positive";
      if (!(h.ue_fraction >= 0.0)) return "hotspot ue_fraction must be nonnegative";
      total += h.ue_fraction;
    }
    if (total > 1.0 + 1e-12) return "hotspot ue_fraction sum exceeds 1";
    return {};
  }

  void validate() const {
    if (auto v = violation(); !v.empty()) throw ConfigError("invalid hour profile: " + v);
  }
};

inline bool operator==(const HourProfile& a, const HourProfile& b) {
  return a.ue_count == b.ue_count && a.hotspots == b.hotspots &&
         a.mean_interarrival_ms == b.mean_interarrival_ms &&
         a.packet_size_min_kb == b.packet_size_min_kb && a.packet_size_max_kb == b.packet_size_max_kb;
}

}  // namespace lbreuse
