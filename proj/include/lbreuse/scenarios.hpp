#pragma once

// Synthetic week-long traffic scenarios built from per-group archetypes,
// their daily traffic signatures, and the train/test split.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lbreuse/errors.hpp"
#include "lbreuse/rng.hpp"
#include "lbreuse/sim.hpp"
#include "lbreuse/traffic.hpp"

namespace lbreuse {

inline constexpr int kHoursPerDay = 24;
inline constexpr int kDaysPerWeek = 7;
inline constexpr int kHoursPerWeek = kHoursPerDay * kDaysPerWeek;
inline constexpr int kSignatureLength = kHoursPerDay * kNumCells * kFeaturesPerCell;

struct ScenarioSpec {
  int id = 0;
  std::optional<int> group_hint;
  std::vector<HourProfile> hours;
  std::uint64_t rng_seed = 0;

  const HourProfile& hour(int hour_of_week) const { return hours.at(((hour_of_week % kHoursPerWeek) + kHoursPerWeek) % kHoursPerWeek); }

  double mean_ue_count() const {
    double s = 0.0;
    for (const auto& h : hours) s += h.ue_count;
    return hours.empty() ? 0.0 : s / hours.size();
  }

  // Empty when the scenario satisfies every range invariant.
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    if (hours.size() != kHoursPerWeek)
      out.push_back("scenario " + std::to_string(id) + ": expected 168 hourly profiles, got " +
                    std::to_string(hours.size()));
    for (std::size_t h = 0; h < hours.size(); ++h) {
      if (auto v = hours[h].violation(); !v.empty())
        out.push_back("scenario " + std::to_string(id) + " hour " + std::to_string(h) + ": " + v);
      else if (hours[h].ue_count < 1)
        out.push_back("scenario " + std::to_string(id) + " hour " + std::to_string(h) + ": ue_count must be positive");
    }
    return out;
  }

  void validate() const {
    auto v = violations();
    if (!v.empty()) throw ConfigError(v.front());
  }
};

// One traffic archetype. Hotspots are placed at a distance band from the site,
// which selects the cell whose best-server ring they fall into.
struct ArchetypeParams {
  int group = 1;
  double ue_count_min = 24.0;
  double ue_count_max = 36.0;
  double hotspot_distance_min_m = 265.0;
  double hotspot_distance_max_m = 320.0;
  double hotspot_radius_m = 35.0;
  double hotspot_fraction_min = 0.5;
  double hotspot_fraction_max = 0.65;
  double interarrival_min_ms = 150.0;
  double interarrival_max_ms = 250.0;
  double diurnal_depth_min = 0.4;
  double diurnal_depth_max = 0.6;
  double hour_jitter = 0.06;
};

// Group 1: heavy hotspot on the edge cell 0. Group 2: heavy hotspot on the
// innermost cell 3. Group 3: light traffic everywhere.
inline std::vector<ArchetypeParams> default_archetypes() {
  ArchetypeParams g1;
  ArchetypeParams g2 = g1;
  g2.group = 2;
  g2.hotspot_distance_min_m = 25.0;
  g2.hotspot_distance_max_m = 65.0;
  g2.hotspot_radius_m = 25.0;
  ArchetypeParams g3 = g1;
  g3.group = 3;
  g3.ue_count_min = 6.0;
  g3.ue_count_max = 10.0;
  g3.hotspot_distance_min_m = 60.0;
  g3.hotspot_distance_max_m = 300.0;
  g3.hotspot_fraction_min = 0.1;
  g3.hotspot_fraction_max = 0.25;
  g3.interarrival_min_ms = 220.0;
  g3.interarrival_max_ms = 320.0;
  return {g1, g2, g3};
}

// count_per_group scenarios per archetype, ids assigned consecutively group by
// group. Within a group the diurnal peak hour is spread evenly so scenarios of
// the same archetype remain distinguishable.
inline std::vector<ScenarioSpec> generate_scenario_set(const std::vector<ArchetypeParams>& archetypes,
                                                       int count_per_group, std::uint64_t seed) {
  if (count_per_group < 1) throw InvalidArgument("count_per_group must be >= 1");
  std::vector<ScenarioSpec> out;
  int id = 0;
  for (const auto& arch : archetypes) {
    for (int s = 0; s < count_per_group; ++s, ++id) {
      ScenarioSpec spec;
      spec.id = id;
      spec.group_hint = arch.group;
      spec.rng_seed = mix_seed(seed, 5000 + id);
      Rng rng(mix_seed(seed, 1000 + id));
      auto between = [&](double lo, double hi) { return rng.uniform(lo, hi); };
      auto jitter = [&] { return rng.normal(0.0, arch.hour_jitter); };

      const double base_ues = between(arch.ue_count_min, arch.ue_count_max);
      const double depth = between(arch.diurnal_depth_min, arch.diurnal_depth_max);
      const double peak_hour = 8.0 + 12.0 * (s + 0.5) / count_per_group + between(-0.5, 0.5);
      const double fraction = between(arch.hotspot_fraction_min, arch.hotspot_fraction_max);
      const double interarrival = between(arch.interarrival_min_ms, arch.interarrival_max_ms);
      const double pkt_min = between(50.0, 80.0);
      const double pkt_max = pkt_min + between(80.0, 150.0);

      spec.hours.reserve(kHoursPerWeek);
      for (int h = 0; h < kHoursPerWeek; ++h) {
        const double phase = 2.0 * std::numbers::pi * ((h % kHoursPerDay) - peak_hour) / kHoursPerDay;
        const double level = 1.0 - depth * 0.5 * (1.0 - std::cos(phase));
        HourProfile p;
        p.ue_count = std::max(1, static_cast<int>(std::lround(base_ues * level * (1.0 + jitter()))));
        const double r = between(arch.hotspot_distance_min_m, arch.hotspot_distance_max_m);
        const double th = between(0.15, 0.35) * std::numbers::pi;
        const double f = std::clamp(fraction * (1.0 + jitter()), 0.0, 1.0);
        p.hotspots.push_back({{r * std::cos(th), r * std::sin(th)}, arch.hotspot_radius_m, f});
        p.mean_interarrival_ms =
            std::clamp(interarrival * (1.0 + jitter()), kMinInterarrivalMs, kMaxInterarrivalMs);
        p.packet_size_min_kb = pkt_min;
        p.packet_size_max_kb = pkt_max;
        spec.hours.push_back(std::move(p));
      }
      out.push_back(std::move(spec));
    }
  }
  return out;
}

// ---- JSON -----------------------------------------------------------------

inline void to_json(nlohmann::json& j, const Hotspot& h) {
  j = {{"center_x_m", h.center_m.x}, {"center_y_m", h.center_m.y}, {"radius_m", h.radius_m}, {"ue_fraction", h.ue_fraction}};
}
inline void from_json(const nlohmann::json& j, Hotspot& h) {
  h.center_m = {j.at("center_x_m").get<double>(), j.at("center_y_m").get<double>()};
  h.radius_m = j.at("radius_m").get<double>();
  h.ue_fraction = j.at("ue_fraction").get<double>();
}
inline void to_json(nlohmann::json& j, const HourProfile& p) {
  j = {{"ue_count", p.ue_count},
       {"hotspots", p.hotspots},
       {"mean_interarrival_ms", p.mean_interarrival_ms},
       {"packet_size_min_kb", p.packet_size_min_kb},
       {"packet_size_max_kb", p.packet_size_max_kb}};
}
inline void from_json(const nlohmann::json& j, HourProfile& p) {
  p.ue_count = j.at("ue_count").get<int>();
  p.hotspots = j.at("hotspots").get<std::vector<Hotspot>>();
  p.mean_interarrival_ms = j.at("mean_interarrival_ms").get<double>();
  p.packet_size_min_kb = j.at("packet_size_min_kb").get<double>();
  p.packet_size_max_kb = j.at("packet_size_max_kb").get<double>();
}
inline void to_json(nlohmann::json& j, const ScenarioSpec& s) {
  j = {{"id", s.id}, {"rng_seed", s.rng_seed}, {"hours", s.hours}};
  j["group_hint"] = s.group_hint ? nlohmann::json(*s.group_hint) : nlohmann::json(nullptr);
}
inline void from_json(const nlohmann::json& j, ScenarioSpec& s) {
  s.id = j.at("id").get<int>();
  s.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  s.hours = j.at("hours").get<std::vector<HourProfile>>();
  if (j.contains("group_hint") && !j.at("group_hint").is_null()) s.group_hint = j.at("group_hint").get<int>();
  else s.group_hint.reset();
}

inline void save_scenarios(const std::string& path, const std::vector<ScenarioSpec>& scenarios) {
  std::ofstream f(path);
  if (!f) throw ArtifactError("cannot write " + path);
  f << nlohmann::json{{"format", "lbreuse-scenarios"}, {"version", 1}, {"scenarios", scenarios}}.dump(1) << '\n';
}

inline std::vector<ScenarioSpec> load_scenarios(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ArtifactError("missing scenario file " + path + " (run `scenario generate` first)");
  nlohmann::json j;
  try {
    f >> j;
    return j.at("scenarios").get<std::vector<ScenarioSpec>>();
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError("corrupt scenario file " + path + ": " + e.what());
  }
}

// ---- Train/test split -------------------------------------------------------

struct ScenarioSplit {
  std::vector<int> train;  // indices into the scenario list, sorted ascending
  std::vector<int> test;
};

// Draw per_group_train members of every cluster (by label) for training; the
// rest go to test.
inline ScenarioSplit split_train_test(int scenario_count, const std::vector<int>& labels, int per_group_train,
                                      std::uint64_t seed) {
  if (static_cast<int>(labels.size()) != scenario_count) throw InvalidArgument("one label per scenario required");
  std::map<int, std::vector<int>> members;
  for (int i = 0; i < scenario_count; ++i) members[labels[i]].push_back(i);
  Rng rng(mix_seed(seed, 77));
  ScenarioSplit split;
  for (auto& [label, idx] : members) {
    if (static_cast<int>(idx.size()) <= per_group_train)
      throw InvalidArgument("cluster " + std::to_string(label) + " has " + std::to_string(idx.size()) +
                            " members; needs more than " + std::to_string(per_group_train));
    rng.shuffle(idx);
    split.train.insert(split.train.end(), idx.begin(), idx.begin() + per_group_train);
    split.test.insert(split.test.end(), idx.begin() + per_group_train, idx.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

}  // namespace lbreuse
