#pragma once

// Daily traffic signatures of scenarios and K-means over them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "lbreuse/errors.hpp"
#include "lbreuse/rng.hpp"
#include "lbreuse/rules.hpp"
#include "lbreuse/scenarios.hpp"
#include "lbreuse/sim.hpp"

namespace lbreuse {

struct DailyTrafficSignature {
  int scenario_id = 0;
  // [hour][cell][feature] with features (active UEs, PRB utilization, throughput Mbps).
  std::vector<double> features;
};

// Run the scenario for one week under BasicLB and average each
// (hour-of-day, cell, feature) over the 7 days.
inline DailyTrafficSignature extract_signature(const ScenarioSpec& scenario, const SectorTopology& topology,
                                               SimConfig config) {
  config.rng_seed = scenario.rng_seed;
  Simulator sim(topology, config);
  const LbParams params = basic_lb();
  DailyTrafficSignature sig;
  sig.scenario_id = scenario.id;
  sig.features.assign(kSignatureLength, 0.0);
  for (int h = 0; h < kHoursPerWeek; ++h) {
    const IntervalResult r = sim.run_control_interval(params, scenario.hour(h));
    const int base = (h % kHoursPerDay) * kNumCells * kFeaturesPerCell;
    for (int c = 0; c < kNumCells; ++c) {
      const auto& o = r.observations[c];
      sig.features[base + c * kFeaturesPerCell + 0] += o.active_ues / kDaysPerWeek;
      sig.features[base + c * kFeaturesPerCell + 1] += o.prb_utilization / kDaysPerWeek;
      sig.features[base + c * kFeaturesPerCell + 2] += o.throughput_mbps / kDaysPerWeek;
    }
  }
  return sig;
}

// Per-dimension z-score across the set. Constant dimensions map to 0.
inline std::vector<std::vector<double>> zscore(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t d = rows.front().size();
  std::vector<double> mean(d, 0.0), sd(d, 0.0);
  for (const auto& r : rows) {
    if (r.size() != d) throw InvalidArgument("rows of unequal length");
    for (std::size_t k = 0; k < d; ++k) mean[k] += r[k];
  }
  for (auto& m : mean) m /= rows.size();
  for (const auto& r : rows)
    for (std::size_t k = 0; k < d; ++k) sd[k] += (r[k] - mean[k]) * (r[k] - mean[k]);
  for (auto& s : sd) s = std::sqrt(s / rows.size());
  std::vector<std::vector<double>> out(rows.size(), std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < d; ++k) out[i][k] = sd[k] > 1e-12 ? (rows[i][k] - mean[k]) / sd[k] : 0.0;
  return out;
}

inline double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

struct KMeansResult {
  std::vector<int> labels;
  std::vector<std::vector<double>> centroids;
  double inertia = 0.0;
  int restart = 0;
};

namespace detail {

inline KMeansResult lloyd_once(const std::vector<std::vector<double>>& x, int k, Rng& rng, int max_iter) {
  const int n = static_cast<int>(x.size());
  KMeansResult res;
  // k-means++ seeding
  res.centroids.push_back(x[rng.below(n)]);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  while (static_cast<int>(res.centroids.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(x[i], res.centroids.back()));
      total += d2[i];
    }
    int pick = n - 1;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (int i = 0; i < n; ++i) {
        u -= d2[i];
        if (u < 0.0) { pick = i; break; }
      }
    } else {
      pick = static_cast<int>(rng.below(n));
    }
    res.centroids.push_back(x[pick]);
  }

  res.labels.assign(n, -1);
  for (int it = 0; it < max_iter; ++it) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double bd = squared_distance(x[i], res.centroids[0]);
      for (int c = 1; c < k; ++c) {
        const double dc = squared_distance(x[i], res.centroids[c]);
        if (dc < bd) { bd = dc; best = c; }
      }
      if (res.labels[i] != best) { res.labels[i] = best; changed = true; }
    }
    if (!changed) break;
    std::vector<std::vector<double>> sum(k, std::vector<double>(x[0].size(), 0.0));
    std::vector<int> cnt(k, 0);
    for (int i = 0; i < n; ++i) {
      ++cnt[res.labels[i]];
      for (std::size_t d = 0; d < x[i].size(); ++d) sum[res.labels[i]][d] += x[i][d];
    }
    for (int c = 0; c < k; ++c) {
      if (cnt[c] == 0) continue;  // empty cluster keeps its old centroid
      for (auto& v : sum[c]) v /= cnt[c];
      res.centroids[c] = std::move(sum[c]);
    }
  }
  res.inertia = 0.0;
  for (int i = 0; i < n; ++i) res.inertia += squared_distance(x[i], res.centroids[res.labels[i]]);
  return res;
}

// Relabel clusters in order of first appearance so equal partitions compare equal.
inline void canonicalize(KMeansResult& r) {
  std::map<int, int> remap;
  for (int& l : r.labels) {
    auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
    l = it->second;
  }
  std::vector<std::vector<double>> c(r.centroids.size());
  int next = static_cast<int>(remap.size());
  for (int old = 0; old < static_cast<int>(r.centroids.size()); ++old) {
    auto it = remap.find(old);
    c[it != remap.end() ? it->second : next++] = r.centroids[old];
  }
  r.centroids = std::move(c);
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding; the restart with the lowest
// inertia wins, ties to the lowest restart index.
inline KMeansResult kmeans(const std::vector<std::vector<double>>& x, int k, std::uint64_t seed, int restarts = 20,
                           int max_iter = 300) {
  if (k < 1) throw InvalidArgument("k must be >= 1");
  if (static_cast<int>(x.size()) < k) throw InvalidArgument("need at least k points");
  for (const auto& row : x)
    for (double v : row)
      if (!std::isfinite(v)) throw NumericalError("non-finite signature entry");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng(mix_seed(seed, 900 + r));
    KMeansResult cur = detail::lloyd_once(x, k, rng, max_iter);
    cur.restart = r;
    if (cur.inertia < best.inertia) best = std::move(cur);
  }
  detail::canonicalize(best);
  return best;
}

inline std::vector<int> cluster_scenarios(const std::vector<DailyTrafficSignature>& signatures, int k,
                                          std::uint64_t seed, int restarts = 20) {
  std::vector<std::vector<double>> rows;
  rows.reserve(signatures.size());
  for (const auto& s : signatures) rows.push_back(s.features);
  return kmeans(zscore(rows), k, seed, restarts).labels;
}

inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw InvalidArgument("label vectors differ in length");
  const double n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, double> nij;
  std::map<int, double> ai, bj;
  for (std::size_t i = 0; i < a.size(); ++i) {
    nij[{a[i], b[i]}] += 1;
    ai[a[i]] += 1;
    bj[b[i]] += 1;
  }
  auto c2 = [](double x) { return x * (x - 1) / 2; };
  double sum_ij = 0, sum_a = 0, sum_b = 0;
  for (auto& [k, v] : nij) sum_ij += c2(v);
  for (auto& [k, v] : ai) sum_a += c2(v);
  for (auto& [k, v] : bj) sum_b += c2(v);
  const double expected = sum_a * sum_b / c2(n);
  const double max_index = 0.5 * (sum_a + sum_b);
  if (max_index == expected) return 1.0;
  return (sum_ij - expected) / (max_index - expected);
}

}  // namespace lbreuse
