#pragma once

// Policy selection: dataset of week-long runs, sliding windows, classifier
// training with early stopping, and the day-by-day selection loop.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lbreuse/env.hpp"
#include "lbreuse/errors.hpp"
#include "lbreuse/nn.hpp"
#include "lbreuse/policy_bank.hpp"
#include "lbreuse/ppo.hpp"
#include "lbreuse/runner.hpp"
#include "lbreuse/scenarios.hpp"
#include "lbreuse/selector_net.hpp"
#include "lbreuse/serialize.hpp"

namespace lbreuse {

inline constexpr std::uint32_t kDatasetVersion = 1;

// One week-long run of a controller on a training scenario.
struct DatasetRun {
  int scenario_id = 0;
  int label = 0;      // index of the scenario in the training set
  int policy_id = 0;  // acting bank policy, or kBasicLbPolicyId
  std::vector<Frame> frames;

  friend bool operator==(const DatasetRun&, const DatasetRun&) = default;
};

struct SelectorDataset {
  int num_labels = 0;
  int window = kHoursPerDay;
  double ue_norm = 10.0;
  double throughput_norm_mbps = 10.0;
  std::vector<DatasetRun> runs;

  long raw_frames() const {
    long n = 0;
    for (const auto& r : runs) n += static_cast<long>(r.frames.size());
    return n;
  }
  long window_count() const {
    long n = 0;
    for (const auto& r : runs) n += std::max<long>(0, static_cast<long>(r.frames.size()) - window + 1);
    return n;
  }

  friend bool operator==(const SelectorDataset&, const SelectorDataset&) = default;
};

// Raw frames (M + 1) * X * H and windows (M + 1) * X * (H - T + 1).
inline long expected_raw_frames(int policies, int scenarios, int hours = kHoursPerWeek) {
  return static_cast<long>(policies + 1) * scenarios * hours;
}
inline long expected_windows(int policies, int scenarios, int window, int hours = kHoursPerWeek) {
  return static_cast<long>(policies + 1) * scenarios * std::max(0, hours - window + 1);
}

struct SelectorSample {
  std::vector<double> features;
  int label = 0;
  int scenario_id = 0;
  int policy_id = 0;
  int start_hour = 0;
};

inline std::vector<double> flatten_frames(const std::vector<Frame>& frames, int first, int count) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count) * kFrameSize);
  for (int k = first; k < first + count; ++k) out.insert(out.end(), frames[k].begin(), frames[k].end());
  return out;
}

// Stride-1 windows inside each run; windows never span two runs.
inline std::vector<SelectorSample> make_windows(const SelectorDataset& ds) {
  std::vector<SelectorSample> out;
  out.reserve(ds.window_count());
  for (const auto& r : ds.runs)
    for (int s = 0; s + ds.window <= static_cast<int>(r.frames.size()); ++s)
      out.push_back({flatten_frames(r.frames, s, ds.window), r.label, r.scenario_id, r.policy_id, s});
  return out;
}

// Every training scenario is run for one week under BasicLB and under every
// bank policy; run seeds depend on (seed, scenario, controller) only.
inline SelectorDataset collect_dataset(const PolicyBank& bank, const std::vector<const ScenarioSpec*>& train_set,
                                       std::uint64_t seed, const TrainContext& ctx,
                                       const BasicLbConfig& basic = {}) {
  if (train_set.empty()) throw InvalidArgument("training set is empty");
  SelectorDataset ds;
  ds.num_labels = static_cast<int>(train_set.size());
  ds.ue_norm = ctx.env.ue_norm;
  ds.throughput_norm_mbps = ctx.env.throughput_norm_mbps;
  LbEnv env(ctx.topology, ctx.sim, ctx.env, ctx.reward);
  const int days = kHoursPerWeek / kHoursPerDay;
  for (int x = 0; x < static_cast<int>(train_set.size()); ++x) {
    for (int p = kBasicLbPolicyId; p < bank.size(); ++p) {
      const DayPlan plan = p == kBasicLbPolicyId ? basic_day(basic) : policy_day(bank.get(p), p);
      const std::uint64_t run_seed = mix_seed(seed, 40000 + 1000 * static_cast<std::uint64_t>(x) + (p + 1));
      const RunResult r = run_days(env, {{train_set[x], days}}, run_seed,
                                   [&](int, const RunResult&) { return plan; }, "collect");
      DatasetRun run;
      run.scenario_id = train_set[x]->id;
      run.label = x;
      run.policy_id = p;
      for (const auto& day : r.day_frames) run.frames.insert(run.frames.end(), day.begin(), day.end());
      ds.runs.push_back(std::move(run));
    }
  }
  return ds;
}

// ---- dataset persistence: columnar binary + JSON manifest -------------------
//   "LBDS" | u32 version | u32 runs | u32 frames per run | u32 frame size
//   | i32 scenario_id[runs] | i32 label[runs] | i32 policy_id[runs]
//   | f64 frames[runs * frames * frame size]

inline nlohmann::json dataset_manifest(const SelectorDataset& ds) {
  std::map<int, long> per_label;
  const long per_run = std::max(0, kHoursPerWeek - ds.window + 1);
  for (const auto& r : ds.runs) per_label[r.label] += per_run;
  nlohmann::json counts = nlohmann::json::object();
  for (auto& [label, n] : per_label) counts[std::to_string(label)] = n;
  return {{"format", "lbreuse-selector-dataset"},
          {"version", kDatasetVersion},
          {"runs", ds.runs.size()},
          {"num_labels", ds.num_labels},
          {"window", ds.window},
          {"raw_frames", ds.raw_frames()},
          {"windows", ds.window_count()},
          {"windows_per_label", counts},
          {"normalizers", {{"ue_norm", ds.ue_norm}, {"throughput_norm_mbps", ds.throughput_norm_mbps}}}};
}

inline void save_dataset(const SelectorDataset& ds, const std::string& bin_path, const std::string& manifest_path) {
  const int fpr = ds.runs.empty() ? 0 : static_cast<int>(ds.runs.front().frames.size());
  for (const auto& r : ds.runs)
    if (static_cast<int>(r.frames.size()) != fpr) throw InvalidArgument("dataset runs differ in length");
  io::atomic_write(bin_path, [&](std::ostream& os) {
    os.write("LBDS", 4);
    io::put_u32(os, kDatasetVersion);
    io::put_u32(os, static_cast<std::uint32_t>(ds.runs.size()));
    io::put_u32(os, static_cast<std::uint32_t>(fpr));
    io::put_u32(os, kFrameSize);
    for (const auto& r : ds.runs) io::put_u32(os, static_cast<std::uint32_t>(r.scenario_id));
    for (const auto& r : ds.runs) io::put_u32(os, static_cast<std::uint32_t>(r.label));
    for (const auto& r : ds.runs) io::put_u32(os, static_cast<std::uint32_t>(r.policy_id));
    for (const auto& r : ds.runs)
      for (const auto& f : r.frames)
        for (double v : f) io::put_f64(os, v);
  });
  io::atomic_write(manifest_path, [&](std::ostream& os) { os << dataset_manifest(ds).dump(1) << '\n'; });
}

inline SelectorDataset load_dataset(const std::string& bin_path, const std::string& manifest_path) {
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(io::read_file(manifest_path, "run `selector collect` first"));
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError("corrupt dataset manifest: " + std::string(e.what()));
  }
  std::istringstream is(io::read_file(bin_path, "run `selector collect` first"));
  char magic[4];
  is.read(magic, 4);
  io::need(is, "dataset magic");
  if (std::string(magic, 4) != "LBDS") throw ArtifactError("not a selector dataset (bad magic)");
  if (io::get_u32(is) != kDatasetVersion) throw ArtifactError("unsupported dataset version");
  const std::uint32_t runs = io::get_u32(is), fpr = io::get_u32(is), fs = io::get_u32(is);
  if (fs != kFrameSize || runs > 1000000 || fpr > 100000) throw ArtifactError("corrupt dataset header");
  SelectorDataset ds;
  try {
    ds.num_labels = m.at("num_labels").get<int>();
    ds.window = m.at("window").get<int>();
    ds.ue_norm = m.at("normalizers").at("ue_norm").get<double>();
    ds.throughput_norm_mbps = m.at("normalizers").at("throughput_norm_mbps").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactError("incomplete dataset manifest: " + std::string(e.what()));
  }
  ds.runs.resize(runs);
  for (auto& r : ds.runs) r.scenario_id = static_cast<std::int32_t>(io::get_u32(is));
  for (auto& r : ds.runs) r.label = static_cast<std::int32_t>(io::get_u32(is));
  for (auto& r : ds.runs) r.policy_id = static_cast<std::int32_t>(io::get_u32(is));
  for (auto& r : ds.runs) {
    r.frames.resize(fpr);
    for (auto& f : r.frames)
      for (double& v : f) v = io::get_f64(is);
  }
  if (static_cast<long>(ds.runs.size()) != m.value("runs", -1L)) throw ArtifactError("dataset manifest/run mismatch");
  return ds;
}

// ---- training ----------------------------------------------------------------

struct SelectorConfig {
  double val_fraction = 0.3;
  double learning_rate = 1e-3;
  int batch_size = 256;
  int max_epochs = 200;
  int patience = 10;
  double bn_momentum = 0.1;
  int window = kHoursPerDay;
  std::vector<int> hidden{128, 64, 32};
  std::uint64_t seed = 1;

  void validate() const {
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must be in (0, 1)");
    if (!(learning_rate > 0.0)) throw ConfigError("selector learning_rate must be positive");
    if (batch_size < 2 || max_epochs < 1 || patience < 1) throw ConfigError("invalid selector training sizes");
    if (window < 1 || window > kHoursPerWeek) throw ConfigError("selector window must be in [1, 168]");
    if (hidden.empty()) throw ConfigError("selector needs at least one hidden layer");
  }
};

struct SelectorReport {
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  int epochs_run = 0;
  int best_epoch = 0;
  long train_samples = 0;
  long val_samples = 0;
  std::vector<double> val_curve;

  friend bool operator==(const SelectorReport&, const SelectorReport&) = default;
};

struct SelectorTraining {
  SelectorNet net;
  SelectorReport report;
};

inline Mat stack_features(const std::vector<SelectorSample>& samples, const std::vector<int>& idx, int width) {
  Mat x(static_cast<int>(idx.size()), width);
  for (int r = 0; r < static_cast<int>(idx.size()); ++r)
    for (int c = 0; c < width; ++c) x(r, c) = samples[idx[r]].features[c];
  return x;
}

inline double accuracy(const SelectorNet& net, const std::vector<SelectorSample>& samples, const std::vector<int>& idx) {
  if (idx.empty()) return 0.0;
  const int width = static_cast<int>(samples[idx[0]].features.size());
  long hit = 0;
  for (std::size_t start = 0; start < idx.size(); start += 1024) {
    std::vector<int> chunk(idx.begin() + start, idx.begin() + std::min(idx.size(), start + 1024));
    const auto pred = net.predict(stack_features(samples, chunk, width));
    for (std::size_t k = 0; k < chunk.size(); ++k) hit += pred[k] == samples[chunk[k]].label;
  }
  return static_cast<double>(hit) / idx.size();
}

// Stratified random split: val_fraction of every label's samples (at least
// one, and at least one left for training) go to validation.
inline std::pair<std::vector<int>, std::vector<int>> stratified_split(const std::vector<SelectorSample>& samples,
                                                                      double val_fraction, Rng& rng) {
  std::map<int, std::vector<int>> by_label;
  for (int i = 0; i < static_cast<int>(samples.size()); ++i) by_label[samples[i].label].push_back(i);
  std::vector<int> train, val;
  for (auto& [label, idx] : by_label) {
    if (idx.size() < 2) throw InvalidArgument("label " + std::to_string(label) + " needs >= 2 samples to split");
    rng.shuffle(idx);
    const int nv = std::clamp(static_cast<int>(std::lround(val_fraction * idx.size())), 1,
                              static_cast<int>(idx.size()) - 1);
    val.insert(val.end(), idx.begin(), idx.begin() + nv);
    train.insert(train.end(), idx.begin() + nv, idx.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(val.begin(), val.end());
  return {train, val};
}

// Mini-batch Adam on cross-entropy; the parameters of the epoch with the best
// validation accuracy are kept, training stops after `patience` epochs
// without improvement.
inline SelectorTraining train_selector(const std::vector<SelectorSample>& samples, int num_classes,
                                       const SelectorConfig& cfg,
                                       const std::function<void(int, double, double)>& on_epoch = {}) {
  cfg.validate();
  if (samples.empty()) throw InvalidArgument("no selector samples");
  std::vector<int> seen(num_classes, 0);
  for (const auto& s : samples) {
    if (s.label < 0 || s.label >= num_classes) throw InvalidArgument("sample label out of range");
    seen[s.label] = 1;
  }
  if (std::accumulate(seen.begin(), seen.end(), 0) < 2) throw InvalidArgument("degenerate single-class dataset");
  for (const auto& s : samples)
    for (double v : s.features)
      if (!std::isfinite(v)) throw NumericalError("non-finite selector feature");

  const int width = static_cast<int>(samples.front().features.size());
  Rng rng(mix_seed(cfg.seed, 1));
  auto [train_idx, val_idx] = stratified_split(samples, cfg.val_fraction, rng);

  SelectorNetShape shape{width, cfg.hidden, num_classes};
  SelectorTraining out{SelectorNet(shape), {}};
  out.net.init(mix_seed(cfg.seed, 2));
  Adam adam(out.net.params().size(), AdamConfig{cfg.learning_rate});
  SelectorNet best = out.net;
  double best_val = -1.0;
  int since_best = 0;
  std::vector<double> grad;
  std::vector<int> order = train_idx;
  SelectorNet::Cache cache;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::size_t end = std::min(order.size(), start + cfg.batch_size);
      if (end - start < 2) continue;  // batch norm needs two rows
      std::vector<int> mb(order.begin() + start, order.begin() + end);
      std::vector<int> labels(mb.size());
      for (std::size_t k = 0; k < mb.size(); ++k) labels[k] = samples[mb[k]].label;
      out.net.loss(out.net.params(), stack_features(samples, mb, width), labels, &grad, &cache);
      adam.step(out.net.params(), grad);
      out.net.absorb_batch_stats(cache, cfg.bn_momentum);
    }
    if (!all_finite(out.net.params())) throw NumericalError("selector training diverged");
    const double val = accuracy(out.net, samples, val_idx);
    out.report.val_curve.push_back(val);
    out.report.epochs_run = epoch;
    if (on_epoch) on_epoch(epoch, val, best_val);
    if (val > best_val) {
      best_val = val;
      best = out.net;
      out.report.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  out.net = std::move(best);
  out.report.val_accuracy = best_val;
  out.report.train_accuracy = accuracy(out.net, samples, train_idx);
  out.report.train_samples = static_cast<long>(train_idx.size());
  out.report.val_samples = static_cast<long>(val_idx.size());
  return out;
}

inline void to_json(nlohmann::json& j, const SelectorReport& r) {
  j = {{"train_accuracy", r.train_accuracy}, {"val_accuracy", r.val_accuracy}, {"epochs_run", r.epochs_run},
       {"best_epoch", r.best_epoch}, {"train_samples", r.train_samples}, {"val_samples", r.val_samples},
       {"val_curve", r.val_curve}};
}

// ---- selection ---------------------------------------------------------------

// Policy id for the previous day's 24 normalized frames.
inline int select_policy(const SelectorNet& net, const std::vector<Frame>& last_day) {
  const int width = net.shape().input;
  if (static_cast<int>(last_day.size()) * kFrameSize != width)
    throw InvalidArgument("selector expects " + std::to_string(width / kFrameSize) + " frames");
  Mat x(1, width);
  for (int k = 0; k < static_cast<int>(last_day.size()); ++k)
    for (int c = 0; c < kFrameSize; ++c) {
      if (!std::isfinite(last_day[k][c])) throw InvalidArgument("non-finite selector input");
      x(0, k * kFrameSize + c) = last_day[k][c];
    }
  return net.predict(x).front();
}

enum class SelectionMode { Daily, FirstDayOnly };

// Day 1 BasicLB; afterwards the selector picks from the previous day's frames,
// either every day or once (first_day_only freezes the day-2 choice).
inline DayChooser selection_chooser(const SelectorNet& net, const PolicyBank& bank, SelectionMode mode,
                                    const BasicLbConfig& basic = {}) {
  return [&net, &bank, mode, basic](int day, const RunResult& so_far) -> DayPlan {
    if (day == 0) return basic_day(basic);
    int id;
    if (mode == SelectionMode::FirstDayOnly && day > 1) id = so_far.day_policy[1];
    else id = select_policy(net, so_far.day_frames.back());
    return policy_day(bank.get(id), id);
  };
}

inline RunResult run_selection_loop(const SelectorNet& net, const PolicyBank& bank, const ScenarioSpec& scenario,
                                    int days, SelectionMode mode, std::uint64_t seed, const TrainContext& ctx,
                                    const BasicLbConfig& basic = {}) {
  if (days < 2) throw InvalidArgument("selection loop needs >= 2 days");
  LbEnv env(ctx.topology, ctx.sim, ctx.env, ctx.reward);
  return run_days(env, {{&scenario, days}}, seed, selection_chooser(net, bank, mode, basic),
                  mode == SelectionMode::Daily ? "Selector" : "SelectorFirstDayOnly");
}

}  // namespace lbreuse
