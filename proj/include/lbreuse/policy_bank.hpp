#pragma once

// The bank of per-scenario PPO policies and its single-file format:
//   "LBPB" | u32 version | u32 entry count
//   | per entry: u64 byte length + one LBPN policy envelope
//   | u64 index length | JSON index

#include <cstdint>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lbreuse/config.hpp"
#include "lbreuse/errors.hpp"
#include "lbreuse/policy_net.hpp"
#include "lbreuse/ppo.hpp"
#include "lbreuse/scenarios.hpp"
#include "lbreuse/serialize.hpp"

namespace lbreuse {

inline constexpr std::uint32_t kBankVersion = 1;

struct BankEntry {
  int policy_id = 0;
  PolicyNet net;
  int scenario_id = 0;
  int group = 0;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<double> curve;

  friend bool operator==(const BankEntry& a, const BankEntry& b) {
    return a.policy_id == b.policy_id && a.net == b.net && a.scenario_id == b.scenario_id && a.group == b.group &&
           a.config_hash == b.config_hash && a.seed == b.seed && a.curve == b.curve;
  }
};

class PolicyBank {
 public:
  std::uint32_t version = kBankVersion;
  std::vector<BankEntry> entries;

  int size() const { return static_cast<int>(entries.size()); }

  const BankEntry& entry(int policy_id) const {
    if (policy_id < 0 || policy_id >= size())
      throw InvalidArgument("policy id " + std::to_string(policy_id) + " not in bank of " + std::to_string(size()));
    return entries[policy_id];
  }
  const PolicyNet& get(int policy_id) const { return entry(policy_id).net; }

  void save(std::ostream& os) const {
    os.write("LBPB", 4);
    io::put_u32(os, version);
    io::put_u32(os, static_cast<std::uint32_t>(entries.size()));
    nlohmann::json index = nlohmann::json::array();
    for (const auto& e : entries) {
      std::ostringstream rec;
      e.net.save(rec, {{"policy_id", e.policy_id}, {"scenario_id", e.scenario_id}, {"seed", e.seed},
                       {"config_hash", e.config_hash}, {"training_curve", e.curve}});
      const std::string bytes = rec.str();
      io::put_u64(os, bytes.size());
      os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      index.push_back({{"policy_id", e.policy_id},
                       {"scenario_id", e.scenario_id},
                       {"group", e.group},
                       {"config_hash", e.config_hash},
                       {"seed", e.seed},
                       {"training_curve", e.curve}});
    }
    const std::string trailer = nlohmann::json{{"version", version}, {"entries", index}}.dump();
    io::put_u64(os, trailer.size());
    os.write(trailer.data(), static_cast<std::streamsize>(trailer.size()));
  }

  void save(const std::string& path) const {
    io::atomic_write(path, [&](std::ostream& os) { save(os); });
  }

  static PolicyBank load(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    io::need(is, "bank magic");
    if (std::string(magic, 4) != "LBPB") throw ArtifactError("not a policy bank file (bad magic)");
    PolicyBank bank;
    bank.version = io::get_u32(is);
    if (bank.version != kBankVersion) throw ArtifactError("unsupported bank version " + std::to_string(bank.version));
    const std::uint32_t n = io::get_u32(is);
    if (n > 100000) throw ArtifactError("corrupt bank file: implausible entry count");
    std::vector<PolicyNet> nets;
    for (std::uint32_t k = 0; k < n; ++k) {
      const std::uint64_t len = io::get_u64(is);
      if (len > (1ull << 32)) throw ArtifactError("corrupt bank file: implausible record length");
      std::string bytes(len, '\0');
      is.read(bytes.data(), static_cast<std::streamsize>(len));
      io::need(is, "bank record");
      std::istringstream rec(bytes);
      nets.push_back(PolicyNet::load(rec));
    }
    const std::uint64_t len = io::get_u64(is);
    if (len > (1ull << 32)) throw ArtifactError("corrupt bank file: implausible index length");
    std::string trailer(len, '\0');
    is.read(trailer.data(), static_cast<std::streamsize>(len));
    io::need(is, "bank index");
    nlohmann::json index;
    try {
      index = nlohmann::json::parse(trailer);
      const auto& list = index.at("entries");
      if (list.size() != n) throw ArtifactError("bank index does not match record count");
      std::set<int> ids;
      for (std::uint32_t k = 0; k < n; ++k) {
        BankEntry e;
        e.policy_id = list[k].at("policy_id").get<int>();
        e.scenario_id = list[k].at("scenario_id").get<int>();
        e.group = list[k].at("group").get<int>();
        e.config_hash = list[k].at("config_hash").get<std::string>();
        e.seed = list[k].at("seed").get<std::uint64_t>();
        e.curve = list[k].at("training_curve").get<std::vector<double>>();
        e.net = std::move(nets[k]);
        if (!ids.insert(e.policy_id).second) throw ArtifactError("duplicate policy id " + std::to_string(e.policy_id));
        bank.entries.push_back(std::move(e));
      }
    } catch (const nlohmann::json::exception& ex) {
      throw ArtifactError(std::string("corrupt bank index: ") + ex.what());
    }
    for (int k = 0; k < bank.size(); ++k)
      if (bank.entries[k].policy_id != k) throw ArtifactError("bank policy ids are not dense 0..M-1 in order");
    return bank;
  }

  static PolicyBank load(const std::string& path) {
    std::istringstream is(io::read_file(path, "run `bank build` first"));
    return load(is);
  }

  friend bool operator==(const PolicyBank& a, const PolicyBank& b) {
    return a.version == b.version && a.entries == b.entries;
  }
};

// Training seed of the policy for a scenario; shared by the bank and NewPi so
// both procedures coincide on training scenarios.
inline std::uint64_t policy_seed_for(std::uint64_t base_seed, const ScenarioSpec& scenario) {
  return mix_seed(base_seed, 20000 + static_cast<std::uint64_t>(scenario.id));
}

inline std::string training_config_hash(const TrainContext& ctx, const PpoConfig& cfg) {
  return config_hash({{"ppo", cfg}, {"sim", ctx.sim}, {"env", ctx.env}, {"reward", ctx.reward}, {"topology", ctx.topology}});
}

inline BankEntry train_bank_entry(const ScenarioSpec& scenario, int policy_id, int group, const TrainContext& ctx,
                                  PpoConfig cfg) {
  cfg.seed = policy_seed_for(cfg.seed, scenario);
  TrainResult r = train_policy(scenario, ctx, cfg);
  BankEntry e;
  e.policy_id = policy_id;
  e.net = std::move(r.net);
  e.scenario_id = scenario.id;
  e.group = group;
  e.config_hash = training_config_hash(ctx, cfg);
  e.seed = cfg.seed;
  e.curve = std::move(r.curve);
  return e;
}

// One policy per training scenario, ids in the given order. When
// recovery_path is non-empty the partial bank is written there after every
// finished entry, so a failure leaves the completed entries behind.
inline PolicyBank build_bank(const std::vector<const ScenarioSpec*>& train_set, const std::vector<int>& groups,
                             const TrainContext& ctx, const PpoConfig& cfg, const std::string& recovery_path = {},
                             const std::function<void(int, const BankEntry&)>& on_entry = {}) {
  if (train_set.empty()) throw InvalidArgument("training set is empty");
  if (groups.size() != train_set.size()) throw InvalidArgument("one group label per training scenario required");
  PolicyBank bank;
  for (int i = 0; i < static_cast<int>(train_set.size()); ++i) {
    try {
      bank.entries.push_back(train_bank_entry(*train_set[i], i, groups[i], ctx, cfg));
    } catch (const NumericalError& e) {
      if (!recovery_path.empty() && !bank.entries.empty()) bank.save(recovery_path);
      throw NumericalError("training policy " + std::to_string(i) + " (scenario " +
                           std::to_string(train_set[i]->id) + ") failed: " + e.what() +
                           (recovery_path.empty() ? "" : "; partial bank in " + recovery_path));
    }
    if (!recovery_path.empty()) bank.save(recovery_path);
    if (on_entry) on_entry(i, bank.entries.back());
  }
  return bank;
}

}  // namespace lbreuse
