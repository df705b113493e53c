#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/hash_chain.hpp"

namespace fedsim {

enum class IncentiveScheme { kDataVolume, kLossImprovement, kShapley };

const char* incentive_scheme_name(IncentiveScheme scheme);
IncentiveScheme incentive_scheme_from_name(const std::string& name);

// Per-client inputs for one round of contribution scoring. Probe losses
// are measured on a held-out set, never on training data.
struct ClientRoundStat {
  std::size_t n_samples = 0;
  double loss_without = 0.0;   // probe loss of the aggregate minus this client
  double loss_with_all = 0.0;  // probe loss of the full aggregate
};

// v(S) over a client coalition; ids arrive sorted. v({}) must be valid.
using CoalitionValue =
    std::function<double(const std::vector<std::string>&)>;

// data_volume: proportional to sample counts. loss_improvement: the
// leave-one-out loss increase, floored at zero. shapley: exact Shapley
// value by full coalition enumeration, so at most 8 clients (kCapacity
// beyond that, which is where approximation schemes would start).
std::map<std::string, double> score_contribution(
    IncentiveScheme scheme,
    const std::map<std::string, ClientRoundStat>& round_data,
    const CoalitionValue* coalition_evaluator = nullptr);

struct LedgerEntry {
  std::string client_id;
  int round = 0;
  double contribution_score = 0.0;
  double reward = 0.0;
  IncentiveScheme scheme = IncentiveScheme::kDataVolume;

  bool operator==(const LedgerEntry&) const = default;
};

// Splits a round's budget pro rata over the scores (uniformly when all
// scores are zero); the entries sum to the budget. When a chain is
// given, each entry is appended to it as a reward record.
std::vector<LedgerEntry> distribute_rewards(
    const std::map<std::string, double>& scores, double budget, int round,
    IncentiveScheme scheme, HashChain* chain = nullptr);

std::vector<std::uint8_t> encode_reward_body(const LedgerEntry& entry);
LedgerEntry decode_reward_body(const std::vector<std::uint8_t>& body);

}  // namespace fedsim
