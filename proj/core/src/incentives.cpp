#include "fedsim/incentives.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "fedsim/detail/bytes_io.hpp"

namespace fedsim {

const char* incentive_scheme_name(IncentiveScheme scheme) {
  switch (scheme) {
    case IncentiveScheme::kDataVolume: return "data_volume";
    case IncentiveScheme::kLossImprovement: return "loss_improvement";
    case IncentiveScheme::kShapley: return "shapley";
  }
  return "?";
}

IncentiveScheme incentive_scheme_from_name(const std::string& name) {
  if (name == "data_volume") return IncentiveScheme::kDataVolume;
  if (name == "loss_improvement") return IncentiveScheme::kLossImprovement;
  if (name == "shapley") return IncentiveScheme::kShapley;
  raise(ErrorCode::kConfig, "unknown incentive scheme: " + name);
}

namespace {

std::map<std::string, double> shapley_scores(
    const std::vector<std::string>& ids, const CoalitionValue& value) {
  const std::size_t n = ids.size();
  if (n > 8) {
    raise(ErrorCode::kCapacity,
          "shapley: exact enumeration supports at most 8 clients, got " +
              std::to_string(n));
  }

  // v over every coalition bitmask; bit i = ids[i] present.
  const std::size_t masks = std::size_t{1} << n;
  std::vector<double> v(masks);
  std::vector<std::string> coalition;
  for (std::size_t m = 0; m < masks; ++m) {
    coalition.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (m & (std::size_t{1} << i)) coalition.push_back(ids[i]);
    }
    v[m] = value(coalition);
    if (!std::isfinite(v[m])) {
      raise(ErrorCode::kNumeric, "shapley: coalition value not finite");
    }
  }

  double fact[9];
  fact[0] = 1.0;
  for (int i = 1; i <= 8; ++i) fact[i] = fact[i - 1] * i;

  std::map<std::string, double> scores;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double sv = 0.0;
    for (std::size_t m = 0; m < masks; ++m) {
      if (m & bit) continue;
      const int s = std::popcount(m);
      const double w =
          fact[s] * fact[n - s - 1] / fact[n];  // |S|!(n-|S|-1)!/n!
      sv += w * (v[m | bit] - v[m]);
    }
    scores[ids[i]] = sv;
  }
  return scores;
}

}  // namespace

std::map<std::string, double> score_contribution(
    IncentiveScheme scheme,
    const std::map<std::string, ClientRoundStat>& round_data,
    const CoalitionValue* coalition_evaluator) {
  if (round_data.empty()) {
    raise(ErrorCode::kConfig, "score_contribution: no clients");
  }
  std::map<std::string, double> scores;
  switch (scheme) {
    case IncentiveScheme::kDataVolume:
      for (const auto& [id, stat] : round_data) {
        scores[id] = static_cast<double>(stat.n_samples);
      }
      break;
    case IncentiveScheme::kLossImprovement:
      for (const auto& [id, stat] : round_data) {
        scores[id] = std::max(0.0, stat.loss_without - stat.loss_with_all);
      }
      break;
    case IncentiveScheme::kShapley: {
      if (!coalition_evaluator) {
        raise(ErrorCode::kConfig, "shapley: coalition evaluator required");
      }
      std::vector<std::string> ids;
      ids.reserve(round_data.size());
      for (const auto& [id, _] : round_data) ids.push_back(id);
      scores = shapley_scores(ids, *coalition_evaluator);
      break;
    }
  }
  return scores;
}

std::vector<LedgerEntry> distribute_rewards(
    const std::map<std::string, double>& scores, double budget, int round,
    IncentiveScheme scheme, HashChain* chain) {
  if (budget < 0) {
    raise(ErrorCode::kConfig, "distribute_rewards: negative budget");
  }
  if (scores.empty()) {
    raise(ErrorCode::kConfig, "distribute_rewards: no scores");
  }
  double total = 0.0;
  for (const auto& [id, s] : scores) {
    if (s < 0 || !std::isfinite(s)) {
      raise(ErrorCode::kConfig,
            "distribute_rewards: score for " + id + " must be finite and >= 0");
    }
    total += s;
  }

  std::vector<LedgerEntry> entries;
  entries.reserve(scores.size());
  for (const auto& [id, s] : scores) {
    LedgerEntry e;
    e.client_id = id;
    e.round = round;
    e.contribution_score = s;
    e.scheme = scheme;
    e.reward = total > 0 ? budget * s / total
                         : budget / static_cast<double>(scores.size());
    entries.push_back(std::move(e));
  }
  if (chain) {
    for (const LedgerEntry& e : entries) {
      chain->append(kRecordReward, encode_reward_body(e));
    }
  }
  return entries;
}

std::vector<std::uint8_t> encode_reward_body(const LedgerEntry& entry) {
  detail::ByteWriter w;
  w.put_u32(static_cast<std::uint32_t>(entry.round));
  w.put_u8(static_cast<std::uint8_t>(entry.scheme));
  w.put_string(entry.client_id);
  w.put_f64(entry.contribution_score);
  w.put_f64(entry.reward);
  return w.take();
}

LedgerEntry decode_reward_body(const std::vector<std::uint8_t>& body) {
  detail::ByteReader r(body);
  LedgerEntry e;
  e.round = static_cast<int>(r.get_u32());
  const std::uint8_t scheme = r.get_u8();
  if (scheme > 2) raise(ErrorCode::kDecode, "bad incentive scheme byte");
  e.scheme = static_cast<IncentiveScheme>(scheme);
  e.client_id = r.get_string();
  e.contribution_score = r.get_f64();
  e.reward = r.get_f64();
  if (!r.done()) raise(ErrorCode::kDecode, "reward record has trailing bytes");
  return e;
}

}  // namespace fedsim
