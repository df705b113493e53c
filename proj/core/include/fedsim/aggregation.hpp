#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/param_vector.hpp"

namespace fedsim {

struct ModelUpdate {
  std::string client_id;
  int origin_round = 0;  // round whose global model the client trained from
  ParamVector params;
  std::size_t n_samples = 1;
  double arrival_time_ms = 0.0;

  bool operator==(const ModelUpdate&) const = default;
};

// Sample-count-weighted mean. The result's version is one past the
// newest contributing origin_round. Accumulation runs in client_id
// order so the result is independent of input order, bit for bit; a
// single update passes through unchanged.
ParamVector fedavg(const std::vector<ModelUpdate>& updates);

enum class DecayKind { kInverse, kExponential };

const char* decay_kind_name(DecayKind kind);
DecayKind decay_kind_from_name(const std::string& name);

// Down-weights stale updates: weight(0) = 1 and weight strictly
// decreases with staleness tau.
struct StalenessPolicy {
  DecayKind decay = DecayKind::kInverse;
  double rate = 1.0;

  double weight(int tau) const;
};

// Applies one update as soon as it arrives: with tau = current_round -
// origin_round and alpha = mix * weight(tau), the new global is
// (1 - alpha) * global + alpha * update. alpha = 1 passes the update
// through exactly. Updates from the future raise kCausality.
ParamVector async_aggregate(const ParamVector& global, const ModelUpdate& update,
                            int current_round, const StalenessPolicy& policy,
                            double mix);

}  // namespace fedsim
