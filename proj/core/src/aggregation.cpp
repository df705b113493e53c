#include "fedsim/aggregation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fedsim {

const char* decay_kind_name(DecayKind kind) {
  switch (kind) {
    case DecayKind::kInverse: return "inverse";
    case DecayKind::kExponential: return "exponential";
  }
  return "?";
}

DecayKind decay_kind_from_name(const std::string& name) {
  if (name == "inverse") return DecayKind::kInverse;
  if (name == "exponential") return DecayKind::kExponential;
  raise(ErrorCode::kConfig, "unknown decay kind: " + name);
}

double StalenessPolicy::weight(int tau) const {
  if (rate <= 0) raise(ErrorCode::kConfig, "staleness rate must be > 0");
  if (tau < 0) raise(ErrorCode::kCausality, "negative staleness");
  switch (decay) {
    case DecayKind::kInverse:
      return 1.0 / (1.0 + rate * static_cast<double>(tau));
    case DecayKind::kExponential:
      return std::exp(-rate * static_cast<double>(tau));
  }
  return 1.0;
}

ParamVector fedavg(const std::vector<ModelUpdate>& updates) {
  if (updates.empty()) {
    raise(ErrorCode::kAggregation, "fedavg: no updates");
  }
  const std::size_t dim = updates.front().params.dim();
  int max_round = updates.front().origin_round;
  for (const ModelUpdate& u : updates) {
    if (u.params.dim() != dim) {
      raise(ErrorCode::kShape, "fedavg: dimension mismatch for " + u.client_id);
    }
    if (u.n_samples < 1) {
      raise(ErrorCode::kValidation,
            "fedavg: update from " + u.client_id + " has no samples");
    }
    check_finite(u.params, "fedavg input from " + u.client_id);
    max_round = std::max(max_round, u.origin_round);
  }

  ParamVector out;
  out.version = static_cast<std::uint32_t>(max_round + 1);
  if (updates.size() == 1) {
    out.values = updates.front().params.values;
    return out;
  }

  // Fixed accumulation order: sort by client_id (then origin_round for
  // repeated ids) so input permutations cannot change rounding.
  std::vector<std::size_t> order(updates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (updates[a].client_id != updates[b].client_id) {
                       return updates[a].client_id < updates[b].client_id;
                     }
                     return updates[a].origin_round < updates[b].origin_round;
                   });

  out.values.assign(dim, 0.0);
  double total = 0.0;
  for (std::size_t i : order) {
    const double n = static_cast<double>(updates[i].n_samples);
    total += n;
    for (std::size_t f = 0; f < dim; ++f) {
      out.values[f] += n * updates[i].params.values[f];
    }
  }
  for (auto& v : out.values) v /= total;
  check_finite(out, "fedavg output");
  return out;
}

ParamVector async_aggregate(const ParamVector& global, const ModelUpdate& update,
                            int current_round, const StalenessPolicy& policy,
                            double mix) {
  if (mix <= 0.0 || mix > 1.0) {
    raise(ErrorCode::kConfig, "async: mix must be in (0, 1]");
  }
  if (update.origin_round > current_round) {
    raise(ErrorCode::kCausality,
          "async: update from " + update.client_id + " originates in round " +
              std::to_string(update.origin_round) + " but current round is " +
              std::to_string(current_round));
  }
  if (update.params.dim() != global.dim()) {
    raise(ErrorCode::kShape, "async: dimension mismatch");
  }
  check_finite(update.params, "async input from " + update.client_id);

  const int tau = current_round - update.origin_round;
  const double alpha = mix * policy.weight(tau);

  ParamVector out;
  out.version = static_cast<std::uint32_t>(current_round + 1);
  if (alpha == 1.0) {
    out.values = update.params.values;
    return out;
  }
  out.values.resize(global.dim());
  for (std::size_t f = 0; f < global.dim(); ++f) {
    out.values[f] =
        (1.0 - alpha) * global.values[f] + alpha * update.params.values[f];
  }
  check_finite(out, "async output");
  return out;
}

}  // namespace fedsim
