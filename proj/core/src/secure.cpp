#include "fedsim/secure.hpp"

#include <algorithm>
#include <cmath>

#include "fedsim/rng.hpp"

namespace fedsim {

namespace {

// Keeps single values and 16-way sums well inside int64 when scaled by
// 2^32.
constexpr double kFixedPointLimit = 1048576.0;  // 2^20

}  // namespace

std::uint64_t to_fixed(double v) {
  if (!std::isfinite(v) || std::abs(v) > kFixedPointLimit) {
    raise(ErrorCode::kNumeric, "value out of fixed-point range");
  }
  return static_cast<std::uint64_t>(
      static_cast<std::int64_t>(std::llround(v * kFixedPointScale)));
}

double from_fixed(std::uint64_t v) {
  return static_cast<double>(static_cast<std::int64_t>(v)) / kFixedPointScale;
}

std::uint64_t pairwise_seed(std::uint64_t base_seed, const std::string& a,
                            const std::string& b) {
  const std::string& lo = a < b ? a : b;
  const std::string& hi = a < b ? b : a;
  std::uint64_t s = base_seed ^ fnv1a64(lo);
  s = s * 0x100000001b3ULL ^ fnv1a64(hi);
  return splitmix64(s);
}

namespace {

std::vector<std::string> checked_participants(
    const std::vector<std::string>& participants) {
  if (participants.empty()) {
    raise(ErrorCode::kConfig, "secure: no participants");
  }
  std::vector<std::string> sorted = participants;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    raise(ErrorCode::kConfig, "secure: duplicate participant id");
  }
  return sorted;
}

}  // namespace

MaskedUpdate mask_update(const ModelUpdate& update,
                         const std::vector<std::string>& participants,
                         std::uint64_t base_seed) {
  const auto sorted = checked_participants(participants);
  if (!std::binary_search(sorted.begin(), sorted.end(), update.client_id)) {
    raise(ErrorCode::kConfig,
          "secure: " + update.client_id + " is not in the participant set");
  }
  check_finite(update.params, "mask_update input");

  MaskedUpdate out;
  out.client_id = update.client_id;
  out.version = update.params.version;
  out.masked_fixed.reserve(update.params.dim());
  for (double v : update.params.values) out.masked_fixed.push_back(to_fixed(v));

  for (const std::string& peer : sorted) {
    if (peer == update.client_id) continue;
    const std::uint64_t seed =
        pairwise_seed(base_seed, update.client_id, peer);
    out.pair_seeds[peer] = seed;
    Rng prg(seed);
    // The pair's lower id subtracts what the higher id adds.
    const bool add = update.client_id < peer;
    for (auto& f : out.masked_fixed) {
      const std::uint64_t m = prg.next_u64();
      f = add ? f + m : f - m;
    }
  }
  return out;
}

ParamVector secure_sum(const std::vector<MaskedUpdate>& masked,
                       const std::vector<std::string>& participants) {
  const auto sorted = checked_participants(participants);
  std::vector<std::string> got;
  got.reserve(masked.size());
  for (const MaskedUpdate& m : masked) got.push_back(m.client_id);
  std::sort(got.begin(), got.end());
  if (got != sorted) {
    for (const std::string& id : sorted) {
      if (!std::binary_search(got.begin(), got.end(), id)) {
        raise(ErrorCode::kUnrecoverableMasks,
              "secure_sum: participant " + id +
                  " is missing; its pairwise masks cannot be removed");
      }
    }
    raise(ErrorCode::kUnrecoverableMasks,
          "secure_sum: update set does not match the participant set");
  }

  const std::size_t dim = masked.front().masked_fixed.size();
  std::vector<std::uint64_t> sum(dim, 0);
  std::uint32_t version = 0;
  for (const MaskedUpdate& m : masked) {
    if (m.masked_fixed.size() != dim) {
      raise(ErrorCode::kShape, "secure_sum: dimension mismatch");
    }
    version = std::max(version, m.version);
    for (std::size_t f = 0; f < dim; ++f) sum[f] += m.masked_fixed[f];
  }

  ParamVector out;
  out.version = version;
  out.values.reserve(dim);
  for (std::uint64_t f : sum) out.values.push_back(from_fixed(f));
  return out;
}

ParamVector dp_noise(const ParamVector& v, double clip_norm, double sigma,
                     std::uint64_t seed) {
  if (clip_norm <= 0) raise(ErrorCode::kConfig, "dp: clip_norm must be > 0");
  if (sigma < 0) raise(ErrorCode::kConfig, "dp: sigma must be >= 0");
  check_finite(v, "dp_noise input");

  ParamVector out = v;
  const double norm = l2_norm(v);
  if (norm > clip_norm) {
    const double scale = clip_norm / norm;
    for (auto& x : out.values) x *= scale;
  }
  if (sigma > 0) {
    Rng rng = Rng::substream(seed, "dp");
    const double std_dev = sigma * clip_norm;
    for (auto& x : out.values) x += std_dev * rng.gaussian();
  }
  return out;
}

}  // namespace fedsim
