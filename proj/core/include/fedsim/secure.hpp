#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedsim/aggregation.hpp"

namespace fedsim {

// Fixed-point scale for masked parameters: 2^32 fractional bits. All
// masking runs in uint64 wrap-around arithmetic so pairwise masks cancel
// bit for bit, which floating point cannot promise.
inline constexpr double kFixedPointScale = 4294967296.0;

std::uint64_t to_fixed(double v);
double from_fixed(std::uint64_t v);

// Shared seed for the (a, b) pair; symmetric in its arguments, so both
// ends derive the same mask stream. Stands in for a key agreement.
std::uint64_t pairwise_seed(std::uint64_t base_seed, const std::string& a,
                            const std::string& b);

struct MaskedUpdate {
  std::string client_id;
  std::vector<std::uint64_t> masked_fixed;  // fixed-point params + masks
  std::uint32_t version = 0;
  std::map<std::string, std::uint64_t> pair_seeds;  // peer -> shared seed

  bool operator==(const MaskedUpdate&) const = default;
};

// Adds the pairwise mask stream for every peer: added when the peer id
// sorts after this client, subtracted otherwise, so summing over the
// full participant set cancels every mask exactly. The participant list
// must contain the client itself.
MaskedUpdate mask_update(const ModelUpdate& update,
                         const std::vector<std::string>& participants,
                         std::uint64_t base_seed);

// Unmasks by summation. Exactly the participants used for masking must
// be present; anyone missing leaves unmatched masks in the total, so the
// call aborts with kUnrecoverableMasks rather than return garbage.
ParamVector secure_sum(const std::vector<MaskedUpdate>& masked,
                       const std::vector<std::string>& participants);

// Clips v to the L2 ball of radius clip_norm, then adds i.i.d. Gaussian
// noise with std sigma * clip_norm per coordinate.
ParamVector dp_noise(const ParamVector& v, double clip_norm, double sigma,
                     std::uint64_t seed);

}  // namespace fedsim
