#pragma once

#include <cstdint>
#include <map>
#include <utility>

#include "fedsim/dataset.hpp"
#include "fedsim/errors.hpp"

namespace fedsim {

struct BalanceReport {
  std::map<int, std::size_t> before;
  std::map<int, std::size_t> after;
  std::size_t added = 0;
  std::size_t removed = 0;

  bool operator==(const BalanceReport&) const = default;
};

// Evens out a skewed class histogram: minority classes are oversampled
// by duplicating rows with small Gaussian feature jitter (sigma = 0.01
// of the per-feature std), majority classes downsampled uniformly, until
// max/min class counts fit within tolerance. A dataset already within
// tolerance is returned unchanged. Single-class data cannot be balanced
// this way (kBalanceImpossible); no class ever disappears.
std::pair<Dataset, BalanceReport> balance_dataset(const Dataset& data,
                                                  double tolerance,
                                                  std::uint64_t seed);

}  // namespace fedsim
