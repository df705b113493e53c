#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedsim/client_registry.hpp"

namespace fedsim {

enum class SelectionMode { kResource, kData, kPerformance, kRandom, kCdw };

const char* selection_mode_name(SelectionMode mode);
SelectionMode selection_mode_from_name(const std::string& name);

struct SelectionCriteria {
  SelectionMode mode = SelectionMode::kRandom;
  double min_compute = 0.0;
  double min_bandwidth = 0.0;
  // Data mode only: clients whose normalized class histogram is further
  // than this (total variation distance) from the cohort mean are skipped.
  double max_heterogeneity = 1.0;
  int top_k = 1;
};

// Eligibility filter, then a mode-specific ranking, then take top_k.
// resource: capacity * bandwidth descending. data: n_samples descending
// under the heterogeneity cap. performance: most recent loss ascending,
// clients without history last. random: seeded shuffle, salted by round.
// cdw: centroid gap descending. Ties always break on client_id.
// Returns at most top_k online clients; empty selection is not an error.
std::vector<std::string> select_clients(const ClientRegistry& registry,
                                        const SelectionCriteria& criteria,
                                        int round, std::uint64_t seed);

}  // namespace fedsim
