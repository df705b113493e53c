#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "fedsim/aggregation.hpp"

namespace fedsim {

// Two-tier cadence: each edge aggregates its clients every k1 local
// rounds, and the centre aggregates the edges every k2 edge rounds, so
// central models appear every k1*k2 local rounds.
struct HierarchicalSchedule {
  int k1 = 1;
  int k2 = 1;
  std::map<std::string, std::vector<std::string>> edge_groups;
};

// Groups must be non-empty and disjoint; k1, k2 >= 1.
void validate_schedule(const HierarchicalSchedule& schedule);

inline bool edge_due(const HierarchicalSchedule& s, int local_round) {
  return local_round > 0 && local_round % s.k1 == 0;
}
inline bool central_due(const HierarchicalSchedule& s, int local_round) {
  return local_round > 0 && local_round % (s.k1 * s.k2) == 0;
}

struct EdgeModel {
  std::string edge_id;
  ParamVector params;
  std::size_t n_samples = 0;  // samples behind this edge aggregate

  bool operator==(const EdgeModel&) const = default;
};

// FedAvg within one edge group.
EdgeModel edge_aggregate(const std::string& edge_id,
                         const std::vector<ModelUpdate>& group_updates);

// Sample-count-weighted mean over the latest edge models; a single edge
// passes through unchanged, which makes a one-edge hierarchy collapse to
// flat FedAvg exactly.
ParamVector central_aggregate(const std::vector<EdgeModel>& edges);

struct HierarchicalResult {
  std::map<std::string, EdgeModel> edge_models;
  ParamVector central;
};

// One full edge-then-central pass over a batch of client updates. Every
// update's client must belong to exactly one edge group (kTopology
// otherwise); edges with no updates this round are skipped, so the
// centre proceeds over surviving edges when a group drops out.
HierarchicalResult hierarchical_round(const HierarchicalSchedule& schedule,
                                      const std::vector<ModelUpdate>& updates);

}  // namespace fedsim
