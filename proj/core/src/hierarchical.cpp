#include "fedsim/hierarchical.hpp"

#include <algorithm>

namespace fedsim {

void validate_schedule(const HierarchicalSchedule& schedule) {
  if (schedule.k1 < 1 || schedule.k2 < 1) {
    raise(ErrorCode::kConfig, "hierarchical: k1 and k2 must be >= 1");
  }
  if (schedule.edge_groups.empty()) {
    raise(ErrorCode::kConfig, "hierarchical: no edge groups");
  }
  std::set<std::string> seen;
  for (const auto& [edge, clients] : schedule.edge_groups) {
    if (clients.empty()) {
      raise(ErrorCode::kConfig, "hierarchical: edge " + edge + " is empty");
    }
    for (const std::string& c : clients) {
      if (!seen.insert(c).second) {
        raise(ErrorCode::kTopology,
              "hierarchical: client " + c + " appears in two edge groups");
      }
    }
  }
}

EdgeModel edge_aggregate(const std::string& edge_id,
                         const std::vector<ModelUpdate>& group_updates) {
  EdgeModel out;
  out.edge_id = edge_id;
  out.params = fedavg(group_updates);
  for (const ModelUpdate& u : group_updates) out.n_samples += u.n_samples;
  return out;
}

ParamVector central_aggregate(const std::vector<EdgeModel>& edges) {
  if (edges.empty()) {
    raise(ErrorCode::kAggregation, "central_aggregate: no edge models");
  }
  std::vector<ModelUpdate> as_updates;
  as_updates.reserve(edges.size());
  for (const EdgeModel& e : edges) {
    ModelUpdate u;
    u.client_id = e.edge_id;
    u.params = e.params;
    u.n_samples = std::max<std::size_t>(1, e.n_samples);
    u.origin_round = static_cast<int>(e.params.version) - 1;
    as_updates.push_back(std::move(u));
  }
  return fedavg(as_updates);
}

HierarchicalResult hierarchical_round(const HierarchicalSchedule& schedule,
                                      const std::vector<ModelUpdate>& updates) {
  validate_schedule(schedule);

  std::map<std::string, std::string> edge_of;
  for (const auto& [edge, clients] : schedule.edge_groups) {
    for (const std::string& c : clients) edge_of[c] = edge;
  }

  std::map<std::string, std::vector<ModelUpdate>> per_edge;
  for (const ModelUpdate& u : updates) {
    auto it = edge_of.find(u.client_id);
    if (it == edge_of.end()) {
      raise(ErrorCode::kTopology,
            "hierarchical: client " + u.client_id + " has no edge group");
    }
    per_edge[it->second].push_back(u);
  }

  HierarchicalResult out;
  std::vector<EdgeModel> edge_list;
  for (const auto& [edge, group] : per_edge) {
    EdgeModel m = edge_aggregate(edge, group);
    edge_list.push_back(m);
    out.edge_models.emplace(edge, std::move(m));
  }
  out.central = central_aggregate(edge_list);
  return out;
}

}  // namespace fedsim
