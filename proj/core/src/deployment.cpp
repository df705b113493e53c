#include "fedsim/deployment.hpp"

#include <limits>

namespace fedsim {

DeploymentPlan select_deployment(
    const CoVersionRegistry& registry, const ClusterAssignment& clusters,
    const std::map<int, Digest>& per_cluster_models) {
  DeploymentPlan plan;
  for (const auto& [client, cluster] : clusters.labels) {
    auto it = per_cluster_models.find(cluster);
    if (it == per_cluster_models.end()) {
      raise(ErrorCode::kDeployment, "no model for cluster " +
                                        std::to_string(cluster) +
                                        " needed by client " + client);
    }
    if (!registry.has_global_digest(it->second)) {
      raise(ErrorCode::kDeployment,
            "cluster " + std::to_string(cluster) +
                " model digest is not in the co-versioning registry");
    }
    plan.assignments[client] = it->second;
    plan.rationale[client] = cluster;
  }
  return plan;
}

int nearest_cluster(const std::vector<std::vector<double>>& medoid_points,
                    const std::vector<double>& point, DistanceMetric metric) {
  if (medoid_points.empty()) {
    raise(ErrorCode::kConfig, "nearest_cluster: no medoids");
  }
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < medoid_points.size(); ++c) {
    const double d = vector_distance(medoid_points[c], point, metric);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace fedsim
