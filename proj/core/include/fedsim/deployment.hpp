#pragma once

#include <map>
#include <string>
#include <vector>

#include "fedsim/clustering.hpp"
#include "fedsim/coversion.hpp"

namespace fedsim {

struct DeploymentPlan {
  std::map<std::string, Digest> assignments;  // client -> model digest
  std::map<std::string, int> rationale;       // client -> cluster index

  bool operator==(const DeploymentPlan&) const = default;
};

// Maps every clustered client to its cluster's model. Each cluster must
// have a model (kDeployment otherwise) and every digest must be known to
// the registry, so a plan can only point at recorded models.
DeploymentPlan select_deployment(const CoVersionRegistry& registry,
                                 const ClusterAssignment& clusters,
                                 const std::map<int, Digest>& per_cluster_models);

// Cluster choice for a client that never trained: nearest medoid under
// the given metric, ties to the lower cluster index.
int nearest_cluster(const std::vector<std::vector<double>>& medoid_points,
                    const std::vector<double>& point, DistanceMetric metric);

}  // namespace fedsim
