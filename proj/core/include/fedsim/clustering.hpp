#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"
#include "fedsim/param_vector.hpp"

namespace fedsim {

enum class DistanceMetric { kManhattan, kEuclidean, kCosine };

const char* distance_metric_name(DistanceMetric metric);
DistanceMetric distance_metric_from_name(const std::string& name);

// Distance between two equal-length vectors. Cosine distance is
// 1 - cos(a, b); if either vector has zero norm the distance is 1.
double vector_distance(const std::vector<double>& a,
                       const std::vector<double>& b, DistanceMetric metric);

struct ClusterAssignment {
  // medoid client id per cluster, index = cluster id
  std::vector<std::string> medoids;
  // client id -> cluster id
  std::map<std::string, int> labels;
  // sum of distances from every point to its medoid
  double total_cost = 0.0;
};

// PAM k-medoids over per-client vectors (model updates or gradients).
// Deterministic: the build step seeds with the lexicographically first k
// client ids, then best-improvement swaps run until no swap lowers the
// total cost. Ties prefer the smaller client id. Keys of `points` must
// all have the same dimension; k must be in [1, n].
ClusterAssignment cluster_clients(
    const std::map<std::string, std::vector<double>>& points, int k,
    DistanceMetric metric);

}  // namespace fedsim
