#include "fedsim/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fedsim {

const char* distance_metric_name(DistanceMetric metric) {
  switch (metric) {
    case DistanceMetric::kManhattan: return "manhattan";
    case DistanceMetric::kEuclidean: return "euclidean";
    case DistanceMetric::kCosine: return "cosine";
  }
  return "?";
}

DistanceMetric distance_metric_from_name(const std::string& name) {
  if (name == "manhattan") return DistanceMetric::kManhattan;
  if (name == "euclidean") return DistanceMetric::kEuclidean;
  if (name == "cosine") return DistanceMetric::kCosine;
  raise(ErrorCode::kConfig, "unknown distance metric: " + name);
}

double vector_distance(const std::vector<double>& a,
                       const std::vector<double>& b, DistanceMetric metric) {
  if (a.size() != b.size()) {
    raise(ErrorCode::kShape, "vector_distance: dimension mismatch");
  }
  switch (metric) {
    case DistanceMetric::kManhattan: {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
      return s;
    }
    case DistanceMetric::kEuclidean: {
      double s = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
      }
      return std::sqrt(s);
    }
    case DistanceMetric::kCosine: {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
      }
      if (na == 0.0 || nb == 0.0) return 1.0;
      double c = dot / (std::sqrt(na) * std::sqrt(nb));
      c = std::clamp(c, -1.0, 1.0);
      return 1.0 - c;
    }
  }
  return 0.0;
}

namespace {

double assignment_cost(const std::vector<std::vector<double>>& dist,
                       const std::vector<std::size_t>& medoids) {
  double cost = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m : medoids) best = std::min(best, dist[i][m]);
    cost += best;
  }
  return cost;
}

}  // namespace

ClusterAssignment cluster_clients(
    const std::map<std::string, std::vector<double>>& points, int k,
    DistanceMetric metric) {
  const std::size_t n = points.size();
  if (n == 0) raise(ErrorCode::kConfig, "cluster_clients: no points");
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    raise(ErrorCode::kConfig,
          "cluster_clients: k must be in [1, n], got " + std::to_string(k));
  }

  // std::map iteration gives lexicographic id order; indices below
  // follow that order.
  std::vector<std::string> ids;
  std::vector<const std::vector<double>*> vecs;
  ids.reserve(n);
  vecs.reserve(n);
  for (const auto& [id, v] : points) {
    if (!vecs.empty() && v.size() != vecs.front()->size()) {
      raise(ErrorCode::kShape, "cluster_clients: dimension mismatch for " + id);
    }
    ids.push_back(id);
    vecs.push_back(&v);
  }

  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      dist[i][j] = dist[j][i] = vector_distance(*vecs[i], *vecs[j], metric);
    }
  }

  // Build: lexicographically first k points. Swap: best improvement,
  // first (medoid, candidate) pair in index order wins cost ties.
  std::vector<std::size_t> medoids(static_cast<std::size_t>(k));
  for (std::size_t c = 0; c < medoids.size(); ++c) medoids[c] = c;
  double cost = assignment_cost(dist, medoids);

  std::vector<bool> is_medoid(n, false);
  for (std::size_t m : medoids) is_medoid[m] = true;

  bool improved = true;
  while (improved) {
    improved = false;
    double best_cost = cost;
    std::size_t best_c = 0, best_h = 0;
    for (std::size_t c = 0; c < medoids.size(); ++c) {
      const std::size_t old = medoids[c];
      for (std::size_t h = 0; h < n; ++h) {
        if (is_medoid[h]) continue;
        medoids[c] = h;
        const double trial = assignment_cost(dist, medoids);
        if (trial < best_cost) {
          best_cost = trial;
          best_c = c;
          best_h = h;
          improved = true;
        }
      }
      medoids[c] = old;
    }
    if (improved) {
      is_medoid[medoids[best_c]] = false;
      is_medoid[best_h] = true;
      medoids[best_c] = best_h;
      cost = best_cost;
    }
  }

  // Canonical numbering: cluster 0 holds the lexicographically smallest
  // medoid id.
  std::sort(medoids.begin(), medoids.end());

  ClusterAssignment out;
  out.medoids.reserve(medoids.size());
  for (std::size_t m : medoids) out.medoids.push_back(ids[m]);
  out.total_cost = cost;

  for (std::size_t i = 0; i < n; ++i) {
    int label = -1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < medoids.size(); ++c) {
      if (medoids[c] == i) {  // a medoid always anchors its own cluster
        label = static_cast<int>(c);
        break;
      }
      if (dist[i][medoids[c]] < best) {
        best = dist[i][medoids[c]];
        label = static_cast<int>(c);
      }
    }
    out.labels[ids[i]] = label;
  }
  return out;
}

}  // namespace fedsim
