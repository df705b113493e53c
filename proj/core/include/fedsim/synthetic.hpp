#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fedsim/dataset.hpp"
#include "fedsim/param_vector.hpp"

namespace fedsim {

// Knobs for the synthetic task generators. Defaults give a small,
// well-conditioned desk-scale problem.
struct PartitionConfig {
  std::size_t samples_per_client = 200;
  std::size_t n_features = 5;
  double noise_std = 0.1;    // label noise (regression), margin noise source
  double class_sep = 2.0;    // distance between class centroids (logistic)
  double shift_scale = 0.5;  // per-client feature shift per unit of skew
};

struct SyntheticPool {
  Dataset pool;
  ParamVector true_weights;  // generating weights, [w..., bias]
};

// One draw of the global synthetic task, before any partitioning.
SyntheticPool generate_pool(TaskKind task, std::size_t total_samples,
                            std::uint64_t seed,
                            const PartitionConfig& cfg = {});

// Splits clients with label skew controlled by a Dirichlet draw of
// concentration alpha = 1 / (skew + 1e-3). skew 0 is statistically IID;
// large skew concentrates each client onto nearly a single class. For
// regression the skew instead shifts per-client feature means.
std::vector<Dataset> generate_partitions(std::size_t n_clients, double skew,
                                         TaskKind task, std::uint64_t seed,
                                         const PartitionConfig& cfg = {});

// Same draw as generate_partitions but also exposes the generating
// weights; used wherever an exact-fit reference is needed.
struct PartitionedData {
  std::vector<Dataset> clients;
  ParamVector true_weights;
};
PartitionedData generate_partitioned(std::size_t n_clients, double skew,
                                     TaskKind task, std::uint64_t seed,
                                     const PartitionConfig& cfg = {});

// Planted two-population split: the first half of the clients share one
// generating weight vector, the rest its negation, mode_gap apart along
// a random direction. A single global model fits neither population;
// clustering on update directions should recover the halves exactly.
struct TwoModeData {
  std::vector<Dataset> clients;
  std::vector<int> true_mode;  // 0 for the first half, 1 for the rest
  std::array<ParamVector, 2> mode_weights;
};
TwoModeData generate_two_mode(std::size_t n_clients, double mode_gap,
                              TaskKind task, std::uint64_t seed,
                              const PartitionConfig& cfg = {});

}  // namespace fedsim
