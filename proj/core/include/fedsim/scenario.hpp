#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/aggregation.hpp"
#include "fedsim/clustering.hpp"
#include "fedsim/compression.hpp"
#include "fedsim/dataset.hpp"
#include "fedsim/gossip.hpp"
#include "fedsim/incentives.hpp"
#include "fedsim/selection.hpp"
#include "fedsim/synthetic.hpp"
#include "fedsim/training.hpp"
#include "fedsim/trigger.hpp"

namespace fedsim {

enum class AggregatorKind { kFedAvg, kAsync, kGossip, kHierarchical, kSecure };

const char* aggregator_kind_name(AggregatorKind kind);
AggregatorKind aggregator_kind_from_name(const std::string& name);

// ops per virtual ms, bytes per virtual ms, fixed latency, and the
// chance of sitting a round out.
struct DeviceProfile {
  double compute_capacity = 1.0;
  double bandwidth = 100.0;
  double base_latency = 5.0;
  double dropout_prob = 0.0;

  bool operator==(const DeviceProfile&) const = default;
};

struct PartitionSpec {
  enum class Kind { kDirichlet, kTwoMode } kind = Kind::kDirichlet;
  double skew = 0.0;       // dirichlet label/feature skew
  double mode_gap = 2.0;   // two_mode separation

  bool operator==(const PartitionSpec&) const = default;
};

struct AsyncConfig {
  StalenessPolicy policy;
  double mix = 0.5;
  double round_deadline_ms = 0.0;  // 0 = no deadline, nothing defers

  bool operator==(const AsyncConfig&) const = default;
};

struct GossipConfig {
  int fanout = 1;
  int segments = 1;
  GossipMode mode = GossipMode::kSymmetric;
  std::string topology = "complete";  // complete | ring
  int ticks_per_round = 1;

  bool operator==(const GossipConfig&) const = default;
};

struct HierarchicalConfig {
  int k1 = 1;
  int k2 = 1;
  int n_edges = 1;  // used when no explicit groups are given
  std::map<std::string, std::vector<std::string>> edges;
  std::map<std::string, std::vector<int>> edge_failures;  // edge -> rounds out

  bool operator==(const HierarchicalConfig&) const = default;
};

struct SecureConfig {
  double dp_clip_norm = 0.0;  // 0 disables the DP step
  double dp_sigma = 0.0;

  bool operator==(const SecureConfig&) const = default;
};

struct ClusteringConfig {
  bool enabled = false;
  int k = 2;
  DistanceMetric metric = DistanceMetric::kCosine;

  bool operator==(const ClusteringConfig&) const = default;
};

struct MultiTaskConfig {
  enum class Anchor { kNone, kGlobal, kClusterMean } anchor = Anchor::kNone;
  double lambda = 0.0;

  bool operator==(const MultiTaskConfig&) const = default;
};

struct BalanceConfig {
  bool enabled = false;
  double tolerance = 1.5;

  bool operator==(const BalanceConfig&) const = default;
};

struct IncentiveConfig {
  bool enabled = false;
  IncentiveScheme scheme = IncentiveScheme::kDataVolume;
  double budget_per_round = 1.0;
  std::size_t probe_samples = 200;

  bool operator==(const IncentiveConfig&) const = default;
};

struct TriggerConfig {
  bool enabled = false;
  double threshold = 0.8;
  int patience = 3;
  double quorum_fraction = 0.5;
  int monitor_rounds = 0;
  double drift_shift = 0.0;  // per-round feature drift while monitored

  bool operator==(const TriggerConfig&) const = default;
};

struct ConvergenceConfig {
  bool enabled = true;
  double rel_tol = 1e-4;
  int window = 5;

  bool operator==(const ConvergenceConfig&) const = default;
};

// Everything a run needs. Loaded from a strict JSON tree: unknown keys
// anywhere are validation errors, so a typo in a toggle cannot silently
// run the wrong experiment.
struct Scenario {
  int version = 1;
  std::string name = "scenario";
  std::uint64_t seed = 0;
  int rounds = 1;
  std::size_t n_clients = 2;
  TaskKind task = TaskKind::kBinaryLogistic;
  PartitionSpec partition;
  std::size_t samples_per_client = 200;
  std::size_t n_features = 5;
  double noise_std = 0.1;

  AggregatorKind aggregator = AggregatorKind::kFedAvg;
  SelectionCriteria selection;
  bool selection_all = true;  // default: every online client participates
  TrainingConfig training;
  DeviceProfile device;
  std::map<std::string, DeviceProfile> device_overrides;
  CompressionConfig compression;
  AsyncConfig async_cfg;
  GossipConfig gossip;
  HierarchicalConfig hierarchical;
  SecureConfig secure;
  ClusteringConfig clustering;
  MultiTaskConfig multi_task;
  BalanceConfig balance;
  IncentiveConfig incentives;
  TriggerConfig trigger;
  ConvergenceConfig convergence;
};

// Zero-padded deterministic client naming: c000, c001, ...
std::string client_name(std::size_t index, std::size_t n_clients);

// Syntax problems raise kParse (with the parser's line info); anything
// structural raises kValidation naming the field path.
Scenario parse_scenario_json(const std::string& text);
Scenario load_scenario(const std::filesystem::path& path);

// Cross-field checks; called by parse_scenario_json and again by the
// simulator before a run.
void validate_scenario(const Scenario& s);

}  // namespace fedsim
