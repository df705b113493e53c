#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/coversion.hpp"
#include "fedsim/metrics.hpp"
#include "fedsim/param_vector.hpp"
#include "fedsim/scenario.hpp"

namespace fedsim {

// Virtual network and compute cost models. Deterministic, no queueing:
// a transfer takes base_latency plus bytes over bandwidth, a training
// job takes ops over capacity.
double transfer_time_ms(double bytes, const DeviceProfile& profile);
double compute_time_ms(double ops, const DeviceProfile& profile);

// Cost of one local training job, in device ops.
double training_ops(std::size_t n_samples, std::size_t dim, int local_epochs);

// Bernoulli draw from the client-and-round-salted stream; the same
// (client, round, seed) triple always answers the same.
bool sample_dropout(const std::string& client_id, int round,
                    std::uint64_t seed, double dropout_prob);

// Everything summary.json holds. Byte totals, times, and final losses
// are folds over the metrics stream, so a reader can recompute them.
struct RunSummary {
  std::string scenario_name;
  std::string aggregator;
  std::string task;
  std::uint64_t seed = 0;
  int rounds_completed = 0;
  bool converged = false;
  std::optional<int> rounds_to_convergence;
  bool trigger_fired = false;
  double virtual_time_ms = 0.0;
  std::optional<double> final_loss;
  std::optional<double> final_accuracy;
  std::uint64_t bytes_up_total = 0;
  std::uint64_t bytes_down_total = 0;
  std::size_t global_records = 0;  // co-version entries on the chain
  std::size_t local_entries = 0;   // local-model contributions across rounds
  std::size_t chain_records = 0;   // all chain records incl. rewards

  bool operator==(const RunSummary&) const = default;
};

std::string summary_to_json(const RunSummary& summary);
RunSummary summary_from_json(const std::string& text);
RunSummary load_summary(const std::filesystem::path& path);

struct RunResult {
  ParamVector global_model;                // state after the last round
  std::vector<ParamVector> round_models;   // global after rounds 1..N
  std::vector<MetricsRecord> metrics;
  RunSummary summary;
  CoVersionRegistry registry;
};

// One full lifecycle: task release, the round loop under the configured
// aggregator, convergence detection, and (when configured) deployment
// and monitoring. Deterministic per scenario: equal inputs give equal
// metrics byte for byte. Validates the scenario first.
RunResult run_scenario(const Scenario& s);

// Same run, plus metrics.jsonl, coversion.log, and summary.json written
// atomically into out_dir (created if missing).
RunResult run_scenario(const Scenario& s, const std::filesystem::path& out_dir);

}  // namespace fedsim
