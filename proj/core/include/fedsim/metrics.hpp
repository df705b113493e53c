#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"

namespace fedsim {

// One simulator event as it appears in metrics.jsonl. Extras carry
// pattern-specific detail (rewards, trigger state, cluster labels)
// without widening the fixed schema.
struct MetricsRecord {
  int round = 0;
  double virtual_time_ms = 0.0;
  std::string event;
  std::optional<double> global_loss;
  std::optional<double> global_accuracy;
  std::uint64_t bytes_up = 0;
  std::uint64_t bytes_down = 0;
  int participants = 0;
  int dropouts = 0;
  std::string aggregator;
  std::map<std::string, double> extra_num;
  std::map<std::string, std::string> extra_str;

  bool operator==(const MetricsRecord&) const = default;
};

// One JSON object, no trailing newline; keys sorted, so equal records
// always serialize to equal bytes.
std::string metrics_to_json_line(const MetricsRecord& rec);
MetricsRecord metrics_from_json_line(const std::string& line);

void write_metrics_jsonl(const std::filesystem::path& path,
                         const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> read_metrics_jsonl(const std::filesystem::path& path);

// Totals a metrics stream; summary.json is this fold, so an external
// script can recompute it.
struct MetricsTotals {
  std::uint64_t bytes_up = 0;
  std::uint64_t bytes_down = 0;
  double last_time_ms = 0.0;
  int last_round = 0;
  std::optional<double> final_loss;
  std::optional<double> final_accuracy;
};
MetricsTotals fold_metrics(const std::vector<MetricsRecord>& records);

}  // namespace fedsim
