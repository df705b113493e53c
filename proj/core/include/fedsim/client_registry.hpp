#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "fedsim/errors.hpp"

namespace fedsim {

struct PerfPoint {
  int round = 0;
  double loss = 0.0;
  friend bool operator==(const PerfPoint&, const PerfPoint&) = default;
};

struct DataSummary {
  std::size_t n_samples = 0;
  std::map<int, std::size_t> class_histogram;
  // Distance between the positive and negative class feature centroids,
  // reported by the client; 0 when unknown or not applicable.
  double centroid_gap = 0.0;
  friend bool operator==(const DataSummary&, const DataSummary&) = default;
};

// Registry entry for one participating device. connect_time is fixed at
// first registration; everything else may be updated by re-registering.
struct ClientRecord {
  std::string client_id;
  std::optional<double> connect_time_ms;
  std::optional<double> disconnect_time_ms;
  double compute_capacity = 1.0;  // ops per virtual ms
  double bandwidth = 1.0;         // bytes per virtual ms
  double energy_budget = 0.0;
  bool online = true;
  std::vector<PerfPoint> perf_history;  // rounds strictly increasing
  DataSummary data_summary;

  friend bool operator==(const ClientRecord&, const ClientRecord&) = default;
};

// Thread contract: many concurrent readers, serialized writers; reads see
// whole records, never a partial update.
class ClientRegistry {
 public:
  ClientRegistry() = default;
  ClientRegistry(const ClientRegistry& other);
  ClientRegistry& operator=(const ClientRegistry& other);

  // Insert, or update when the id already exists. Identical re-register
  // is a no-op; changing client_id-immutable fields (connect_time) on an
  // existing record is a conflict.
  void register_client(const ClientRecord& record);

  std::optional<ClientRecord> find(const std::string& client_id) const;
  ClientRecord get(const std::string& client_id) const;  // throws not-found
  bool contains(const std::string& client_id) const;
  std::size_t size() const;
  std::vector<std::string> ids() const;          // sorted
  std::vector<ClientRecord> snapshot() const;    // sorted by id

  void set_online(const std::string& client_id, bool online);
  void append_perf(const std::string& client_id, int round, double loss);

  std::string to_json() const;  // stable key order, one object per client
  static ClientRegistry from_json(const std::string& text);

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, ClientRecord> records_;
};

}  // namespace fedsim
