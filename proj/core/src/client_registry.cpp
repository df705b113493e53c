#include "fedsim/client_registry.hpp"

#include <mutex>

#include <nlohmann/json.hpp>

namespace fedsim {

using nlohmann::json;

namespace {

void validate_record(const ClientRecord& r) {
  if (r.client_id.empty()) {
    raise(ErrorCode::kConfig, "client record: empty client_id");
  }
  if (r.compute_capacity <= 0 || r.bandwidth <= 0) {
    raise(ErrorCode::kConfig,
          "client record " + r.client_id +
              ": compute_capacity and bandwidth must be positive");
  }
  if (r.energy_budget < 0) {
    raise(ErrorCode::kConfig,
          "client record " + r.client_id + ": negative energy_budget");
  }
  if (r.connect_time_ms && r.disconnect_time_ms &&
      *r.disconnect_time_ms < *r.connect_time_ms) {
    raise(ErrorCode::kConfig,
          "client record " + r.client_id +
              ": disconnect_time before connect_time");
  }
  for (std::size_t i = 1; i < r.perf_history.size(); ++i) {
    if (r.perf_history[i].round <= r.perf_history[i - 1].round) {
      raise(ErrorCode::kConfig,
            "client record " + r.client_id +
                ": perf_history rounds not strictly increasing");
    }
  }
}

}  // namespace

ClientRegistry::ClientRegistry(const ClientRegistry& other) {
  std::shared_lock lock(other.mu_);
  records_ = other.records_;
}

ClientRegistry& ClientRegistry::operator=(const ClientRegistry& other) {
  if (this == &other) return *this;
  std::map<std::string, ClientRecord> copy;
  {
    std::shared_lock lock(other.mu_);
    copy = other.records_;
  }
  std::unique_lock lock(mu_);
  records_ = std::move(copy);
  return *this;
}

void ClientRegistry::register_client(const ClientRecord& record) {
  validate_record(record);
  std::unique_lock lock(mu_);
  auto it = records_.find(record.client_id);
  if (it == records_.end()) {
    records_.emplace(record.client_id, record);
    return;
  }
  if (it->second == record) return;  // idempotent
  if (it->second.connect_time_ms != record.connect_time_ms) {
    raise(ErrorCode::kRegistryConflict,
          "client " + record.client_id +
              " re-registered with a different connect_time");
  }
  it->second = record;
}

std::optional<ClientRecord> ClientRegistry::find(
    const std::string& client_id) const {
  std::shared_lock lock(mu_);
  auto it = records_.find(client_id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

ClientRecord ClientRegistry::get(const std::string& client_id) const {
  auto r = find(client_id);
  if (!r) raise(ErrorCode::kNotFound, "client " + client_id + " not registered");
  return *r;
}

bool ClientRegistry::contains(const std::string& client_id) const {
  std::shared_lock lock(mu_);
  return records_.count(client_id) > 0;
}

std::size_t ClientRegistry::size() const {
  std::shared_lock lock(mu_);
  return records_.size();
}

std::vector<std::string> ClientRegistry::ids() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& [id, _] : records_) out.push_back(id);
  return out;
}

std::vector<ClientRecord> ClientRegistry::snapshot() const {
  std::shared_lock lock(mu_);
  std::vector<ClientRecord> out;
  out.reserve(records_.size());
  for (const auto& [_, rec] : records_) out.push_back(rec);
  return out;
}

void ClientRegistry::set_online(const std::string& client_id, bool online) {
  std::unique_lock lock(mu_);
  auto it = records_.find(client_id);
  if (it == records_.end()) {
    raise(ErrorCode::kNotFound, "client " + client_id + " not registered");
  }
  it->second.online = online;
}

void ClientRegistry::append_perf(const std::string& client_id, int round,
                                 double loss) {
  std::unique_lock lock(mu_);
  auto it = records_.find(client_id);
  if (it == records_.end()) {
    raise(ErrorCode::kNotFound, "client " + client_id + " not registered");
  }
  auto& hist = it->second.perf_history;
  if (!hist.empty() && hist.back().round >= round) {
    raise(ErrorCode::kConfig,
          "client " + client_id + ": perf rounds must increase");
  }
  hist.push_back({round, loss});
}

namespace {

json record_to_json(const ClientRecord& r) {
  json histogram = json::object();
  for (const auto& [cls, count] : r.data_summary.class_histogram) {
    histogram[std::to_string(cls)] = count;
  }
  json perf = json::array();
  for (const auto& p : r.perf_history) {
    perf.push_back({{"round", p.round}, {"loss", p.loss}});
  }
  json j{
      {"client_id", r.client_id},
      {"compute_capacity", r.compute_capacity},
      {"bandwidth", r.bandwidth},
      {"energy_budget", r.energy_budget},
      {"online", r.online},
      {"perf_history", perf},
      {"data_summary",
       {{"n_samples", r.data_summary.n_samples},
        {"class_histogram", histogram},
        {"centroid_gap", r.data_summary.centroid_gap}}},
  };
  if (r.connect_time_ms) j["connect_time_ms"] = *r.connect_time_ms;
  if (r.disconnect_time_ms) j["disconnect_time_ms"] = *r.disconnect_time_ms;
  return j;
}

ClientRecord record_from_json(const json& j) {
  ClientRecord r;
  r.client_id = j.at("client_id").get<std::string>();
  if (j.contains("connect_time_ms"))
    r.connect_time_ms = j["connect_time_ms"].get<double>();
  if (j.contains("disconnect_time_ms"))
    r.disconnect_time_ms = j["disconnect_time_ms"].get<double>();
  r.compute_capacity = j.at("compute_capacity").get<double>();
  r.bandwidth = j.at("bandwidth").get<double>();
  r.energy_budget = j.value("energy_budget", 0.0);
  r.online = j.value("online", true);
  for (const auto& p : j.value("perf_history", json::array())) {
    r.perf_history.push_back(
        {p.at("round").get<int>(), p.at("loss").get<double>()});
  }
  if (j.contains("data_summary")) {
    const auto& ds = j["data_summary"];
    r.data_summary.n_samples = ds.value("n_samples", std::size_t{0});
    r.data_summary.centroid_gap = ds.value("centroid_gap", 0.0);
    // .items() on a temporary would dangle; keep the histogram alive.
    const json hist = ds.value("class_histogram", json::object());
    for (const auto& [key, val] : hist.items()) {
      r.data_summary.class_histogram[std::stoi(key)] =
          val.get<std::size_t>();
    }
  }
  return r;
}

}  // namespace

std::string ClientRegistry::to_json() const {
  json clients = json::array();
  for (const auto& rec : snapshot()) clients.push_back(record_to_json(rec));
  return json{{"clients", clients}}.dump(2) + "\n";
}

ClientRegistry ClientRegistry::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    raise(ErrorCode::kParse, std::string("registry json: ") + e.what());
  }
  ClientRegistry reg;
  try {
    for (const auto& item : j.at("clients")) {
      reg.register_client(record_from_json(item));
    }
  } catch (const json::exception& e) {
    raise(ErrorCode::kParse, std::string("registry json: ") + e.what());
  }
  return reg;
}

}  // namespace fedsim
