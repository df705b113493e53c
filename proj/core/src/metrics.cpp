#include "fedsim/metrics.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

namespace fedsim {

using nlohmann::json;

namespace {

void require_finite(double v, const char* field) {
  if (!std::isfinite(v)) {
    raise(ErrorCode::kNumeric,
          std::string("metrics field ") + field + " is not finite");
  }
}

}  // namespace

std::string metrics_to_json_line(const MetricsRecord& rec) {
  require_finite(rec.virtual_time_ms, "virtual_time_ms");
  json j;
  j["round"] = rec.round;
  j["virtual_time_ms"] = rec.virtual_time_ms;
  j["event"] = rec.event;
  if (rec.global_loss) {
    require_finite(*rec.global_loss, "global_loss");
    j["global_loss"] = *rec.global_loss;
  }
  if (rec.global_accuracy) {
    require_finite(*rec.global_accuracy, "global_accuracy");
    j["global_accuracy"] = *rec.global_accuracy;
  }
  j["bytes_up"] = rec.bytes_up;
  j["bytes_down"] = rec.bytes_down;
  j["participants"] = rec.participants;
  j["dropouts"] = rec.dropouts;
  j["aggregator"] = rec.aggregator;
  json extra = json::object();
  for (const auto& [k, v] : rec.extra_num) {
    require_finite(v, k.c_str());
    extra[k] = v;
  }
  for (const auto& [k, v] : rec.extra_str) extra[k] = v;
  j["extra"] = std::move(extra);
  return j.dump();
}

MetricsRecord metrics_from_json_line(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    raise(ErrorCode::kParse, std::string("bad metrics line: ") + e.what());
  }
  try {
    MetricsRecord rec;
    rec.round = j.at("round").get<int>();
    rec.virtual_time_ms = j.at("virtual_time_ms").get<double>();
    rec.event = j.at("event").get<std::string>();
    if (j.contains("global_loss")) {
      rec.global_loss = j["global_loss"].get<double>();
    }
    if (j.contains("global_accuracy")) {
      rec.global_accuracy = j["global_accuracy"].get<double>();
    }
    rec.bytes_up = j.at("bytes_up").get<std::uint64_t>();
    rec.bytes_down = j.at("bytes_down").get<std::uint64_t>();
    rec.participants = j.at("participants").get<int>();
    rec.dropouts = j.at("dropouts").get<int>();
    rec.aggregator = j.at("aggregator").get<std::string>();
    for (const auto& [k, v] : j.at("extra").items()) {
      if (v.is_string()) {
        rec.extra_str[k] = v.get<std::string>();
      } else {
        rec.extra_num[k] = v.get<double>();
      }
    }
    return rec;
  } catch (const json::exception& e) {
    raise(ErrorCode::kParse, std::string("bad metrics line: ") + e.what());
  }
}

void write_metrics_jsonl(const std::filesystem::path& path,
                         const std::vector<MetricsRecord>& records) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::kIo, "cannot open " + tmp.string());
    for (const MetricsRecord& rec : records) {
      out << metrics_to_json_line(rec) << '\n';
    }
    if (!out) raise(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<MetricsRecord> read_metrics_jsonl(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<MetricsRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(metrics_from_json_line(line));
    } catch (const Error& e) {
      raise(e.code(), path.filename().string() + ":" +
                          std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

MetricsTotals fold_metrics(const std::vector<MetricsRecord>& records) {
  MetricsTotals t;
  for (const MetricsRecord& rec : records) {
    t.bytes_up += rec.bytes_up;
    t.bytes_down += rec.bytes_down;
    t.last_time_ms = std::max(t.last_time_ms, rec.virtual_time_ms);
    t.last_round = std::max(t.last_round, rec.round);
    if (rec.global_loss) t.final_loss = rec.global_loss;
    if (rec.global_accuracy) t.final_accuracy = rec.global_accuracy;
  }
  return t;
}

}  // namespace fedsim
