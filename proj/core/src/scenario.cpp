#include "fedsim/scenario.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fedsim {

using nlohmann::json;

const char* aggregator_kind_name(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::kFedAvg: return "fedavg";
    case AggregatorKind::kAsync: return "async";
    case AggregatorKind::kGossip: return "gossip";
    case AggregatorKind::kHierarchical: return "hierarchical";
    case AggregatorKind::kSecure: return "secure";
  }
  return "?";
}

AggregatorKind aggregator_kind_from_name(const std::string& name) {
  if (name == "fedavg") return AggregatorKind::kFedAvg;
  if (name == "async") return AggregatorKind::kAsync;
  if (name == "gossip") return AggregatorKind::kGossip;
  if (name == "hierarchical") return AggregatorKind::kHierarchical;
  if (name == "secure") return AggregatorKind::kSecure;
  raise(ErrorCode::kConfig, "unknown aggregator: " + name);
}

std::string client_name(std::size_t index, std::size_t n_clients) {
  int width = 3;
  for (std::size_t v = n_clients > 0 ? n_clients - 1 : 0; v >= 1000; v /= 10) {
    ++width;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "c%0*zu", width, index);
  return buf;
}

namespace {

[[noreturn]] void bad_field(const std::string& path, const std::string& why) {
  raise(ErrorCode::kValidation, path + ": " + why);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end()) {
      bad_field(path.empty() ? key : path + "." + key, "unknown key");
    }
  }
}

const json& need_object(const json& v, const std::string& path) {
  if (!v.is_object()) bad_field(path, "expected an object");
  return v;
}

double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) bad_field(path, "expected a number");
  return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) bad_field(path, "expected an integer");
  return v.get<int>();
}

std::uint64_t as_u64(const json& v, const std::string& path) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    bad_field(path, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) bad_field(path, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) bad_field(path, "expected a string");
  return v.get<std::string>();
}

// Translates enum-name lookups (which raise kConfig) into validation
// errors that carry the field path.
template <typename Fn>
auto named(Fn&& fn, const std::string& value, const std::string& path)
    -> decltype(fn(value)) {
  try {
    return fn(value);
  } catch (const Error&) {
    bad_field(path, "unknown value '" + value + "'");
  }
}

DeviceProfile parse_device(const json& obj, const std::string& path,
                           const DeviceProfile& base) {
  check_keys(obj, path,
             {"compute_capacity", "bandwidth", "base_latency", "dropout_prob"});
  DeviceProfile d = base;
  if (obj.contains("compute_capacity")) {
    d.compute_capacity = as_double(obj["compute_capacity"], path + ".compute_capacity");
  }
  if (obj.contains("bandwidth")) {
    d.bandwidth = as_double(obj["bandwidth"], path + ".bandwidth");
  }
  if (obj.contains("base_latency")) {
    d.base_latency = as_double(obj["base_latency"], path + ".base_latency");
  }
  if (obj.contains("dropout_prob")) {
    d.dropout_prob = as_double(obj["dropout_prob"], path + ".dropout_prob");
  }
  return d;
}

void check_device(const DeviceProfile& d, const std::string& path) {
  if (d.compute_capacity <= 0) bad_field(path + ".compute_capacity", "must be > 0");
  if (d.bandwidth <= 0) bad_field(path + ".bandwidth", "must be > 0");
  if (d.base_latency < 0) bad_field(path + ".base_latency", "must be >= 0");
  if (d.dropout_prob < 0 || d.dropout_prob >= 1) {
    bad_field(path + ".dropout_prob", "must be in [0, 1)");
  }
}

}  // namespace

Scenario parse_scenario_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    const std::size_t limit = std::min<std::size_t>(e.byte, text.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (text[i] == '\n') ++line;
    }
    raise(ErrorCode::kParse,
          "line " + std::to_string(line) + ": " + e.what());
  }
  if (!j.is_object()) {
    bad_field("scenario", "top level must be an object");
  }
  check_keys(j, "",
             {"version", "name", "seed", "rounds", "n_clients", "task",
              "partition", "samples_per_client", "n_features", "noise_std",
              "aggregator", "selection", "training", "device", "devices",
              "compression", "async", "gossip", "hierarchical", "secure",
              "clustering", "multi_task", "balance", "incentives", "trigger",
              "convergence"});

  Scenario s;
  if (!j.contains("version")) bad_field("version", "required");
  s.version = as_int(j["version"], "version");
  if (j.contains("name")) s.name = as_string(j["name"], "name");
  if (j.contains("seed")) s.seed = as_u64(j["seed"], "seed");
  if (j.contains("rounds")) s.rounds = as_int(j["rounds"], "rounds");
  if (j.contains("n_clients")) {
    s.n_clients = static_cast<std::size_t>(as_u64(j["n_clients"], "n_clients"));
  }
  if (j.contains("task")) {
    s.task = named(task_kind_from_name, as_string(j["task"], "task"), "task");
  }
  if (j.contains("samples_per_client")) {
    s.samples_per_client = static_cast<std::size_t>(
        as_u64(j["samples_per_client"], "samples_per_client"));
  }
  if (j.contains("n_features")) {
    s.n_features =
        static_cast<std::size_t>(as_u64(j["n_features"], "n_features"));
  }
  if (j.contains("noise_std")) {
    s.noise_std = as_double(j["noise_std"], "noise_std");
  }
  if (j.contains("aggregator")) {
    s.aggregator = named(aggregator_kind_from_name,
                         as_string(j["aggregator"], "aggregator"), "aggregator");
  }

  if (j.contains("partition")) {
    const json& p = need_object(j["partition"], "partition");
    check_keys(p, "partition", {"kind", "skew", "mode_gap"});
    if (p.contains("kind")) {
      const std::string kind = as_string(p["kind"], "partition.kind");
      if (kind == "dirichlet") {
        s.partition.kind = PartitionSpec::Kind::kDirichlet;
      } else if (kind == "two_mode") {
        s.partition.kind = PartitionSpec::Kind::kTwoMode;
      } else {
        bad_field("partition.kind", "unknown value '" + kind + "'");
      }
    }
    if (p.contains("skew")) s.partition.skew = as_double(p["skew"], "partition.skew");
    if (p.contains("mode_gap")) {
      s.partition.mode_gap = as_double(p["mode_gap"], "partition.mode_gap");
    }
  }

  s.selection.top_k = static_cast<int>(s.n_clients);
  if (j.contains("selection")) {
    s.selection_all = false;
    const json& sel = need_object(j["selection"], "selection");
    check_keys(sel, "selection",
               {"mode", "top_k", "min_compute", "min_bandwidth",
                "max_heterogeneity"});
    if (sel.contains("mode")) {
      s.selection.mode =
          named(selection_mode_from_name, as_string(sel["mode"], "selection.mode"),
                "selection.mode");
    }
    if (sel.contains("top_k")) {
      s.selection.top_k = as_int(sel["top_k"], "selection.top_k");
    }
    if (sel.contains("min_compute")) {
      s.selection.min_compute = as_double(sel["min_compute"], "selection.min_compute");
    }
    if (sel.contains("min_bandwidth")) {
      s.selection.min_bandwidth =
          as_double(sel["min_bandwidth"], "selection.min_bandwidth");
    }
    if (sel.contains("max_heterogeneity")) {
      s.selection.max_heterogeneity =
          as_double(sel["max_heterogeneity"], "selection.max_heterogeneity");
    }
  }

  if (j.contains("training")) {
    const json& t = need_object(j["training"], "training");
    check_keys(t, "training", {"learning_rate", "local_epochs", "batch_size"});
    if (t.contains("learning_rate")) {
      s.training.learning_rate = as_double(t["learning_rate"], "training.learning_rate");
    }
    if (t.contains("local_epochs")) {
      s.training.local_epochs = as_int(t["local_epochs"], "training.local_epochs");
    }
    if (t.contains("batch_size")) {
      s.training.batch_size = as_int(t["batch_size"], "training.batch_size");
    }
  }

  if (j.contains("device")) {
    s.device = parse_device(need_object(j["device"], "device"), "device", s.device);
  }
  if (j.contains("devices")) {
    const json& devs = need_object(j["devices"], "devices");
    for (const auto& [id, obj] : devs.items()) {
      s.device_overrides[id] =
          parse_device(need_object(obj, "devices." + id), "devices." + id, s.device);
    }
  }

  if (j.contains("compression")) {
    const json& c = need_object(j["compression"], "compression");
    check_keys(c, "compression", {"scheme", "k", "bits"});
    if (c.contains("scheme")) {
      s.compression.scheme =
          named(compression_scheme_from_name,
                as_string(c["scheme"], "compression.scheme"), "compression.scheme");
    }
    if (c.contains("k")) {
      s.compression.k = as_u64(c["k"], "compression.k");
    }
    if (c.contains("bits")) {
      s.compression.bits = as_int(c["bits"], "compression.bits");
    }
  }

  if (j.contains("async")) {
    const json& a = need_object(j["async"], "async");
    check_keys(a, "async", {"decay", "rate", "mix", "round_deadline_ms"});
    if (a.contains("decay")) {
      s.async_cfg.policy.decay = named(
          decay_kind_from_name, as_string(a["decay"], "async.decay"), "async.decay");
    }
    if (a.contains("rate")) {
      s.async_cfg.policy.rate = as_double(a["rate"], "async.rate");
    }
    if (a.contains("mix")) s.async_cfg.mix = as_double(a["mix"], "async.mix");
    if (a.contains("round_deadline_ms")) {
      s.async_cfg.round_deadline_ms =
          as_double(a["round_deadline_ms"], "async.round_deadline_ms");
    }
  }

  if (j.contains("gossip")) {
    const json& g = need_object(j["gossip"], "gossip");
    check_keys(g, "gossip",
               {"fanout", "segments", "mode", "topology", "ticks_per_round"});
    if (g.contains("fanout")) s.gossip.fanout = as_int(g["fanout"], "gossip.fanout");
    if (g.contains("segments")) {
      s.gossip.segments = as_int(g["segments"], "gossip.segments");
    }
    if (g.contains("mode")) {
      s.gossip.mode = named(gossip_mode_from_name,
                            as_string(g["mode"], "gossip.mode"), "gossip.mode");
    }
    if (g.contains("topology")) {
      s.gossip.topology = as_string(g["topology"], "gossip.topology");
    }
    if (g.contains("ticks_per_round")) {
      s.gossip.ticks_per_round = as_int(g["ticks_per_round"], "gossip.ticks_per_round");
    }
  }

  if (j.contains("hierarchical")) {
    const json& h = need_object(j["hierarchical"], "hierarchical");
    check_keys(h, "hierarchical", {"k1", "k2", "n_edges", "edges", "edge_failures"});
    if (h.contains("k1")) s.hierarchical.k1 = as_int(h["k1"], "hierarchical.k1");
    if (h.contains("k2")) s.hierarchical.k2 = as_int(h["k2"], "hierarchical.k2");
    if (h.contains("n_edges")) {
      s.hierarchical.n_edges = as_int(h["n_edges"], "hierarchical.n_edges");
    }
    if (h.contains("edges")) {
      const json& edges = need_object(h["edges"], "hierarchical.edges");
      for (const auto& [edge, members] : edges.items()) {
        const std::string path = "hierarchical.edges." + edge;
        if (!members.is_array()) bad_field(path, "expected an array");
        for (const auto& m : members) {
          s.hierarchical.edges[edge].push_back(as_string(m, path));
        }
      }
    }
    if (h.contains("edge_failures")) {
      const json& fails = need_object(h["edge_failures"], "hierarchical.edge_failures");
      for (const auto& [edge, rounds] : fails.items()) {
        const std::string path = "hierarchical.edge_failures." + edge;
        if (!rounds.is_array()) bad_field(path, "expected an array");
        for (const auto& r : rounds) {
          s.hierarchical.edge_failures[edge].push_back(as_int(r, path));
        }
      }
    }
  }

  if (j.contains("secure")) {
    const json& sec = need_object(j["secure"], "secure");
    check_keys(sec, "secure", {"dp_clip_norm", "dp_sigma"});
    if (sec.contains("dp_clip_norm")) {
      s.secure.dp_clip_norm = as_double(sec["dp_clip_norm"], "secure.dp_clip_norm");
    }
    if (sec.contains("dp_sigma")) {
      s.secure.dp_sigma = as_double(sec["dp_sigma"], "secure.dp_sigma");
    }
  }

  if (j.contains("clustering")) {
    const json& c = need_object(j["clustering"], "clustering");
    check_keys(c, "clustering", {"enabled", "k", "metric"});
    if (c.contains("enabled")) {
      s.clustering.enabled = as_bool(c["enabled"], "clustering.enabled");
    }
    if (c.contains("k")) s.clustering.k = as_int(c["k"], "clustering.k");
    if (c.contains("metric")) {
      s.clustering.metric =
          named(distance_metric_from_name,
                as_string(c["metric"], "clustering.metric"), "clustering.metric");
    }
  }

  if (j.contains("multi_task")) {
    const json& m = need_object(j["multi_task"], "multi_task");
    check_keys(m, "multi_task", {"anchor", "lambda"});
    if (m.contains("anchor")) {
      const std::string anchor = as_string(m["anchor"], "multi_task.anchor");
      if (anchor == "none") {
        s.multi_task.anchor = MultiTaskConfig::Anchor::kNone;
      } else if (anchor == "global") {
        s.multi_task.anchor = MultiTaskConfig::Anchor::kGlobal;
      } else if (anchor == "cluster_mean") {
        s.multi_task.anchor = MultiTaskConfig::Anchor::kClusterMean;
      } else {
        bad_field("multi_task.anchor", "unknown value '" + anchor + "'");
      }
    }
    if (m.contains("lambda")) {
      s.multi_task.lambda = as_double(m["lambda"], "multi_task.lambda");
    }
  }

  if (j.contains("balance")) {
    const json& b = need_object(j["balance"], "balance");
    check_keys(b, "balance", {"enabled", "tolerance"});
    if (b.contains("enabled")) s.balance.enabled = as_bool(b["enabled"], "balance.enabled");
    if (b.contains("tolerance")) {
      s.balance.tolerance = as_double(b["tolerance"], "balance.tolerance");
    }
  }

  if (j.contains("incentives")) {
    const json& inc = need_object(j["incentives"], "incentives");
    check_keys(inc, "incentives",
               {"enabled", "scheme", "budget_per_round", "probe_samples"});
    if (inc.contains("enabled")) {
      s.incentives.enabled = as_bool(inc["enabled"], "incentives.enabled");
    }
    if (inc.contains("scheme")) {
      s.incentives.scheme =
          named(incentive_scheme_from_name,
                as_string(inc["scheme"], "incentives.scheme"), "incentives.scheme");
    }
    if (inc.contains("budget_per_round")) {
      s.incentives.budget_per_round =
          as_double(inc["budget_per_round"], "incentives.budget_per_round");
    }
    if (inc.contains("probe_samples")) {
      s.incentives.probe_samples = static_cast<std::size_t>(
          as_u64(inc["probe_samples"], "incentives.probe_samples"));
    }
  }

  if (j.contains("trigger")) {
    const json& t = need_object(j["trigger"], "trigger");
    check_keys(t, "trigger",
               {"enabled", "threshold", "patience", "quorum_fraction",
                "monitor_rounds", "drift_shift"});
    if (t.contains("enabled")) s.trigger.enabled = as_bool(t["enabled"], "trigger.enabled");
    if (t.contains("threshold")) {
      s.trigger.threshold = as_double(t["threshold"], "trigger.threshold");
    }
    if (t.contains("patience")) {
      s.trigger.patience = as_int(t["patience"], "trigger.patience");
    }
    if (t.contains("quorum_fraction")) {
      s.trigger.quorum_fraction =
          as_double(t["quorum_fraction"], "trigger.quorum_fraction");
    }
    if (t.contains("monitor_rounds")) {
      s.trigger.monitor_rounds = as_int(t["monitor_rounds"], "trigger.monitor_rounds");
    }
    if (t.contains("drift_shift")) {
      s.trigger.drift_shift = as_double(t["drift_shift"], "trigger.drift_shift");
    }
  }

  if (j.contains("convergence")) {
    const json& c = need_object(j["convergence"], "convergence");
    check_keys(c, "convergence", {"enabled", "rel_tol", "window"});
    if (c.contains("enabled")) {
      s.convergence.enabled = as_bool(c["enabled"], "convergence.enabled");
    }
    if (c.contains("rel_tol")) {
      s.convergence.rel_tol = as_double(c["rel_tol"], "convergence.rel_tol");
    }
    if (c.contains("window")) {
      s.convergence.window = as_int(c["window"], "convergence.window");
    }
  }

  validate_scenario(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_json(buf.str());
}

void validate_scenario(const Scenario& s) {
  if (s.version != 1) bad_field("version", "unsupported scenario version");
  if (s.n_clients < 1) bad_field("n_clients", "must be >= 1");
  if (s.rounds < 0) bad_field("rounds", "must be >= 0");
  if (s.n_features < 1) bad_field("n_features", "must be >= 1");
  if (s.samples_per_client < 1) bad_field("samples_per_client", "must be >= 1");
  if (s.noise_std < 0) bad_field("noise_std", "must be >= 0");

  if (s.partition.skew < 0) bad_field("partition.skew", "must be >= 0");
  if (s.partition.mode_gap <= 0) bad_field("partition.mode_gap", "must be > 0");
  if (s.partition.kind == PartitionSpec::Kind::kTwoMode && s.n_clients < 2) {
    bad_field("partition.kind", "two_mode needs at least 2 clients");
  }

  if (s.training.learning_rate <= 0) {
    bad_field("training.learning_rate", "must be > 0");
  }
  if (s.training.local_epochs < 1) bad_field("training.local_epochs", "must be >= 1");
  if (s.training.batch_size < 1) bad_field("training.batch_size", "must be >= 1");

  check_device(s.device, "device");
  for (const auto& [id, d] : s.device_overrides) {
    bool known = false;
    for (std::size_t i = 0; i < s.n_clients && !known; ++i) {
      known = client_name(i, s.n_clients) == id;
    }
    if (!known) bad_field("devices." + id, "unknown client id");
    check_device(d, "devices." + id);
  }

  if (s.selection.top_k < 1) bad_field("selection.top_k", "must be >= 1");
  if (s.selection.min_compute < 0) bad_field("selection.min_compute", "must be >= 0");
  if (s.selection.min_bandwidth < 0) {
    bad_field("selection.min_bandwidth", "must be >= 0");
  }
  if (s.selection.max_heterogeneity < 0 || s.selection.max_heterogeneity > 1) {
    bad_field("selection.max_heterogeneity", "must be in [0, 1]");
  }

  const std::uint64_t dim = s.n_features + 1;
  if (s.compression.scheme == CompressionScheme::kTopK) {
    if (s.compression.k < 1 || s.compression.k > dim) {
      bad_field("compression.k", "must be in [1, n_features + 1]");
    }
  }
  if (s.compression.scheme == CompressionScheme::kQuantize) {
    const int b = s.compression.bits;
    if (b != 4 && b != 8 && b != 16) {
      bad_field("compression.bits", "must be 4, 8, or 16");
    }
  }
  if (s.compression.scheme != CompressionScheme::kNone) {
    if (s.aggregator == AggregatorKind::kSecure) {
      bad_field("compression.scheme",
                "masking needs the full parameter vector, not compatible "
                "with the secure aggregator");
    }
    if (s.aggregator == AggregatorKind::kGossip) {
      bad_field("compression.scheme",
                "gossip already exchanges parameter segments, not "
                "compatible with update compression");
    }
  }

  if (s.aggregator == AggregatorKind::kAsync) {
    if (s.async_cfg.mix <= 0 || s.async_cfg.mix > 1) {
      bad_field("async.mix", "must be in (0, 1]");
    }
    if (s.async_cfg.policy.rate <= 0) bad_field("async.rate", "must be > 0");
    if (s.async_cfg.round_deadline_ms < 0) {
      bad_field("async.round_deadline_ms", "must be >= 0");
    }
  }

  if (s.aggregator == AggregatorKind::kGossip) {
    if (s.gossip.fanout < 1) bad_field("gossip.fanout", "must be >= 1");
    if (s.gossip.segments < 1 ||
        static_cast<std::uint64_t>(s.gossip.segments) > dim) {
      bad_field("gossip.segments", "must be in [1, n_features + 1]");
    }
    if (s.gossip.ticks_per_round < 1) {
      bad_field("gossip.ticks_per_round", "must be >= 1");
    }
    if (s.gossip.topology != "complete" && s.gossip.topology != "ring") {
      bad_field("gossip.topology", "must be 'complete' or 'ring'");
    }
    if (s.gossip.topology == "ring" && s.n_clients < 3) {
      bad_field("gossip.topology", "a ring needs at least 3 clients");
    }
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < s.n_clients; ++i) {
      ids.push_back(client_name(i, s.n_clients));
    }
    try {
      validate_topology(s.gossip.topology == "ring" ? ring_topology(ids)
                                                    : complete_topology(ids));
    } catch (const Error& e) {
      bad_field("gossip.topology", e.what());
    }
  }

  if (s.aggregator == AggregatorKind::kHierarchical) {
    if (s.hierarchical.k1 < 1) bad_field("hierarchical.k1", "must be >= 1");
    if (s.hierarchical.k2 < 1) bad_field("hierarchical.k2", "must be >= 1");
    if (!s.hierarchical.edges.empty()) {
      std::set<std::string> assigned;
      for (const auto& [edge, members] : s.hierarchical.edges) {
        if (members.empty()) {
          bad_field("hierarchical.edges." + edge, "edge group is empty");
        }
        for (const std::string& m : members) {
          bool known = false;
          for (std::size_t i = 0; i < s.n_clients && !known; ++i) {
            known = client_name(i, s.n_clients) == m;
          }
          if (!known) {
            bad_field("hierarchical.edges." + edge, "unknown client " + m);
          }
          if (!assigned.insert(m).second) {
            bad_field("hierarchical.edges." + edge,
                      "client " + m + " is already in another edge group");
          }
        }
      }
      if (assigned.size() != s.n_clients) {
        bad_field("hierarchical.edges",
                  "edge groups must partition all clients");
      }
    } else if (s.hierarchical.n_edges < 1 ||
               static_cast<std::size_t>(s.hierarchical.n_edges) > s.n_clients) {
      bad_field("hierarchical.n_edges", "must be in [1, n_clients]");
    }
    for (const auto& [edge, rounds] : s.hierarchical.edge_failures) {
      bool known;
      if (!s.hierarchical.edges.empty()) {
        known = s.hierarchical.edges.count(edge) > 0;
      } else {
        // Auto-generated groups are named e0..e{n_edges-1}.
        known = false;
        for (int e = 0; e < s.hierarchical.n_edges && !known; ++e) {
          known = edge == "e" + std::to_string(e);
        }
      }
      if (!known) {
        bad_field("hierarchical.edge_failures." + edge, "unknown edge");
      }
      for (int r : rounds) {
        if (r < 1 || r > std::max(1, s.rounds)) {
          bad_field("hierarchical.edge_failures." + edge,
                    "round " + std::to_string(r) + " out of range");
        }
      }
    }
  }

  if (s.secure.dp_clip_norm < 0) bad_field("secure.dp_clip_norm", "must be >= 0");
  if (s.secure.dp_sigma < 0) bad_field("secure.dp_sigma", "must be >= 0");
  if (s.secure.dp_sigma > 0 && s.secure.dp_clip_norm <= 0) {
    bad_field("secure.dp_clip_norm", "required when dp_sigma > 0");
  }

  if (s.clustering.enabled) {
    if (s.clustering.k < 1 ||
        static_cast<std::size_t>(s.clustering.k) > s.n_clients) {
      bad_field("clustering.k", "must be in [1, n_clients]");
    }
    if (s.aggregator != AggregatorKind::kFedAvg &&
        s.aggregator != AggregatorKind::kAsync) {
      bad_field("clustering.enabled",
                "clustering reads per-client updates at the server, only "
                "the fedavg and async aggregators expose them");
    }
  }

  if (s.multi_task.lambda < 0) bad_field("multi_task.lambda", "must be >= 0");
  if (s.multi_task.anchor == MultiTaskConfig::Anchor::kClusterMean &&
      !s.clustering.enabled) {
    bad_field("multi_task.anchor", "cluster_mean requires clustering.enabled");
  }
  if (s.multi_task.anchor != MultiTaskConfig::Anchor::kNone &&
      s.aggregator == AggregatorKind::kGossip) {
    bad_field("multi_task.anchor",
              "a gossip network has no shared anchor to couple against");
  }

  if (s.balance.enabled) {
    if (s.task != TaskKind::kBinaryLogistic) {
      bad_field("balance.enabled", "balancing needs a classification task");
    }
    if (s.balance.tolerance < 1) bad_field("balance.tolerance", "must be >= 1");
  }

  if (s.incentives.enabled) {
    if (s.aggregator != AggregatorKind::kFedAvg &&
        s.aggregator != AggregatorKind::kAsync) {
      bad_field("incentives.enabled",
                "contribution scoring reads per-client updates at the "
                "server, only the fedavg and async aggregators expose them");
    }
    if (s.incentives.budget_per_round < 0) {
      bad_field("incentives.budget_per_round", "must be >= 0");
    }
    if (s.incentives.probe_samples < 1) {
      bad_field("incentives.probe_samples", "must be >= 1");
    }
    if (s.incentives.scheme == IncentiveScheme::kShapley) {
      const std::size_t cohort = s.selection_all
                                     ? s.n_clients
                                     : static_cast<std::size_t>(s.selection.top_k);
      if (cohort > 8) {
        bad_field("incentives.scheme",
                  "shapley enumerates coalitions exactly, at most 8 "
                  "participants per round");
      }
    }
  }

  if (s.trigger.enabled) {
    if (s.task != TaskKind::kBinaryLogistic) {
      bad_field("trigger.enabled", "the trigger monitors accuracy, which "
                                   "needs a classification task");
    }
    if (s.trigger.threshold <= 0 || s.trigger.threshold > 1) {
      bad_field("trigger.threshold", "must be in (0, 1]");
    }
    if (s.trigger.patience < 1) bad_field("trigger.patience", "must be >= 1");
    if (s.trigger.quorum_fraction <= 0 || s.trigger.quorum_fraction > 1) {
      bad_field("trigger.quorum_fraction", "must be in (0, 1]");
    }
    if (s.trigger.monitor_rounds < 1) {
      bad_field("trigger.monitor_rounds", "must be >= 1 when enabled");
    }
  }

  if (s.convergence.enabled) {
    if (s.convergence.rel_tol <= 0) bad_field("convergence.rel_tol", "must be > 0");
    if (s.convergence.window < 1) bad_field("convergence.window", "must be >= 1");
  }
}

}  // namespace fedsim
