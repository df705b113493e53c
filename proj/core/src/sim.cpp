#include "fedsim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <utility>

#include <nlohmann/json.hpp>

#include "fedsim/aggregation.hpp"
#include "fedsim/balance.hpp"
#include "fedsim/client_registry.hpp"
#include "fedsim/clustering.hpp"
#include "fedsim/compression.hpp"
#include "fedsim/deployment.hpp"
#include "fedsim/detail/bytes_io.hpp"
#include "fedsim/gossip.hpp"
#include "fedsim/hierarchical.hpp"
#include "fedsim/incentives.hpp"
#include "fedsim/lifecycle.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/secure.hpp"
#include "fedsim/selection.hpp"
#include "fedsim/synthetic.hpp"
#include "fedsim/training.hpp"
#include "fedsim/trigger.hpp"

namespace fedsim {

double transfer_time_ms(double bytes, const DeviceProfile& profile) {
  if (bytes < 0) raise(ErrorCode::kParameter, "transfer_time_ms: negative bytes");
  return profile.base_latency + bytes / profile.bandwidth;
}

double compute_time_ms(double ops, const DeviceProfile& profile) {
  if (ops < 0) raise(ErrorCode::kParameter, "compute_time_ms: negative ops");
  return ops / profile.compute_capacity;
}

double training_ops(std::size_t n_samples, std::size_t dim, int local_epochs) {
  return 4.0 * static_cast<double>(n_samples) * static_cast<double>(dim) *
         static_cast<double>(local_epochs);
}

bool sample_dropout(const std::string& client_id, int round,
                    std::uint64_t seed, double dropout_prob) {
  if (dropout_prob <= 0) return false;
  Rng rng = Rng::substream(seed, "dropout/" + client_id,
                           static_cast<std::uint64_t>(round));
  return rng.uniform() < dropout_prob;
}

namespace {

std::uint64_t derived_seed(std::uint64_t seed, std::string_view label,
                           std::uint64_t salt) {
  return Rng::substream(seed, label, salt).next_u64();
}

// Canonical bytes of a model are its scheme-none wire form.
Digest model_digest(const ParamVector& v) {
  return sha256(serialize_compressed(compress(v, CompressionConfig{})));
}

Digest wire_digest(const CompressedUpdate& c) {
  return sha256(serialize_compressed(c));
}

Digest masked_digest(const MaskedUpdate& m) {
  detail::ByteWriter w;
  for (std::uint64_t x : m.masked_fixed) w.put_u64(x);
  return sha256(w.bytes());
}

double centroid_gap_of(const Dataset& d) {
  std::vector<double> pos(d.n_features, 0.0), neg(d.n_features, 0.0);
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t i = 0; i < d.n_samples; ++i) {
    auto row = d.row(i);
    auto& acc = d.labels[i] > 0.5 ? pos : neg;
    (d.labels[i] > 0.5 ? n_pos : n_neg) += 1;
    for (std::size_t f = 0; f < d.n_features; ++f) acc[f] += row[f];
  }
  if (n_pos == 0 || n_neg == 0) return 0.0;
  double sq = 0.0;
  for (std::size_t f = 0; f < d.n_features; ++f) {
    const double diff = pos[f] / n_pos - neg[f] / n_neg;
    sq += diff * diff;
  }
  return std::sqrt(sq);
}

Dataset shifted_features(const Dataset& d, double delta) {
  Dataset out = d;
  for (double& x : out.features) x += delta;
  return out;
}

void write_text_atomic(const std::filesystem::path& path,
                       const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) raise(ErrorCode::kIo, "cannot write " + tmp.string());
    out << text;
    if (!out.flush()) raise(ErrorCode::kIo, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

struct SimEvent {
  double time = 0.0;
  std::uint64_t seq = 0;
  enum Kind { kBroadcastDone, kTrainDone, kUploadDone } kind = kBroadcastDone;
  std::size_t client = 0;
};

// Min-heap on (time, seq); seq is unique, so the order is total.
struct EventAfter {
  bool operator()(const SimEvent& a, const SimEvent& b) const {
    if (a.time != b.time) return a.time > b.time;
    return a.seq > b.seq;
  }
};

struct Client {
  std::string id;
  std::size_t index = 0;
  DeviceProfile dev;
  Dataset data;       // training data, balanced when configured
  Dataset eval_data;  // the original local draw, used while monitoring
  ParamVector model;  // last locally trained state
  std::uint32_t local_version = 0;
};

// Per-round in-flight update waiting at the server.
struct Arrival {
  std::size_t client = 0;
  ModelUpdate update;
  Digest digest{};
  double time = 0.0;
};

struct RoundCounts {
  int selected = 0;
  int dropped = 0;
  int aggregated = 0;
  int deferred = 0;
  int carried_in = 0;
  int edges_failed = 0;
};

class Engine {
 public:
  explicit Engine(const Scenario& s) : s_(s), dim_(s.n_features + 1) {}

  RunResult run() {
    validate_scenario(s_);
    setup();
    release_task();
    for (int r = 1; r <= s_.rounds && !converged_; ++r) {
      round_begin(r);
      switch (s_.aggregator) {
        case AggregatorKind::kFedAvg:
        case AggregatorKind::kAsync:
        case AggregatorKind::kSecure:
          server_round(r);
          break;
        case AggregatorKind::kGossip:
          gossip_round_step(r);
          break;
        case AggregatorKind::kHierarchical:
          hierarchical_round_step(r);
          break;
      }
      rounds_completed_ = r;
    }
    if (wants_deployment()) {
      deploy_and_monitor();
    } else if (converged_) {
      lifecycle_.advance(LifecycleState::kConverged);
    }
    return finish();
  }

 private:
  // ---- setup ---------------------------------------------------------

  void setup() {
    PartitionConfig pc;
    pc.samples_per_client = s_.samples_per_client;
    pc.n_features = s_.n_features;
    pc.noise_std = s_.noise_std;

    std::vector<Dataset> parts;
    if (s_.partition.kind == PartitionSpec::Kind::kTwoMode) {
      parts = generate_two_mode(s_.n_clients, s_.partition.mode_gap, s_.task,
                                s_.seed, pc)
                  .clients;
    } else {
      parts = generate_partitions(s_.n_clients, s_.partition.skew, s_.task,
                                  s_.seed, pc);
    }
    eval_pool_ = concat_datasets(parts, s_.task);

    for (std::size_t i = 0; i < s_.n_clients; ++i) {
      Client c;
      c.id = client_name(i, s_.n_clients);
      c.index = i;
      c.dev = s_.device;
      if (auto it = s_.device_overrides.find(c.id);
          it != s_.device_overrides.end()) {
        c.dev = it->second;
      }
      c.eval_data = parts[i];
      c.data = std::move(parts[i]);
      if (s_.balance.enabled) {
        auto [balanced, report] = balance_dataset(
            c.data, s_.balance.tolerance, derived_seed(s_.seed, "balance", i));
        c.data = std::move(balanced);
        balance_added_ += report.added;
        balance_removed_ += report.removed;
      }
      c.model = zeros(dim_);

      ClientRecord rec;
      rec.client_id = c.id;
      rec.connect_time_ms = 0.0;
      rec.compute_capacity = c.dev.compute_capacity;
      rec.bandwidth = c.dev.bandwidth;
      rec.online = true;
      rec.data_summary.n_samples = c.data.n_samples;
      rec.data_summary.class_histogram = c.data.class_histogram;
      if (s_.task == TaskKind::kBinaryLogistic) {
        rec.data_summary.centroid_gap = centroid_gap_of(c.data);
      }
      registry_.register_client(rec);
      clients_.push_back(std::move(c));
    }

    global_ = zeros(dim_);

    if (s_.incentives.enabled) {
      probe_ = generate_pool(s_.task, s_.incentives.probe_samples,
                             derived_seed(s_.seed, "probe", 0), pc)
                   .pool;
    }
    if (s_.aggregator == AggregatorKind::kHierarchical) {
      hier_.k1 = s_.hierarchical.k1;
      hier_.k2 = s_.hierarchical.k2;
      if (!s_.hierarchical.edges.empty()) {
        hier_.edge_groups = s_.hierarchical.edges;
      } else {
        const std::size_t n_edges =
            static_cast<std::size_t>(s_.hierarchical.n_edges);
        for (std::size_t i = 0; i < s_.n_clients; ++i) {
          const std::size_t e = i * n_edges / s_.n_clients;
          hier_.edge_groups["e" + std::to_string(e)].push_back(clients_[i].id);
        }
      }
      validate_schedule(hier_);
      for (const auto& [edge, members] : hier_.edge_groups) {
        for (const std::string& m : members) edge_of_[m] = edge;
      }
    }
    if (s_.aggregator == AggregatorKind::kGossip) {
      std::vector<std::string> ids;
      for (const Client& c : clients_) ids.push_back(c.id);
      topo_ = s_.gossip.topology == "ring" ? ring_topology(ids)
                                           : complete_topology(ids);
    }
  }

  // ---- shared emission helpers ---------------------------------------

  MetricsRecord& emit(int round, double time, std::string event) {
    MetricsRecord rec;
    rec.round = round;
    rec.virtual_time_ms = time;
    rec.event = std::move(event);
    rec.aggregator = aggregator_kind_name(s_.aggregator);
    metrics_.push_back(std::move(rec));
    return metrics_.back();
  }

  void release_task() {
    MetricsRecord& rec = emit(0, 0.0, "task_created");
    rec.extra_num["n_clients"] = static_cast<double>(s_.n_clients);
    if (s_.balance.enabled) {
      rec.extra_num["balance_added"] = static_cast<double>(balance_added_);
      rec.extra_num["balance_removed"] = static_cast<double>(balance_removed_);
    }

    // Initial model release to every client, network-timed.
    lifecycle_.advance(LifecycleState::kBroadcast);
    std::priority_queue<SimEvent, std::vector<SimEvent>, EventAfter> queue;
    std::uint64_t seq = 0;
    for (const Client& c : clients_) {
      queue.push({transfer_time_ms(raw_bytes(), c.dev), seq++,
                  SimEvent::kBroadcastDone, c.index});
    }
    while (!queue.empty()) {
      const SimEvent ev = queue.top();
      queue.pop();
      Client& c = clients_[ev.client];
      c.model = global_;
      MetricsRecord& rec = emit(0, ev.time, "broadcast_done");
      rec.bytes_down = raw_bytes();
      rec.extra_str["client"] = c.id;
      clock_ = std::max(clock_, ev.time);
    }
  }

  double raw_bytes() const { return static_cast<double>(dim_ * 8); }

  void round_begin(int /*round*/) {
    if (lifecycle_.state() == LifecycleState::kEvaluated) {
      lifecycle_.advance(LifecycleState::kBroadcast);
    }
    if (lifecycle_.state() == LifecycleState::kBroadcast) {
      lifecycle_.advance(LifecycleState::kLocalTraining);
    }
    broadcast_global_ = global_;
  }

  // Cohort for the round: selection, then per-client dropout. Dropped
  // clients sit the round out and are flagged offline while it runs.
  std::vector<std::size_t> pick_cohort(int round, RoundCounts& counts,
                                       const std::set<std::string>* exclude) {
    std::vector<std::string> cohort;
    if (s_.selection_all) {
      cohort = registry_.ids();
    } else {
      cohort = select_clients(registry_, s_.selection, round, s_.seed);
    }
    if (exclude != nullptr) {
      std::erase_if(cohort,
                    [&](const std::string& id) { return exclude->count(id); });
    }
    counts.selected = static_cast<int>(cohort.size());

    std::vector<std::size_t> active;
    dropped_this_round_.clear();
    for (const std::string& id : cohort) {
      const Client& c = client_by_id(id);
      if (sample_dropout(id, round, s_.seed, c.dev.dropout_prob)) {
        ++counts.dropped;
        dropped_this_round_.push_back(id);
        registry_.set_online(id, false);
      } else {
        active.push_back(c.index);
      }
    }
    return active;
  }

  void restore_dropped() {
    for (const std::string& id : dropped_this_round_) {
      registry_.set_online(id, true);
    }
  }

  Client& client_by_id(const std::string& id) {
    for (Client& c : clients_) {
      if (c.id == id) return c;
    }
    raise(ErrorCode::kNotFound, "no such client: " + id);
  }

  std::uint64_t train_seed(int round, std::size_t index) const {
    const std::uint64_t salt =
        (static_cast<std::uint64_t>(round) << 32) | index;
    return derived_seed(s_.seed, "training", salt);
  }

  bool stateful_clients() const {
    return s_.multi_task.anchor != MultiTaskConfig::Anchor::kNone ||
           s_.aggregator == AggregatorKind::kGossip ||
           s_.aggregator == AggregatorKind::kHierarchical;
  }

  // Trains one client for this round; updates personal state, version,
  // and perf history, and emits the train_done record.
  ParamVector run_training(Client& c, int round, double at_time) {
    TrainingConfig cfg = s_.training;
    const ParamVector* anchor = nullptr;
    ParamVector anchor_value;
    if (s_.multi_task.anchor == MultiTaskConfig::Anchor::kGlobal) {
      anchor_value = broadcast_global_;
      anchor = &anchor_value;
      cfg.proximal_lambda = s_.multi_task.lambda;
    } else if (s_.multi_task.anchor == MultiTaskConfig::Anchor::kClusterMean &&
               !cluster_labels_.empty()) {
      anchor_value = cluster_mean_for(c.id);
      anchor = &anchor_value;
      cfg.proximal_lambda = s_.multi_task.lambda;
    }
    // The client works from what it was sent at round start; async
    // aggregation may move the live global mid-round.
    const ParamVector start = stateful_clients() ? c.model : broadcast_global_;
    ParamVector trained =
        local_train(s_.task, start, c.data, cfg, anchor, train_seed(round, c.index));
    trained.version = static_cast<std::uint32_t>(round);
    c.model = trained;
    c.local_version += 1;

    const double local_loss = loss_value(s_.task, trained, c.data);
    registry_.append_perf(c.id, round, local_loss);
    MetricsRecord& rec = emit(round, at_time, "train_done");
    rec.extra_str["client"] = c.id;
    rec.extra_num["local_loss"] = local_loss;
    return trained;
  }

  ParamVector cluster_mean_for(const std::string& id) {
    const int label = cluster_labels_.at(id);
    ParamVector mean = zeros(dim_);
    std::size_t n = 0;
    for (const Client& c : clients_) {
      if (cluster_labels_.at(c.id) != label) continue;
      for (std::size_t i = 0; i < dim_; ++i) mean.values[i] += c.model.values[i];
      ++n;
    }
    for (double& v : mean.values) v /= static_cast<double>(n);
    return mean;
  }

  // ---- fedavg / async / secure rounds --------------------------------

  void server_round(int round) {
    RoundCounts counts;
    const bool async = s_.aggregator == AggregatorKind::kAsync;
    const bool secure = s_.aggregator == AggregatorKind::kSecure;
    const ParamVector prev_global = global_;
    std::vector<std::pair<std::string, std::uint32_t>> applied_order;
    std::map<std::string, Digest> applied_digests;
    std::map<std::string, ModelUpdate> applied_updates;

    // Updates deferred past the previous round's deadline join first,
    // one generation stale.
    if (async && !deferred_.empty()) {
      for (Arrival& a : deferred_) {
        apply_async(round, a, counts, applied_order, applied_digests,
                    applied_updates, true);
      }
      deferred_.clear();
      broadcast_global_ = global_;  // late joiners land before the broadcast
    }

    std::vector<std::size_t> active = pick_cohort(round, counts, nullptr);

    std::vector<std::string> participants;
    for (std::size_t idx : active) participants.push_back(clients_[idx].id);
    const std::uint64_t mask_seed = derived_seed(s_.seed, "mask", round);

    const double t0 = clock_;
    const double deadline =
        s_.async_cfg.round_deadline_ms > 0 ? t0 + s_.async_cfg.round_deadline_ms
                                           : 0.0;

    std::priority_queue<SimEvent, std::vector<SimEvent>, EventAfter> queue;
    std::uint64_t seq = 0;
    for (std::size_t idx : active) {
      queue.push({t0 + transfer_time_ms(raw_bytes(), clients_[idx].dev), seq++,
                  SimEvent::kBroadcastDone, idx});
    }

    std::vector<Arrival> arrivals;                 // sync server inbox
    std::vector<MaskedUpdate> masked;              // secure inbox
    std::map<std::size_t, double> upload_bytes;    // per client wire size
    std::map<std::size_t, CompressedUpdate> wires;
    std::map<std::size_t, MaskedUpdate> prepared_masks;

    while (!queue.empty()) {
      const SimEvent ev = queue.top();
      queue.pop();
      Client& c = clients_[ev.client];
      switch (ev.kind) {
        case SimEvent::kBroadcastDone: {
          MetricsRecord& rec = emit(round, ev.time, "broadcast_done");
          rec.bytes_down = raw_bytes();
          rec.extra_str["client"] = c.id;
          const double done = ev.time + compute_time_ms(
              training_ops(c.data.n_samples, dim_, s_.training.local_epochs),
              c.dev);
          queue.push({done, seq++, SimEvent::kTrainDone, ev.client});
          break;
        }
        case SimEvent::kTrainDone: {
          ParamVector trained = run_training(c, round, ev.time);
          double bytes = 0.0;
          if (secure) {
            ModelUpdate u{c.id, round - 1, trained, c.data.n_samples, 0.0};
            prepared_masks[ev.client] =
                mask_update(u, participants, mask_seed);
            bytes = raw_bytes();  // masks cover the full vector
          } else {
            CompressedUpdate w = compress(trained, s_.compression);
            w.version = static_cast<std::uint32_t>(round);
            bytes = static_cast<double>(w.compressed_bytes());
            wires[ev.client] = std::move(w);
          }
          upload_bytes[ev.client] = bytes;
          queue.push({ev.time + transfer_time_ms(bytes, c.dev), seq++,
                      SimEvent::kUploadDone, ev.client});
          break;
        }
        case SimEvent::kUploadDone: {
          MetricsRecord& rec = emit(round, ev.time, "upload_done");
          rec.bytes_up = static_cast<std::uint64_t>(upload_bytes[ev.client]);
          rec.extra_str["client"] = c.id;
          Arrival a;
          a.client = ev.client;
          a.time = ev.time;
          a.update = ModelUpdate{c.id, round - 1, c.model, c.data.n_samples,
                                 ev.time};
          if (secure) {
            a.digest = masked_digest(prepared_masks[ev.client]);
            masked.push_back(prepared_masks[ev.client]);
            arrivals.push_back(std::move(a));
          } else {
            a.digest = wire_digest(wires[ev.client]);
            if (async && deadline > 0 && ev.time > deadline) {
              ++counts.deferred;
              deferred_.push_back(std::move(a));
            } else if (async) {
              apply_async(round, a, counts, applied_order, applied_digests,
                          applied_updates, false);
            } else {
              arrivals.push_back(std::move(a));
            }
          }
          clock_ = std::max(clock_, ev.time);
          break;
        }
      }
    }
    restore_dropped();

    // Aggregation at the server.
    lifecycle_.advance(LifecycleState::kUpdateSubmitted);
    lifecycle_.advance(LifecycleState::kAggregated);
    double agg_time = clock_;
    if (!async) {
      if (!arrivals.empty()) {
        agg_time = arrivals.back().time;
        if (secure) {
          ParamVector sum = secure_sum(masked, participants);
          for (double& v : sum.values) {
            v /= static_cast<double>(masked.size());
          }
          if (s_.secure.dp_sigma > 0) {
            sum = dp_noise(sum, s_.secure.dp_clip_norm, s_.secure.dp_sigma,
                           derived_seed(s_.seed, "dp", round));
          }
          global_ = sum;
        } else {
          std::vector<ModelUpdate> updates;
          for (const Arrival& a : arrivals) updates.push_back(a.update);
          global_ = fedavg(updates);
        }
        counts.aggregated = static_cast<int>(arrivals.size());
        for (const Arrival& a : arrivals) {
          const Client& c = clients_[a.client];
          applied_order.emplace_back(c.id, c.local_version);
          applied_digests[c.id] = a.digest;
          applied_updates[c.id] = a.update;
        }
      }
      MetricsRecord& rec = emit(round, agg_time, "aggregate");
      rec.participants = counts.aggregated;
      rec.dropouts = counts.dropped;
    }
    global_.version = static_cast<std::uint32_t>(round);
    clock_ = std::max(clock_, agg_time);

    finish_round(round, counts, prev_global, applied_order, applied_digests,
                 applied_updates);
  }

  void apply_async(int round, const Arrival& a, RoundCounts& counts,
                   std::vector<std::pair<std::string, std::uint32_t>>& order,
                   std::map<std::string, Digest>& digests,
                   std::map<std::string, ModelUpdate>& updates, bool carried) {
    // Generation being extended is round - 1; staleness falls out of the
    // update's own origin generation.
    global_ = async_aggregate(global_, a.update, round - 1,
                              s_.async_cfg.policy, s_.async_cfg.mix);
    const int tau = (round - 1) - a.update.origin_round;
    const double at = carried ? clock_ : a.time;
    MetricsRecord& rec = emit(round, at, "aggregate");
    rec.participants = 1;
    rec.extra_str["client"] = a.update.client_id;
    rec.extra_num["staleness"] = tau;
    rec.extra_num["alpha"] =
        s_.async_cfg.mix * s_.async_cfg.policy.weight(tau);
    const Client& c = client_by_id(a.update.client_id);
    order.emplace_back(c.id, c.local_version);
    digests[c.id] = a.digest;
    updates[c.id] = a.update;
    ++counts.aggregated;
    if (carried) ++counts.carried_in;
  }

  // ---- hierarchical rounds -------------------------------------------

  void hierarchical_round_step(int round) {
    RoundCounts counts;
    const ParamVector prev_global = global_;
    std::set<std::string> failed_members;
    for (const auto& [edge, rounds] : s_.hierarchical.edge_failures) {
      if (std::find(rounds.begin(), rounds.end(), round) != rounds.end()) {
        ++counts.edges_failed;
        auto it = hier_.edge_groups.find(edge);
        if (it == hier_.edge_groups.end()) {
          raise(ErrorCode::kValidation,
                "hierarchical.edge_failures." + edge + ": unknown edge");
        }
        failed_members.insert(it->second.begin(), it->second.end());
      }
    }

    std::vector<std::size_t> active =
        pick_cohort(round, counts, failed_members.empty() ? nullptr
                                                          : &failed_members);
    const bool edge_round = edge_due(hier_, round);
    const bool central_round = central_due(hier_, round);

    const double t0 = clock_;
    std::priority_queue<SimEvent, std::vector<SimEvent>, EventAfter> queue;
    std::uint64_t seq = 0;
    for (std::size_t idx : active) {
      const Client& c = clients_[idx];
      queue.push({t0 + compute_time_ms(
                      training_ops(c.data.n_samples, dim_,
                                   s_.training.local_epochs),
                      c.dev),
                  seq++, SimEvent::kTrainDone, idx});
    }

    std::map<std::string, std::vector<Arrival>> edge_inbox;
    std::map<std::size_t, CompressedUpdate> wires;
    std::map<std::size_t, double> upload_bytes;
    while (!queue.empty()) {
      const SimEvent ev = queue.top();
      queue.pop();
      Client& c = clients_[ev.client];
      if (ev.kind == SimEvent::kTrainDone) {
        ParamVector trained = run_training(c, round, ev.time);
        counts.aggregated += 1;  // this round advanced the client's model
        clock_ = std::max(clock_, ev.time);
        if (edge_round) {
          CompressedUpdate w = compress(trained, s_.compression);
          w.version = static_cast<std::uint32_t>(round);
          const double bytes = static_cast<double>(w.compressed_bytes());
          wires[ev.client] = std::move(w);
          upload_bytes[ev.client] = bytes;
          queue.push({ev.time + transfer_time_ms(bytes, c.dev), seq++,
                      SimEvent::kUploadDone, ev.client});
        }
      } else if (ev.kind == SimEvent::kUploadDone) {
        MetricsRecord& rec = emit(round, ev.time, "upload_done");
        rec.bytes_up = static_cast<std::uint64_t>(upload_bytes[ev.client]);
        rec.extra_str["client"] = c.id;
        Arrival a;
        a.client = ev.client;
        a.time = ev.time;
        a.update = ModelUpdate{c.id, round - 1, c.model, c.data.n_samples,
                               ev.time};
        a.digest = wire_digest(wires[ev.client]);
        edge_inbox[edge_of_.at(c.id)].push_back(std::move(a));
        clock_ = std::max(clock_, ev.time);
      }
    }
    restore_dropped();

    std::vector<std::pair<std::string, std::uint32_t>> applied_order;
    std::map<std::string, Digest> applied_digests;
    std::map<std::string, ModelUpdate> applied_updates;

    if (edge_round && !edge_inbox.empty()) {
      // Edge aggregates, in completion order for monotone record times.
      std::vector<std::pair<double, std::string>> order;
      for (const auto& [edge, inbox] : edge_inbox) {
        order.emplace_back(inbox.back().time, edge);
      }
      std::sort(order.begin(), order.end());
      for (const auto& [done, edge] : order) {
        const std::vector<Arrival>& inbox = edge_inbox[edge];
        std::vector<ModelUpdate> group;
        for (const Arrival& a : inbox) group.push_back(a.update);
        EdgeModel em = edge_aggregate(edge, group);
        em.params.version = static_cast<std::uint32_t>(round);
        edge_models_[edge] = em;
        MetricsRecord& rec = emit(round, done, "edge_aggregate");
        rec.participants = static_cast<int>(inbox.size());
        rec.extra_str["edge"] = edge;
        // Edge model pushed back down to its clients.
        rec.bytes_down = static_cast<std::uint64_t>(
            raw_bytes() * static_cast<double>(inbox.size()));
        for (const Arrival& a : inbox) {
          clients_[a.client].model = em.params;
          applied_order.emplace_back(clients_[a.client].id,
                                     clients_[a.client].local_version);
          applied_digests[clients_[a.client].id] = a.digest;
          applied_updates[clients_[a.client].id] = a.update;
        }
        clock_ = std::max(clock_, done);
      }

      if (central_round) {
        // Edges forward their fresh aggregates to the centre over the
        // default network profile.
        std::vector<std::pair<double, std::string>> uploads;
        for (const auto& [done, edge] : order) {
          const double at = done + transfer_time_ms(raw_bytes(), s_.device);
          uploads.emplace_back(at, edge);
        }
        std::sort(uploads.begin(), uploads.end());
        std::vector<EdgeModel> models;
        for (const auto& [at, edge] : uploads) {
          MetricsRecord& rec = emit(round, at, "upload_done");
          rec.bytes_up = static_cast<std::uint64_t>(raw_bytes());
          rec.extra_str["edge"] = edge;
          models.push_back(edge_models_.at(edge));
          clock_ = std::max(clock_, at);
        }
        lifecycle_.advance(LifecycleState::kUpdateSubmitted);
        lifecycle_.advance(LifecycleState::kAggregated);
        global_ = central_aggregate(models);
        global_.version = static_cast<std::uint32_t>(round);
        MetricsRecord& rec = emit(round, clock_, "aggregate");
        rec.participants = counts.aggregated;
        rec.dropouts = counts.dropped;
        rec.extra_num["edges"] = static_cast<double>(models.size());
        // Central model pushed to every client.
        rec.bytes_down = static_cast<std::uint64_t>(
            raw_bytes() * static_cast<double>(clients_.size()));
        for (Client& c : clients_) c.model = global_;
      }
    }

    if (central_round && !edge_inbox.empty()) {
      finish_round(round, counts, prev_global, applied_order, applied_digests,
                   applied_updates);
    } else {
      // No new global generation this round; still evaluate and account.
      evaluate_round(round, counts, false);
      round_models_.push_back(global_);
      maybe_emit_converged(round);
    }
  }

  // ---- gossip rounds --------------------------------------------------

  void gossip_round_step(int round) {
    RoundCounts counts;
    counts.selected = static_cast<int>(clients_.size());
    dropped_this_round_.clear();

    const double t0 = clock_;
    std::priority_queue<SimEvent, std::vector<SimEvent>, EventAfter> queue;
    std::uint64_t seq = 0;
    for (Client& c : clients_) {
      if (sample_dropout(c.id, round, s_.seed, c.dev.dropout_prob)) {
        ++counts.dropped;
        dropped_this_round_.push_back(c.id);
        registry_.set_online(c.id, false);
        continue;  // naps this round but keeps gossiping its old state
      }
      queue.push({t0 + compute_time_ms(
                      training_ops(c.data.n_samples, dim_,
                                   s_.training.local_epochs),
                      c.dev),
                  seq++, SimEvent::kTrainDone, c.index});
    }
    while (!queue.empty()) {
      const SimEvent ev = queue.top();
      queue.pop();
      run_training(clients_[ev.client], round, ev.time);
      ++counts.aggregated;
      clock_ = std::max(clock_, ev.time);
    }
    restore_dropped();

    lifecycle_.advance(LifecycleState::kUpdateSubmitted);
    lifecycle_.advance(LifecycleState::kAggregated);

    std::map<std::string, ParamVector> states;
    for (const Client& c : clients_) states[c.id] = c.model;
    for (int tick = 0; tick < s_.gossip.ticks_per_round; ++tick) {
      GossipTraffic traffic;
      states = gossip_round(std::move(states), topo_, s_.gossip.fanout,
                            s_.gossip.segments, s_.seed, gossip_tick_count_++,
                            s_.gossip.mode, &traffic);
      // Exchanges run as sequential turns over the default link profile.
      clock_ += traffic.exchanges * s_.device.base_latency +
                static_cast<double>(traffic.bytes_exchanged) / 2.0 /
                    s_.device.bandwidth;
      MetricsRecord& rec = emit(round, clock_, "gossip_tick");
      rec.bytes_up = traffic.bytes_exchanged / 2;
      rec.bytes_down = traffic.bytes_exchanged - traffic.bytes_exchanged / 2;
      rec.extra_num["exchanges"] = traffic.exchanges;
      rec.extra_num["tick"] = tick;
      if (!traffic.leader.empty()) rec.extra_str["leader"] = traffic.leader;
    }
    for (Client& c : clients_) c.model = states.at(c.id);

    // The observed network mean stands in for a global model.
    const ParamVector prev_global = global_;
    ParamVector mean = zeros(dim_);
    for (const Client& c : clients_) {
      for (std::size_t i = 0; i < dim_; ++i) {
        mean.values[i] += c.model.values[i];
      }
    }
    for (double& v : mean.values) v /= static_cast<double>(clients_.size());
    mean.version = static_cast<std::uint32_t>(round);
    global_ = mean;

    std::vector<std::pair<std::string, std::uint32_t>> applied_order;
    std::map<std::string, Digest> applied_digests;
    std::map<std::string, ModelUpdate> applied_updates;
    for (const Client& c : clients_) {
      if (std::find(dropped_this_round_.begin(), dropped_this_round_.end(),
                    c.id) != dropped_this_round_.end()) {
        continue;
      }
      applied_order.emplace_back(c.id, c.local_version);
      applied_digests[c.id] = model_digest(c.model);
    }
    finish_round(round, counts, prev_global, applied_order, applied_digests,
                 applied_updates);
  }

  // ---- round tail: lineage, rewards, evaluation, convergence ----------

  void finish_round(
      int round, RoundCounts& counts, const ParamVector& prev_global,
      const std::vector<std::pair<std::string, std::uint32_t>>& applied_order,
      const std::map<std::string, Digest>& applied_digests,
      const std::map<std::string, ModelUpdate>& applied_updates) {
    if (lifecycle_.state() == LifecycleState::kLocalTraining) {
      lifecycle_.advance(LifecycleState::kUpdateSubmitted);
      lifecycle_.advance(LifecycleState::kAggregated);
    }
    round_models_.push_back(global_);

    if (!applied_order.empty()) {
      std::vector<Contribution> contribs;
      for (const auto& [id, local_version] : applied_order) {
        contribs.push_back({id, local_version, applied_digests.at(id)});
      }
      coversions_.record_co_version(static_cast<std::uint32_t>(round),
                                    model_digest(global_), std::move(contribs),
                                    coversions_.tip());
    }

    std::map<std::string, double> rewards;
    if (s_.incentives.enabled && !applied_updates.empty()) {
      rewards = pay_rewards(round, prev_global, applied_updates);
    }

    if (s_.multi_task.anchor == MultiTaskConfig::Anchor::kClusterMean &&
        cluster_labels_.empty()) {
      assign_clusters(prev_global);
    }

    evaluate_round(round, counts, true, &rewards);
    maybe_emit_converged(round);
  }

  // generation_advanced: whether this round produced a new global model;
  // the convergence window only counts those, so a hierarchy's flat
  // rounds between central aggregations cannot fake convergence.
  void evaluate_round(int round, const RoundCounts& counts,
                      bool generation_advanced,
                      const std::map<std::string, double>* rewards = nullptr) {
    if (lifecycle_.state() == LifecycleState::kAggregated) {
      lifecycle_.advance(LifecycleState::kEvaluated);
    }
    const EvalReport rep = evaluate(s_.task, global_, eval_pool_);
    MetricsRecord& rec = emit(round, clock_, "evaluate");
    rec.global_loss = rep.loss;
    rec.global_accuracy = rep.accuracy;
    rec.participants = counts.aggregated;
    rec.dropouts = counts.dropped;
    rec.extra_num["selected"] = counts.selected;
    rec.extra_num["deferred"] = counts.deferred;
    rec.extra_num["carried_in"] = counts.carried_in;
    if (counts.edges_failed > 0) {
      rec.extra_num["edges_failed"] = counts.edges_failed;
    }
    if (rewards != nullptr) {
      for (const auto& [id, amount] : *rewards) {
        rec.extra_num["reward." + id] = amount;
      }
    }

    if (s_.convergence.enabled && !converged_ && generation_advanced) {
      if (have_last_loss_) {
        const double rel = std::abs(last_loss_ - rep.loss) /
                           std::max(std::abs(last_loss_), 1e-12);
        streak_ = rel < s_.convergence.rel_tol ? streak_ + 1 : 0;
        if (streak_ >= s_.convergence.window) {
          converged_ = true;
          rounds_to_convergence_ = round;
        }
      }
      last_loss_ = rep.loss;
      have_last_loss_ = true;
    }
  }

  void maybe_emit_converged(int round) {
    if (converged_ && rounds_to_convergence_ &&
        *rounds_to_convergence_ == round) {
      emit(round, clock_, "converged");
    }
  }

  std::map<std::string, double> pay_rewards(
      int round, const ParamVector& prev_global,
      const std::map<std::string, ModelUpdate>& applied) {
    std::map<std::string, ClientRoundStat> stats;
    const double baseline = loss_value(s_.task, prev_global, probe_);
    std::vector<ModelUpdate> all;
    for (const auto& [id, u] : applied) all.push_back(u);
    const double loss_all = loss_value(s_.task, fedavg(all), probe_);
    for (const auto& [id, u] : applied) {
      ClientRoundStat st;
      st.n_samples = u.n_samples;
      st.loss_with_all = loss_all;
      if (s_.incentives.scheme == IncentiveScheme::kLossImprovement) {
        std::vector<ModelUpdate> rest;
        for (const auto& [oid, ou] : applied) {
          if (oid != id) rest.push_back(ou);
        }
        st.loss_without = rest.empty()
                              ? baseline
                              : loss_value(s_.task, fedavg(rest), probe_);
      }
      stats[id] = st;
    }

    CoalitionValue coalition = [&](const std::vector<std::string>& ids) {
      if (ids.empty()) return 0.0;
      std::vector<ModelUpdate> subset;
      for (const std::string& id : ids) subset.push_back(applied.at(id));
      return baseline - loss_value(s_.task, fedavg(subset), probe_);
    };
    const CoalitionValue* fn =
        s_.incentives.scheme == IncentiveScheme::kShapley ? &coalition : nullptr;
    std::map<std::string, double> scores =
        score_contribution(s_.incentives.scheme, stats, fn);
    std::vector<LedgerEntry> entries =
        distribute_rewards(scores, s_.incentives.budget_per_round, round,
                           s_.incentives.scheme, &coversions_.chain());
    std::map<std::string, double> rewards;
    for (const LedgerEntry& e : entries) rewards[e.client_id] = e.reward;
    return rewards;
  }

  // ---- deployment and monitoring -------------------------------------

  bool wants_deployment() const {
    return s_.trigger.enabled || s_.clustering.enabled;
  }

  void assign_clusters(const ParamVector& reference) {
    std::map<std::string, std::vector<double>> points;
    for (const Client& c : clients_) {
      std::vector<double> dir(dim_);
      for (std::size_t i = 0; i < dim_; ++i) {
        dir[i] = c.model.values[i] - reference.values[i];
      }
      points[c.id] = std::move(dir);
    }
    clusters_ = cluster_clients(points, s_.clustering.k, s_.clustering.metric);
    cluster_labels_ = clusters_.labels;
  }

  void deploy_and_monitor() {
    // The run may stop mid-generation (rounds == 0, or a hierarchy's
    // trailing rounds); walk the rest of the generation formally before
    // exiting through converged.
    if (lifecycle_.state() == LifecycleState::kBroadcast) {
      lifecycle_.advance(LifecycleState::kLocalTraining);
    }
    if (lifecycle_.state() == LifecycleState::kLocalTraining) {
      lifecycle_.advance(LifecycleState::kUpdateSubmitted);
      lifecycle_.advance(LifecycleState::kAggregated);
    }
    if (lifecycle_.state() == LifecycleState::kAggregated) {
      lifecycle_.advance(LifecycleState::kEvaluated);
    }
    lifecycle_.advance(LifecycleState::kConverged);
    lifecycle_.advance(LifecycleState::kDeployed);

    std::vector<ParamVector> cluster_params;
    std::map<std::string, int> rationale;
    if (s_.clustering.enabled) {
      assign_clusters(last_broadcast_reference());
      std::map<int, Digest> per_cluster;
      for (std::size_t k = 0; k < clusters_.medoids.size(); ++k) {
        std::vector<ModelUpdate> members;
        for (const Client& c : clients_) {
          if (cluster_labels_.at(c.id) != static_cast<int>(k)) continue;
          members.push_back(ModelUpdate{c.id, rounds_completed_, c.model,
                                        c.data.n_samples, 0.0});
        }
        ParamVector cm = members.empty() ? global_ : fedavg(members);
        cm.version = static_cast<std::uint32_t>(rounds_completed_ + 1 +
                                                static_cast<int>(k));
        std::vector<Contribution> contribs;
        for (const ModelUpdate& m : members) {
          contribs.push_back({m.client_id,
                              client_by_id(m.client_id).local_version,
                              model_digest(m.params)});
        }
        per_cluster[static_cast<int>(k)] = model_digest(cm);
        coversions_.record_co_version(cm.version, model_digest(cm),
                                      std::move(contribs), coversions_.tip());
        cluster_params.push_back(std::move(cm));
      }
      const DeploymentPlan plan =
          select_deployment(coversions_, clusters_, per_cluster);
      rationale = plan.rationale;
    }

    // Deployment push to every client.
    double at = clock_;
    for (const Client& c : clients_) {
      at = std::max(at, clock_ + transfer_time_ms(raw_bytes(), c.dev));
    }
    clock_ = at;
    MetricsRecord& rec = emit(rounds_completed_, clock_, "deploy");
    rec.bytes_down = static_cast<std::uint64_t>(
        raw_bytes() * static_cast<double>(clients_.size()));
    rec.participants = static_cast<int>(clients_.size());
    if (s_.clustering.enabled) {
      rec.extra_num["clusters"] =
          static_cast<double>(clusters_.medoids.size());
      for (const auto& [id, k] : rationale) {
        rec.extra_num["cluster." + id] = k;
      }
    }

    if (!s_.trigger.enabled) return;
    lifecycle_.advance(LifecycleState::kMonitored);

    TriggerState st;
    st.threshold = s_.trigger.threshold;
    st.patience = s_.trigger.patience;
    st.quorum_fraction = s_.trigger.quorum_fraction;
    for (int m = 1; m <= s_.trigger.monitor_rounds && !st.fired; ++m) {
      const int round = rounds_completed_ + m;
      // Clients score the deployed model on locally drifting data and
      // report a fixed-size health sample.
      std::map<std::string, EvalReport> reports;
      double done = clock_;
      int breaching = 0;
      double accuracy_sum = 0.0;
      for (const Client& c : clients_) {
        const ParamVector& deployed =
            rationale.count(c.id) ? cluster_params[rationale.at(c.id)]
                                  : global_;
        const Dataset drifted =
            shifted_features(c.eval_data, m * s_.trigger.drift_shift);
        const EvalReport rep = evaluate(s_.task, deployed, drifted);
        reports[c.id] = rep;
        if (rep.accuracy && *rep.accuracy < st.threshold) ++breaching;
        accuracy_sum += rep.accuracy.value_or(0.0);
        const double ops =
            static_cast<double>(c.eval_data.n_samples) * dim_;
        done = std::max(done, clock_ + compute_time_ms(ops, c.dev) +
                                  transfer_time_ms(16.0, c.dev));
      }
      clock_ = done;
      st = check_replacement_trigger(st, reports,
                                     static_cast<int>(clients_.size()));
      MetricsRecord& trec = emit(round, clock_, "trigger_check");
      trec.participants = static_cast<int>(clients_.size());
      trec.bytes_up = 16 * clients_.size();
      trec.extra_num["breaching"] = breaching;
      trec.extra_num["consecutive_breaches"] = st.consecutive_breaches;
      trec.extra_num["fired"] = st.fired ? 1 : 0;
      trec.extra_num["mean_accuracy"] =
          accuracy_sum / static_cast<double>(clients_.size());
      if (st.fired) {
        trigger_fired_ = true;
        lifecycle_.advance(LifecycleState::kReplaced);
        emit(round, clock_, "replaced");
        // The replacement starts the next generation; this run ends here
        // and hands the degraded model's successor to a fresh task.
        lifecycle_.advance(LifecycleState::kTaskCreated);
        emit(round, clock_, "task_created");
      } else {
        lifecycle_.advance(LifecycleState::kMonitored);
      }
    }
  }

  // Reference point for update directions: what clients last trained
  // from. Stateless modes train from the last broadcast global.
  ParamVector last_broadcast_reference() const {
    if (round_models_.size() >= 2) return round_models_[round_models_.size() - 2];
    return zeros(dim_);
  }

  // ---- wrap-up --------------------------------------------------------

  RunResult finish() {
    RunResult result;
    result.global_model = global_;
    result.round_models = std::move(round_models_);
    result.metrics = std::move(metrics_);
    result.registry = coversions_;

    const MetricsTotals totals = fold_metrics(result.metrics);
    RunSummary& sum = result.summary;
    sum.scenario_name = s_.name;
    sum.aggregator = aggregator_kind_name(s_.aggregator);
    sum.task = task_kind_name(s_.task);
    sum.seed = s_.seed;
    sum.rounds_completed = rounds_completed_;
    sum.converged = converged_;
    sum.rounds_to_convergence = rounds_to_convergence_;
    sum.trigger_fired = trigger_fired_;
    sum.virtual_time_ms = totals.last_time_ms;
    sum.final_loss = totals.final_loss;
    sum.final_accuracy = totals.final_accuracy;
    sum.bytes_up_total = totals.bytes_up;
    sum.bytes_down_total = totals.bytes_down;
    sum.global_records = coversions_.global_records();
    sum.local_entries = coversions_.local_entries();
    sum.chain_records = coversions_.chain().size();
    return result;
  }

  const Scenario& s_;
  std::size_t dim_;
  std::vector<Client> clients_;
  ClientRegistry registry_;
  Dataset eval_pool_;
  Dataset probe_;
  ParamVector global_;
  CoVersionRegistry coversions_;
  std::vector<MetricsRecord> metrics_;
  std::vector<ParamVector> round_models_;
  LifecycleTracker lifecycle_;
  HierarchicalSchedule hier_;
  std::map<std::string, std::string> edge_of_;
  std::map<std::string, EdgeModel> edge_models_;
  GossipTopology topo_;
  int gossip_tick_count_ = 0;
  std::vector<Arrival> deferred_;
  std::vector<std::string> dropped_this_round_;
  ClusterAssignment clusters_;
  std::map<std::string, int> cluster_labels_;
  ParamVector broadcast_global_;
  double clock_ = 0.0;
  int rounds_completed_ = 0;
  bool converged_ = false;
  std::optional<int> rounds_to_convergence_;
  bool trigger_fired_ = false;
  bool have_last_loss_ = false;
  double last_loss_ = 0.0;
  int streak_ = 0;
  std::size_t balance_added_ = 0;
  std::size_t balance_removed_ = 0;
};

}  // namespace

RunResult run_scenario(const Scenario& s) { return Engine(s).run(); }

RunResult run_scenario(const Scenario& s,
                       const std::filesystem::path& out_dir) {
  RunResult result = run_scenario(s);
  std::filesystem::create_directories(out_dir);
  write_metrics_jsonl(out_dir / "metrics.jsonl", result.metrics);
  result.registry.save(out_dir / "coversion.log");
  write_text_atomic(out_dir / "summary.json",
                    summary_to_json(result.summary) + "\n");
  return result;
}

std::string summary_to_json(const RunSummary& summary) {
  nlohmann::json j;
  j["scenario"] = summary.scenario_name;
  j["aggregator"] = summary.aggregator;
  j["task"] = summary.task;
  j["seed"] = summary.seed;
  j["rounds_completed"] = summary.rounds_completed;
  j["converged"] = summary.converged;
  if (summary.rounds_to_convergence) {
    j["rounds_to_convergence"] = *summary.rounds_to_convergence;
  } else {
    j["rounds_to_convergence"] = nullptr;
  }
  j["trigger_fired"] = summary.trigger_fired;
  j["virtual_time_ms"] = summary.virtual_time_ms;
  if (summary.final_loss) {
    j["final_loss"] = *summary.final_loss;
  } else {
    j["final_loss"] = nullptr;
  }
  if (summary.final_accuracy) {
    j["final_accuracy"] = *summary.final_accuracy;
  } else {
    j["final_accuracy"] = nullptr;
  }
  j["bytes_up_total"] = summary.bytes_up_total;
  j["bytes_down_total"] = summary.bytes_down_total;
  j["global_records"] = summary.global_records;
  j["local_entries"] = summary.local_entries;
  j["chain_records"] = summary.chain_records;
  return j.dump(2);
}

RunSummary summary_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    raise(ErrorCode::kParse, std::string("summary.json: ") + e.what());
  }
  if (!j.is_object()) raise(ErrorCode::kValidation, "summary must be an object");
  RunSummary s;
  try {
    s.scenario_name = j.at("scenario").get<std::string>();
    s.aggregator = j.at("aggregator").get<std::string>();
    s.task = j.at("task").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.rounds_completed = j.at("rounds_completed").get<int>();
    s.converged = j.at("converged").get<bool>();
    if (!j.at("rounds_to_convergence").is_null()) {
      s.rounds_to_convergence = j.at("rounds_to_convergence").get<int>();
    }
    s.trigger_fired = j.at("trigger_fired").get<bool>();
    s.virtual_time_ms = j.at("virtual_time_ms").get<double>();
    if (!j.at("final_loss").is_null()) {
      s.final_loss = j.at("final_loss").get<double>();
    }
    if (!j.at("final_accuracy").is_null()) {
      s.final_accuracy = j.at("final_accuracy").get<double>();
    }
    s.bytes_up_total = j.at("bytes_up_total").get<std::uint64_t>();
    s.bytes_down_total = j.at("bytes_down_total").get<std::uint64_t>();
    s.global_records = j.at("global_records").get<std::size_t>();
    s.local_entries = j.at("local_entries").get<std::size_t>();
    s.chain_records = j.at("chain_records").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::kValidation, std::string("summary.json: ") + e.what());
  }
  return s;
}

RunSummary load_summary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return summary_from_json(buf.str());
}

}  // namespace fedsim
