// Acceptance gate: ten end-to-end behavioral criteria, one verdict line
// each. Exits nonzero if any fail. Oracles here are written from first
// principles (own sigmoid, own permutation averages, own counters) so a
// library regression cannot hide behind its own arithmetic.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fedsim/aggregation.hpp"
#include "fedsim/clustering.hpp"
#include "fedsim/compression.hpp"
#include "fedsim/gossip.hpp"
#include "fedsim/incentives.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/secure.hpp"
#include "fedsim/sim.hpp"
#include "fedsim/synthetic.hpp"
#include "fedsim/training.hpp"
#include "fedsim/trigger.hpp"

using namespace fedsim;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void verdict(int index, const std::string& name, bool ok,
             const std::string& detail) {
  std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << index << ": "
            << name;
  if (!detail.empty()) std::cout << " -- " << detail;
  std::cout << std::endl;
  if (!ok) ++g_failures;
}

void guarded(int index, const std::string& name,
             const std::function<std::pair<bool, std::string>()>& body) {
  try {
    const auto [ok, detail] = body();
    verdict(index, name, ok, detail);
  } catch (const std::exception& e) {
    verdict(index, name, false, std::string("exception: ") + e.what());
  }
}

fs::path scratch_dir(const std::string& leaf) {
  const fs::path p = fs::temp_directory_path() / "fedsim-acceptance" / leaf;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Deterministic local randomness, independent of the library's Rng.
struct XorShift {
  std::uint64_t s;
  explicit XorShift(std::uint64_t seed) : s(seed * 2685821657736338717ull + 1) {}
  std::uint64_t next() {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    return s;
  }
  double uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }
  double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
};

// ---- criterion 1: co-versioning at fleet scale -----------------------

std::pair<bool, std::string> criterion1() {
  Scenario s;
  s.name = "scale";
  s.seed = 1;
  s.rounds = 100;
  s.n_clients = 100;
  s.task = TaskKind::kLinearRegression;
  s.samples_per_client = 20;
  s.n_features = 5;
  s.training.batch_size = 20;
  s.convergence.enabled = false;

  const fs::path out = scratch_dir("c1");
  const auto t0 = std::chrono::steady_clock::now();
  const RunResult r = run_scenario(s, out);
  // Reload from disk: the chain must verify from cold storage, not just
  // from the in-memory registry.
  const CoVersionRegistry reg = CoVersionRegistry::load(out / "coversion.log");
  const double secs = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();

  std::ostringstream os;
  os << reg.local_entries() << " local entries, " << reg.global_records()
     << " global records, " << secs << " s";
  const bool ok = reg.local_entries() == 10000 && reg.global_records() == 100 &&
                  r.summary.local_entries == 10000 &&
                  r.summary.global_records == 100 && secs < 60.0;
  return {ok, os.str()};
}

// ---- criterion 2: hierarchical cadence and collapse ------------------

std::pair<bool, std::string> criterion2() {
  Scenario s;
  s.name = "cadence";
  s.seed = 2;
  s.rounds = 18;
  s.n_clients = 4;
  s.task = TaskKind::kLinearRegression;
  s.samples_per_client = 24;
  s.n_features = 4;
  s.training.batch_size = 8;
  s.aggregator = AggregatorKind::kHierarchical;
  s.hierarchical.k1 = 2;
  s.hierarchical.k2 = 3;
  s.hierarchical.n_edges = 2;
  s.convergence.enabled = false;

  const RunResult hier = run_scenario(s);
  std::vector<int> central_rounds;
  for (const auto& rec : hier.metrics) {
    if (rec.event == "aggregate") central_rounds.push_back(rec.round);
  }
  const bool cadence_ok = central_rounds == std::vector<int>{6, 12, 18};

  // Single edge, k1 = k2 = 1: the hierarchy degenerates to flat fedavg.
  Scenario collapsed = s;
  collapsed.hierarchical.k1 = 1;
  collapsed.hierarchical.k2 = 1;
  collapsed.hierarchical.n_edges = 1;
  Scenario flat = s;
  flat.aggregator = AggregatorKind::kFedAvg;

  const RunResult a = run_scenario(collapsed);
  const RunResult b = run_scenario(flat);
  double max_diff = 0.0;
  bool shapes_ok = a.round_models.size() == b.round_models.size();
  if (shapes_ok) {
    for (std::size_t i = 0; i < a.round_models.size(); ++i) {
      max_diff = std::max(max_diff,
                          max_abs_diff(a.round_models[i], b.round_models[i]));
    }
  }

  std::ostringstream os;
  os << "centrals at {";
  for (std::size_t i = 0; i < central_rounds.size(); ++i) {
    os << (i ? "," : "") << central_rounds[i];
  }
  os << "}, collapse max diff " << max_diff;
  return {cadence_ok && shapes_ok && max_diff <= 1e-12, os.str()};
}

// ---- criterion 3: secure aggregation exactness -----------------------

std::pair<bool, std::string> criterion3() {
  const std::size_t dim = 8;
  std::size_t trials = 0;
  for (std::size_t n = 2; n <= 16; ++n) {
    std::vector<std::string> participants;
    for (std::size_t i = 0; i < n; ++i) {
      participants.push_back(client_name(i, n));
    }
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Rng rng = Rng::substream(seed, "acceptance-secure", n);
      std::vector<MaskedUpdate> masked;
      std::vector<std::uint64_t> plain(dim, 0);
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> vals(dim);
        for (double& v : vals) v = rng.uniform(-100.0, 100.0);
        for (std::size_t f = 0; f < dim; ++f) plain[f] += to_fixed(vals[f]);
        ModelUpdate u{participants[i], 0, ParamVector(vals), 1, 0.0};
        masked.push_back(mask_update(u, participants, seed));
      }
      const ParamVector sum = secure_sum(masked, participants);
      for (std::size_t f = 0; f < dim; ++f) {
        if (sum.values[f] != from_fixed(plain[f])) {
          std::ostringstream os;
          os << "mismatch at n=" << n << " seed=" << seed << " f=" << f;
          return {false, os.str()};
        }
      }
      ++trials;
    }

    // Any missing share must make the sum unrecoverable.
    Rng rng = Rng::substream(7, "acceptance-secure-drop", n);
    std::vector<MaskedUpdate> masked;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> vals(dim);
      for (double& v : vals) v = rng.uniform(-1.0, 1.0);
      ModelUpdate u{participants[i], 0, ParamVector(vals), 1, 0.0};
      masked.push_back(mask_update(u, participants, 7));
    }
    masked.pop_back();
    bool aborted = false;
    try {
      secure_sum(masked, participants);
    } catch (const Error& e) {
      aborted = e.code() == ErrorCode::kUnrecoverableMasks;
    }
    if (!aborted) {
      return {false, "missing participant not rejected at n=" +
                         std::to_string(n)};
    }
  }
  std::ostringstream os;
  os << trials << " exact sums, every dropout aborted";
  return {true, os.str()};
}

// ---- criterion 4: gossip conservation and convergence ----------------

std::pair<bool, std::string> criterion4() {
  const std::size_t n = 8, dim = 10;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back(client_name(i, n));
  const GossipTopology topo = complete_topology(ids);

  std::map<std::string, ParamVector> states;
  Rng rng = Rng::substream(4, "acceptance-gossip");
  for (const auto& id : ids) {
    std::vector<double> vals(dim);
    for (double& v : vals) v = rng.uniform(-1.0, 1.0);
    states[id] = ParamVector(vals);
  }

  auto mean_of = [&](const std::map<std::string, ParamVector>& st) {
    std::vector<double> m(dim, 0.0);
    for (const auto& [id, p] : st) {
      for (std::size_t f = 0; f < dim; ++f) m[f] += p.values[f];
    }
    for (double& v : m) v /= static_cast<double>(n);
    return m;
  };
  auto max_pairwise = [&](const std::map<std::string, ParamVector>& st) {
    double mx = 0.0;
    for (const auto& [ia, a] : st) {
      for (const auto& [ib, b] : st) {
        double d2 = 0.0;
        for (std::size_t f = 0; f < dim; ++f) {
          const double d = a.values[f] - b.values[f];
          d2 += d * d;
        }
        mx = std::max(mx, std::sqrt(d2));
      }
    }
    return mx;
  };

  const std::vector<double> mean0 = mean_of(states);
  const double spread0 = max_pairwise(states);
  double worst_drift = 0.0;
  for (int round = 1; round <= 200; ++round) {
    states = gossip_round(std::move(states), topo, /*fanout=*/1,
                          /*segments=*/1, /*seed=*/4, round);
    const std::vector<double> m = mean_of(states);
    for (std::size_t f = 0; f < dim; ++f) {
      worst_drift = std::max(worst_drift, std::abs(m[f] - mean0[f]));
    }
  }
  const double final_spread = max_pairwise(states);

  std::ostringstream os;
  os << "mean drift " << worst_drift << ", spread " << final_spread << " of "
     << spread0;
  const bool ok = worst_drift <= 1e-12 && final_spread < 1e-6 * spread0;
  return {ok, os.str()};
}

// ---- criterion 5: async degeneracy -----------------------------------

std::pair<bool, std::string> criterion5() {
  Scenario s;
  s.name = "degenerate";
  s.seed = 5;
  s.rounds = 12;
  s.n_clients = 1;
  s.task = TaskKind::kLinearRegression;
  s.samples_per_client = 30;
  s.n_features = 4;
  s.training.learning_rate = 0.05;
  s.training.local_epochs = 2;
  s.training.batch_size = 10;
  s.convergence.enabled = false;

  Scenario async_s = s;
  async_s.aggregator = AggregatorKind::kAsync;
  async_s.async_cfg.mix = 1.0;
  async_s.async_cfg.round_deadline_ms = 0.0;

  const RunResult sync_r = run_scenario(s);
  const RunResult async_r = run_scenario(async_s);
  bool identical = sync_r.round_models.size() == async_r.round_models.size();
  if (identical) {
    for (std::size_t i = 0; i < sync_r.round_models.size(); ++i) {
      identical = identical && sync_r.round_models[i].values ==
                                   async_r.round_models[i].values;
    }
  }

  // Both decay kinds must weigh staler updates strictly less.
  bool monotone = true;
  for (DecayKind kind : {DecayKind::kInverse, DecayKind::kExponential}) {
    StalenessPolicy p;
    p.decay = kind;
    p.rate = kind == DecayKind::kInverse ? 0.7 : 0.3;
    for (int tau = 0; tau < 30; ++tau) {
      monotone = monotone && p.weight(tau + 1) < p.weight(tau);
    }
  }

  std::ostringstream os;
  os << (identical ? "state sequences identical" : "state sequences differ")
     << ", alpha " << (monotone ? "strictly decreasing" : "not monotone");
  return {identical && monotone, os.str()};
}

// ---- criterion 6: learning sanity ------------------------------------

// Independent logistic arithmetic for the centralized oracle.
double oracle_logistic_loss(const std::vector<double>& w, const Dataset& d) {
  double total = 0.0;
  for (std::size_t i = 0; i < d.n_samples; ++i) {
    const auto x = d.row(i);
    double z = w.back();
    for (std::size_t f = 0; f < d.n_features; ++f) z += w[f] * x[f];
    const double y = d.labels[i];
    total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
  }
  return total / static_cast<double>(d.n_samples);
}

std::vector<double> oracle_logistic_gd(const Dataset& d, double lr, int steps) {
  std::vector<double> w(d.n_features + 1, 0.0);
  std::vector<double> g(w.size());
  for (int step = 0; step < steps; ++step) {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < d.n_samples; ++i) {
      const auto x = d.row(i);
      double z = w.back();
      for (std::size_t f = 0; f < d.n_features; ++f) z += w[f] * x[f];
      const double p = 1.0 / (1.0 + std::exp(-z));
      const double r = p - d.labels[i];
      for (std::size_t f = 0; f < d.n_features; ++f) g[f] += r * x[f];
      g.back() += r;
    }
    for (double& v : g) v /= static_cast<double>(d.n_samples);
    for (std::size_t f = 0; f < w.size(); ++f) w[f] -= lr * g[f];
  }
  return w;
}

std::pair<bool, std::string> criterion6() {
  Scenario s;
  s.name = "sanity";
  s.seed = 123;
  s.rounds = 20;
  s.n_clients = 10;
  s.task = TaskKind::kBinaryLogistic;
  s.partition.skew = 0.0;
  s.samples_per_client = 100;
  s.n_features = 5;
  s.training.learning_rate = 0.25;
  s.training.local_epochs = 5;
  s.training.batch_size = 100;  // full batch locally
  s.convergence.enabled = false;

  const RunResult iid = run_scenario(s);

  // The same pooled draw the engine trains on.
  PartitionConfig pc;
  pc.samples_per_client = s.samples_per_client;
  pc.n_features = s.n_features;
  pc.noise_std = s.noise_std;
  const Dataset pooled = concat_datasets(
      generate_partitions(s.n_clients, 0.0, s.task, s.seed, pc), s.task);

  const int total_steps = s.rounds * s.training.local_epochs;
  const std::vector<double> oracle =
      oracle_logistic_gd(pooled, s.training.learning_rate, total_steps);
  const double oracle_loss = oracle_logistic_loss(oracle, pooled);
  const double fed_loss =
      oracle_logistic_loss(iid.global_model.values, pooled);
  const double gap = std::abs(fed_loss - oracle_loss) / oracle_loss;

  Scenario skewed = s;
  skewed.partition.skew = 100.0;  // dirichlet concentration ~0.01
  const RunResult skew_r = run_scenario(skewed);
  const bool skew_worse = skew_r.summary.final_loss.has_value() &&
                          iid.summary.final_loss.has_value() &&
                          *skew_r.summary.final_loss >
                              *iid.summary.final_loss;

  std::ostringstream os;
  os << "fed " << fed_loss << " vs oracle " << oracle_loss << " (gap "
     << gap * 100 << "%), skewed " << *skew_r.summary.final_loss << " vs iid "
     << *iid.summary.final_loss;
  return {gap <= 0.05 && skew_worse, os.str()};
}

// ---- criterion 7: pattern remedies point the right way ---------------

// Adjusted Rand index between two labelings, from the pair-counting
// contingency table.
double adjusted_rand_index(const std::vector<int>& a,
                           const std::vector<int>& b) {
  const std::size_t n = a.size();
  std::map<std::pair<int, int>, double> cells;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < n; ++i) {
    cells[{a[i], b[i]}] += 1;
    rows[a[i]] += 1;
    cols[b[i]] += 1;
  }
  auto choose2 = [](double m) { return m * (m - 1) / 2; };
  double sum_cells = 0, sum_rows = 0, sum_cols = 0;
  for (const auto& [k, v] : cells) sum_cells += choose2(v);
  for (const auto& [k, v] : rows) sum_rows += choose2(v);
  for (const auto& [k, v] : cols) sum_cols += choose2(v);
  const double total = choose2(static_cast<double>(n));
  const double expected = sum_rows * sum_cols / total;
  const double max_index = (sum_rows + sum_cols) / 2;
  if (max_index == expected) return 1.0;
  return (sum_cells - expected) / (max_index - expected);
}

std::pair<bool, std::string> criterion7() {
  // Planted two-population task; cluster on local update directions.
  PartitionConfig pc;
  pc.samples_per_client = 150;
  pc.n_features = 5;
  const TwoModeData tm =
      generate_two_mode(8, 3.0, TaskKind::kBinaryLogistic, 9, pc);

  TrainingConfig tc;
  tc.learning_rate = 0.2;
  tc.local_epochs = 3;
  tc.batch_size = 150;
  const ParamVector start = zeros(pc.n_features + 1);

  std::map<std::string, std::vector<double>> directions;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < tm.clients.size(); ++i) {
    const std::string id = client_name(i, tm.clients.size());
    ids.push_back(id);
    const ParamVector trained = local_train(
        TaskKind::kBinaryLogistic, start, tm.clients[i], tc, nullptr, i);
    directions[id] = trained.values;
  }
  const ClusterAssignment clusters =
      cluster_clients(directions, 2, DistanceMetric::kCosine);
  std::vector<int> found;
  for (const auto& id : ids) found.push_back(clusters.labels.at(id));
  const double ari = adjusted_rand_index(found, tm.true_mode);

  // Short per-cluster federated training, then cross-deployment.
  std::map<int, ParamVector> cluster_model;
  for (int c = 0; c < 2; ++c) cluster_model[c] = start;
  for (int round = 0; round < 5; ++round) {
    for (int c = 0; c < 2; ++c) {
      std::vector<ModelUpdate> updates;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        if (clusters.labels.at(ids[i]) != c) continue;
        const ParamVector t =
            local_train(TaskKind::kBinaryLogistic, cluster_model[c],
                        tm.clients[i], tc, nullptr, 100 + i);
        updates.push_back(
            ModelUpdate{ids[i], round, t, tm.clients[i].n_samples, 0.0});
      }
      cluster_model[c] = fedavg(updates);
    }
  }
  bool matched_never_worse = true;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int own = clusters.labels.at(ids[i]);
    const double own_loss = loss_value(TaskKind::kBinaryLogistic,
                                       cluster_model[own], tm.clients[i]);
    const double other_loss = loss_value(TaskKind::kBinaryLogistic,
                                         cluster_model[1 - own], tm.clients[i]);
    matched_never_worse = matched_never_worse && own_loss <= other_loss;
  }

  // Class rebalancing on an extreme label skew must help the global fit.
  Scenario sk;
  sk.name = "skewfix";
  sk.seed = 31;
  sk.rounds = 15;
  sk.n_clients = 8;
  sk.task = TaskKind::kBinaryLogistic;
  sk.partition.skew = 100.0;
  sk.samples_per_client = 80;
  sk.n_features = 5;
  sk.training.learning_rate = 0.2;
  sk.training.local_epochs = 5;
  sk.training.batch_size = 16;
  sk.convergence.enabled = false;
  Scenario balanced = sk;
  balanced.balance.enabled = true;
  balanced.balance.tolerance = 1.1;

  const RunResult plain_r = run_scenario(sk);
  const RunResult bal_r = run_scenario(balanced);
  const double plain_loss = plain_r.summary.final_loss.value();
  const double bal_loss = bal_r.summary.final_loss.value();

  std::ostringstream os;
  os << "ARI " << ari << ", matched<=mismatched "
     << (matched_never_worse ? "yes" : "no") << ", balanced " << bal_loss
     << " vs skewed " << plain_loss;
  const bool ok = ari == 1.0 && matched_never_worse && bal_loss < plain_loss;
  return {ok, os.str()};
}

// ---- criterion 8: compression accounting -----------------------------

std::pair<bool, std::string> criterion8() {
  Scenario s;
  s.name = "wire";
  s.seed = 3;
  s.rounds = 4;
  s.n_clients = 5;
  s.task = TaskKind::kLinearRegression;
  s.samples_per_client = 20;
  s.n_features = 79;  // dim 80, so k = dim/10 = 8
  s.training.batch_size = 20;
  s.convergence.enabled = false;

  Scenario topk = s;
  topk.compression.scheme = CompressionScheme::kTopK;
  topk.compression.k = 8;

  const RunResult raw = run_scenario(s);
  const RunResult packed = run_scenario(topk);
  const double reduction =
      1.0 - static_cast<double>(packed.summary.bytes_up_total) /
                static_cast<double>(raw.summary.bytes_up_total);

  // Quantization error bound and lossless top-k roundtrip over a fixed
  // corpus of random vectors.
  const std::size_t dim = 24;
  bool bounds_ok = true, roundtrip_ok = true;
  Rng rng = Rng::substream(8, "acceptance-compress");
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> vals(dim);
    const double scale = 0.1 + 100.0 * rng.uniform();
    for (double& v : vals) v = rng.uniform(-scale, scale);
    const ParamVector v(vals);

    for (int bits : {4, 8, 16}) {
      CompressionConfig qc;
      qc.scheme = CompressionScheme::kQuantize;
      qc.bits = bits;
      const ParamVector back = decompress(compress(v, qc));
      const double lo = *std::min_element(vals.begin(), vals.end());
      const double hi = *std::max_element(vals.begin(), vals.end());
      const double bound =
          (hi - lo) / (2.0 * (std::pow(2.0, bits) - 1.0));
      for (std::size_t f = 0; f < dim; ++f) {
        bounds_ok = bounds_ok && std::abs(back.values[f] - vals[f]) <=
                                     bound * (1.0 + 1e-12);
      }
    }

    CompressionConfig full;
    full.scheme = CompressionScheme::kTopK;
    full.k = dim;
    const ParamVector echo = decompress(compress(v, full));
    roundtrip_ok = roundtrip_ok && echo.values == vals;
  }

  std::ostringstream os;
  os << "bytes_up " << packed.summary.bytes_up_total << " vs "
     << raw.summary.bytes_up_total << " (" << reduction * 100
     << "% saved), quantize bound " << (bounds_ok ? "held" : "violated")
     << ", k=dim roundtrip " << (roundtrip_ok ? "exact" : "lossy");
  return {reduction >= 0.80 && bounds_ok && roundtrip_ok, os.str()};
}

// ---- criterion 9: trigger semantics vs a counting oracle -------------

std::pair<bool, std::string> criterion9() {
  XorShift xr(9);
  int trials = 0, fires = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 3 + xr.below(8);
    TriggerState st;
    st.threshold = 0.8;
    st.patience = 1 + xr.below(5);
    st.quorum_fraction = 0.1 + 0.9 * xr.uniform();

    int streak = 0;
    bool oracle_fired = false;
    for (int round = 0; round < 40; ++round) {
      const int low = xr.below(n + 1);
      std::map<std::string, EvalReport> reports;
      for (int i = 0; i < n; ++i) {
        EvalReport r;
        r.loss = 0.4;
        r.accuracy = i < low ? 0.5 : 0.95;
        r.n_samples = 10;
        reports[client_name(i, n)] = r;
      }
      st = check_replacement_trigger(st, reports, n);

      // Reference semantics, counted independently.
      if (!oracle_fired) {
        const bool breach = static_cast<double>(low) >=
                            st.quorum_fraction * static_cast<double>(n);
        streak = breach ? streak + 1 : 0;
        if (streak >= st.patience) oracle_fired = true;
      }
      if (st.fired != oracle_fired) {
        std::ostringstream os;
        os << "divergence at trial " << trial << " round " << round
           << " (n=" << n << " patience=" << st.patience << ")";
        return {false, os.str()};
      }
    }
    trials++;
    if (oracle_fired) fires++;
  }
  std::ostringstream os;
  os << trials << " randomized runs agree (" << fires << " fired)";
  return {true, os.str()};
}

// ---- criterion 10: determinism, shapley, gradients -------------------

std::pair<bool, std::string> criterion10() {
  // Full-feature scenario, run twice: artifacts must be byte identical.
  Scenario s;
  s.name = "repeat";
  s.seed = 77;
  s.rounds = 10;
  s.n_clients = 6;
  s.task = TaskKind::kBinaryLogistic;
  s.partition.kind = PartitionSpec::Kind::kTwoMode;
  s.partition.mode_gap = 2.5;
  s.samples_per_client = 60;
  s.n_features = 8;
  s.selection_all = false;
  s.selection.mode = SelectionMode::kRandom;
  s.selection.top_k = 4;
  s.training.learning_rate = 0.2;
  s.training.local_epochs = 2;
  s.training.batch_size = 16;
  s.device.dropout_prob = 0.1;
  s.compression.scheme = CompressionScheme::kTopK;
  s.compression.k = 3;
  s.clustering.enabled = true;
  s.clustering.k = 2;
  s.balance.enabled = true;
  s.balance.tolerance = 1.3;
  s.incentives.enabled = true;
  s.incentives.scheme = IncentiveScheme::kLossImprovement;
  s.incentives.budget_per_round = 10.0;
  s.incentives.probe_samples = 100;
  s.trigger.enabled = true;
  s.trigger.threshold = 0.75;
  s.trigger.patience = 2;
  s.trigger.monitor_rounds = 4;
  s.trigger.drift_shift = 0.8;
  s.convergence.enabled = true;
  s.convergence.rel_tol = 0.05;
  s.convergence.window = 3;

  const fs::path d1 = scratch_dir("c10-a");
  const fs::path d2 = scratch_dir("c10-b");
  run_scenario(s, d1);
  run_scenario(s, d2);
  const bool bytes_equal =
      slurp(d1 / "metrics.jsonl") == slurp(d2 / "metrics.jsonl") &&
      slurp(d1 / "coversion.log") == slurp(d2 / "coversion.log") &&
      slurp(d1 / "summary.json") == slurp(d2 / "summary.json");

  // Shapley against the permutation-average definition, n = 2..8.
  double worst_shapley = 0.0;
  for (int n = 2; n <= 8; ++n) {
    XorShift xr(1000 + n);
    std::vector<double> v(std::size_t{1} << n);
    v[0] = 0.0;
    for (std::size_t m = 1; m < v.size(); ++m) v[m] = xr.uniform();

    std::vector<std::string> ids;
    std::map<std::string, std::size_t> bit_of;
    for (int i = 0; i < n; ++i) {
      ids.push_back(client_name(i, n));
      bit_of[ids.back()] = std::size_t{1} << i;
    }
    const CoalitionValue eval = [&](const std::vector<std::string>& coalition) {
      std::size_t mask = 0;
      for (const auto& id : coalition) mask |= bit_of.at(id);
      return v[mask];
    };
    std::map<std::string, ClientRoundStat> stats;
    for (const auto& id : ids) stats[id] = ClientRoundStat{};
    const auto lib =
        score_contribution(IncentiveScheme::kShapley, stats, &eval);

    // Average marginal contribution over every arrival order.
    std::map<std::string, double> oracle;
    for (const auto& id : ids) oracle[id] = 0.0;
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double n_perms = 0;
    do {
      std::size_t mask = 0;
      for (int idx : perm) {
        const std::size_t bit = std::size_t{1} << idx;
        oracle[ids[idx]] += v[mask | bit] - v[mask];
        mask |= bit;
      }
      n_perms += 1;
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (const auto& id : ids) {
      worst_shapley = std::max(
          worst_shapley, std::abs(lib.at(id) - oracle.at(id) / n_perms));
    }
  }

  // Analytic gradients agree with central differences for both tasks.
  double worst_grad = 0.0;
  for (TaskKind task :
       {TaskKind::kLinearRegression, TaskKind::kBinaryLogistic}) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      PartitionConfig pc;
      pc.samples_per_client = 40;
      pc.n_features = 6;
      const Dataset d = generate_pool(task, 40, seed, pc).pool;
      Rng rng = Rng::substream(seed, "acceptance-grad");
      std::vector<double> w(pc.n_features + 1);
      for (double& x : w) x = rng.gaussian();
      worst_grad =
          std::max(worst_grad, gradient_check(task, ParamVector(w), d));
    }
  }

  std::ostringstream os;
  os << "artifacts " << (bytes_equal ? "byte-identical" : "diverged")
     << ", shapley max err " << worst_shapley << ", gradient max err "
     << worst_grad;
  const bool ok = bytes_equal && worst_shapley <= 1e-12 && worst_grad < 1e-5;
  return {ok, os.str()};
}

}  // namespace

int main() {
  std::cout << "fedsim acceptance gate\n";
  guarded(1, "co-versioning at scale", criterion1);
  guarded(2, "hierarchical cadence and collapse", criterion2);
  guarded(3, "secure aggregation exactness", criterion3);
  guarded(4, "gossip conservation and convergence", criterion4);
  guarded(5, "async degeneracy and staleness monotonicity", criterion5);
  guarded(6, "learning sanity vs centralized oracle", criterion6);
  guarded(7, "clustering, deployment, and balancing remedies", criterion7);
  guarded(8, "compression accounting", criterion8);
  guarded(9, "replacement trigger semantics", criterion9);
  guarded(10, "determinism, shapley, and gradients", criterion10);

  if (g_failures == 0) {
    std::cout << "all 10 criteria passed\n";
    return 0;
  }
  std::cout << g_failures << " criteria failed\n";
  return 1;
}
