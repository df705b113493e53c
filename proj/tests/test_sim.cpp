#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fedsim/sim.hpp"

using namespace fedsim;
namespace fs = std::filesystem;

namespace {

Scenario small_fedavg() {
  Scenario s;
  s.name = "sim-test";
  s.seed = 42;
  s.rounds = 4;
  s.n_clients = 4;
  s.task = TaskKind::kLinearRegression;
  s.samples_per_client = 20;
  s.n_features = 3;
  s.training.batch_size = 10;
  s.convergence.enabled = false;
  return s;
}

double extra(const MetricsRecord& rec, const std::string& key) {
  const auto it = rec.extra_num.find(key);
  return it == rec.extra_num.end() ? 0.0 : it->second;
}

// selected = participants + dropouts + deferred - carried_in must hold
// on every evaluate record, or clients are being double counted.
void check_conservation(const std::vector<MetricsRecord>& metrics) {
  int evaluates = 0;
  for (const auto& rec : metrics) {
    if (rec.event != "evaluate") continue;
    ++evaluates;
    CHECK(extra(rec, "selected") == rec.participants + rec.dropouts +
                                        extra(rec, "deferred") -
                                        extra(rec, "carried_in"));
  }
  CHECK(evaluates > 0);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("cost model is latency plus size over capacity") {
  DeviceProfile d;
  d.bandwidth = 50.0;
  d.base_latency = 2.0;
  d.compute_capacity = 4.0;
  CHECK(transfer_time_ms(100.0, d) == doctest::Approx(4.0));
  CHECK(compute_time_ms(100.0, d) == doctest::Approx(25.0));
  CHECK(training_ops(10, 4, 2) == doctest::Approx(320.0));
  CHECK_THROWS_AS(transfer_time_ms(-1.0, d), Error);
  CHECK_THROWS_AS(compute_time_ms(-1.0, d), Error);
}

TEST_CASE("dropout draws are a pure function of client, round, and seed") {
  const bool a = sample_dropout("c001", 3, 9, 0.5);
  CHECK(sample_dropout("c001", 3, 9, 0.5) == a);
  CHECK_FALSE(sample_dropout("c001", 3, 9, 0.0));
  CHECK(sample_dropout("c001", 3, 9, 1.0));
  // The stream is salted by round, so draws vary over time.
  bool saw_other = false;
  for (int r = 0; r < 64 && !saw_other; ++r) {
    saw_other = sample_dropout("c001", r, 9, 0.5) != a;
  }
  CHECK(saw_other);
}

TEST_CASE("a zero-round run is just the task release") {
  Scenario s = small_fedavg();
  s.rounds = 0;
  const RunResult r = run_scenario(s);

  REQUIRE(r.metrics.size() == 1 + s.n_clients);
  CHECK(r.metrics[0].event == "task_created");
  CHECK(extra(r.metrics[0], "n_clients") == 4.0);
  const std::uint64_t raw = (s.n_features + 1) * 8;
  for (std::size_t i = 1; i < r.metrics.size(); ++i) {
    CHECK(r.metrics[i].event == "broadcast_done");
    CHECK(r.metrics[i].bytes_down == raw);
  }
  CHECK(r.round_models.empty());
  CHECK(r.summary.rounds_completed == 0);
  CHECK_FALSE(r.summary.converged);
  CHECK_FALSE(r.summary.final_loss.has_value());
  CHECK(r.summary.bytes_up_total == 0);
  CHECK(r.summary.bytes_down_total == 4 * raw);
  CHECK(r.summary.global_records == 0);
}

TEST_CASE("equal scenarios produce equal runs") {
  const Scenario s = small_fedavg();
  const RunResult a = run_scenario(s);
  const RunResult b = run_scenario(s);

  REQUIRE(a.metrics.size() == b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    CHECK(metrics_to_json_line(a.metrics[i]) ==
          metrics_to_json_line(b.metrics[i]));
  }
  CHECK(a.summary == b.summary);
  REQUIRE(a.round_models.size() == b.round_models.size());
  for (std::size_t i = 0; i < a.round_models.size(); ++i) {
    CHECK(a.round_models[i].values == b.round_models[i].values);
  }

  Scenario other = s;
  other.seed = 43;
  const RunResult c = run_scenario(other);
  CHECK(c.summary.final_loss != a.summary.final_loss);
}

TEST_CASE("the summary is exactly the fold over the metrics stream") {
  const Scenario s = small_fedavg();
  const RunResult r = run_scenario(s);

  const MetricsTotals t = fold_metrics(r.metrics);
  CHECK(r.summary.bytes_up_total == t.bytes_up);
  CHECK(r.summary.bytes_down_total == t.bytes_down);
  CHECK(r.summary.virtual_time_ms == t.last_time_ms);
  CHECK(r.summary.rounds_completed == t.last_round);
  CHECK(r.summary.final_loss == t.final_loss);
  CHECK(r.summary.final_accuracy == t.final_accuracy);

  // Times never run backwards.
  for (std::size_t i = 1; i < r.metrics.size(); ++i) {
    CHECK(r.metrics[i].virtual_time_ms >= r.metrics[i - 1].virtual_time_ms);
  }
  // Every record survives a JSON roundtrip unchanged.
  for (const auto& rec : r.metrics) {
    CHECK(metrics_from_json_line(metrics_to_json_line(rec)) == rec);
  }
  // One co-version record per round, one local entry per participant.
  CHECK(r.summary.global_records == static_cast<std::size_t>(s.rounds));
  CHECK(r.summary.local_entries ==
        static_cast<std::size_t>(s.rounds) * s.n_clients);
  CHECK(r.summary.rounds_to_convergence == std::nullopt);
}

TEST_CASE("dropouts keep the selection ledger balanced") {
  Scenario s = small_fedavg();
  s.rounds = 6;
  s.n_clients = 8;
  s.seed = 7;
  s.device.dropout_prob = 0.3;
  const RunResult r = run_scenario(s);
  check_conservation(r.metrics);

  int total_drops = 0;
  for (const auto& rec : r.metrics) {
    if (rec.event == "evaluate") total_drops += rec.dropouts;
  }
  CHECK(total_drops > 0);  // 48 draws at p = 0.3
}

TEST_CASE("an async deadline defers slow clients to the next round") {
  Scenario s = small_fedavg();
  s.aggregator = AggregatorKind::kAsync;
  s.rounds = 4;
  s.n_clients = 3;
  s.device.compute_capacity = 100.0;
  s.device.bandwidth = 1000.0;
  s.device.base_latency = 1.0;
  DeviceProfile slow = s.device;
  slow.compute_capacity = 0.1;  // 1000x the training time of the others
  s.device_overrides["c002"] = slow;
  s.async_cfg.round_deadline_ms = 50.0;
  const RunResult r = run_scenario(s);

  check_conservation(r.metrics);
  double deferred = 0.0;
  double carried = 0.0;
  for (const auto& rec : r.metrics) {
    if (rec.event != "evaluate") continue;
    deferred += extra(rec, "deferred");
    carried += extra(rec, "carried_in");
  }
  CHECK(deferred >= 3.0);  // the slow client misses every deadline
  CHECK(carried >= 2.0);   // and lands at the top of the next round
}

TEST_CASE("secure aggregation tolerates dropouts at the sim level") {
  Scenario s = small_fedavg();
  s.aggregator = AggregatorKind::kSecure;
  s.n_clients = 6;
  s.rounds = 4;
  s.seed = 11;
  s.device.dropout_prob = 0.25;
  const RunResult r = run_scenario(s);
  check_conservation(r.metrics);
  REQUIRE(r.summary.final_loss.has_value());
  CHECK(std::isfinite(*r.summary.final_loss));
  CHECK(r.summary.rounds_completed == 4);
}

TEST_CASE("run_scenario writes the three run artifacts atomically") {
  const fs::path dir = fs::temp_directory_path() / "fedsim-sim-test";
  fs::remove_all(dir);
  const Scenario s = small_fedavg();
  const RunResult r = run_scenario(s, dir);

  // metrics.jsonl holds exactly the in-memory stream.
  const auto lines = read_metrics_jsonl(dir / "metrics.jsonl");
  REQUIRE(lines.size() == r.metrics.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    CHECK(lines[i] == r.metrics[i]);
  }

  // summary.json holds the same summary it returned.
  CHECK(load_summary(dir / "summary.json") == r.summary);
  CHECK(summary_from_json(summary_to_json(r.summary)) == r.summary);

  // coversion.log verifies and matches the registry counts.
  const CoVersionRegistry reg = CoVersionRegistry::load(dir / "coversion.log");
  CHECK(reg.global_records() == r.summary.global_records);
  CHECK(reg.local_entries() == r.summary.local_entries);

  // A second run writes byte-identical artifacts.
  const fs::path dir2 = fs::temp_directory_path() / "fedsim-sim-test-2";
  fs::remove_all(dir2);
  run_scenario(s, dir2);
  CHECK(slurp(dir / "metrics.jsonl") == slurp(dir2 / "metrics.jsonl"));
  CHECK(slurp(dir / "coversion.log") == slurp(dir2 / "coversion.log"));
  CHECK(slurp(dir / "summary.json") == slurp(dir2 / "summary.json"));
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("a gossip fleet runs tick events and accounts exchange bytes") {
  Scenario s = small_fedavg();
  s.aggregator = AggregatorKind::kGossip;
  s.n_clients = 4;
  s.rounds = 3;
  s.gossip.fanout = 1;
  s.gossip.ticks_per_round = 2;
  const RunResult r = run_scenario(s);

  int ticks = 0;
  for (const auto& rec : r.metrics) {
    if (rec.event == "gossip_tick") ++ticks;
  }
  CHECK(ticks == 6);
  CHECK(r.summary.bytes_up_total > 0);
  CHECK(r.summary.rounds_completed == 3);
}

TEST_CASE("convergence cuts the round loop short and is recorded") {
  Scenario s = small_fedavg();
  s.rounds = 60;
  s.training.learning_rate = 0.1;
  s.convergence.enabled = true;
  s.convergence.rel_tol = 0.05;
  s.convergence.window = 2;
  const RunResult r = run_scenario(s);
  REQUIRE(r.summary.converged);
  REQUIRE(r.summary.rounds_to_convergence.has_value());
  CHECK(r.summary.rounds_completed == *r.summary.rounds_to_convergence);
  CHECK(r.summary.rounds_completed < 60);
  int converged_events = 0;
  for (const auto& rec : r.metrics) {
    if (rec.event == "converged") ++converged_events;
  }
  CHECK(converged_events == 1);
}
