#include <doctest.h>

#include <cstdint>
#include <map>
#include <string>

#include "fedsim/trigger.hpp"

using namespace fedsim;

namespace {

// Builds a reporting round where `low` clients sit below 0.8 accuracy
// and the rest sit comfortably above it.
std::map<std::string, EvalReport> round_with(int low, int total) {
  std::map<std::string, EvalReport> reports;
  for (int i = 0; i < total; ++i) {
    EvalReport r;
    r.loss = 0.5;
    r.accuracy = i < low ? 0.6 : 0.95;
    r.n_samples = 20;
    reports["c" + std::to_string(i)] = r;
  }
  return reports;
}

}  // namespace

TEST_CASE("quorum compares breaching count against the monitored fleet") {
  TriggerState s;
  s.threshold = 0.8;
  s.quorum_fraction = 0.5;
  s.patience = 1;

  // 2 of 5 below: 2 < 2.5, no breach.
  TriggerState a = check_replacement_trigger(s, round_with(2, 5), 5);
  CHECK(a.consecutive_breaches == 0);
  CHECK_FALSE(a.fired);

  // 3 of 5 below: 3 >= 2.5, breach.
  TriggerState b = check_replacement_trigger(s, round_with(3, 5), 5);
  CHECK(b.consecutive_breaches == 1);
  CHECK(b.fired);

  // Equality counts as a breach: 2 of 4 at quorum 0.5.
  TriggerState c = check_replacement_trigger(s, round_with(2, 4), 4);
  CHECK(c.fired);
}

TEST_CASE("absent reporters count as healthy") {
  TriggerState s;
  s.quorum_fraction = 0.5;
  s.patience = 1;
  // Both reporters breach, but the fleet is 5 strong: 2 < 2.5.
  TriggerState a = check_replacement_trigger(s, round_with(2, 2), 5);
  CHECK_FALSE(a.fired);
  // Against their own count the same reports fire.
  TriggerState b = check_replacement_trigger(s, round_with(2, 2), 2);
  CHECK(b.fired);
}

TEST_CASE("patience requires consecutive breaches and resets on recovery") {
  TriggerState s;
  s.patience = 3;
  s.quorum_fraction = 0.5;

  const auto bad = round_with(4, 4);
  const auto good = round_with(0, 4);

  s = check_replacement_trigger(s, bad, 4);
  s = check_replacement_trigger(s, bad, 4);
  CHECK(s.consecutive_breaches == 2);
  CHECK_FALSE(s.fired);

  // One healthy round wipes the streak.
  s = check_replacement_trigger(s, good, 4);
  CHECK(s.consecutive_breaches == 0);

  s = check_replacement_trigger(s, bad, 4);
  s = check_replacement_trigger(s, bad, 4);
  CHECK_FALSE(s.fired);
  s = check_replacement_trigger(s, bad, 4);
  CHECK(s.fired);
  CHECK(s.consecutive_breaches == 3);
}

TEST_CASE("a fired trigger latches") {
  TriggerState s;
  s.patience = 1;
  s.quorum_fraction = 0.5;
  s = check_replacement_trigger(s, round_with(4, 4), 4);
  REQUIRE(s.fired);

  // Healthy rounds do not reset a fired trigger; the state is frozen.
  const TriggerState after = check_replacement_trigger(s, round_with(0, 4), 4);
  CHECK(after == s);
}

TEST_CASE("trigger validates its configuration and inputs") {
  const auto reports = round_with(1, 2);
  TriggerState s;

  TriggerState bad = s;
  bad.patience = 0;
  CHECK_THROWS_AS(check_replacement_trigger(bad, reports, 2), Error);

  bad = s;
  bad.quorum_fraction = 0.0;
  CHECK_THROWS_AS(check_replacement_trigger(bad, reports, 2), Error);
  bad.quorum_fraction = 1.5;
  CHECK_THROWS_AS(check_replacement_trigger(bad, reports, 2), Error);

  CHECK_THROWS_AS(check_replacement_trigger(s, reports, 0), Error);

  try {
    check_replacement_trigger(s, {}, 2);
    FAIL("expected kMonitoring");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMonitoring);
  }

  auto blind = reports;
  blind["c0"].accuracy.reset();
  try {
    check_replacement_trigger(s, blind, 2);
    FAIL("expected kMonitoring");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kMonitoring);
  }
}

TEST_CASE("randomized breach patterns match a counting oracle") {
  // Deterministic pseudo-random pattern; the oracle mirrors the counter
  // semantics exactly (streak of `patience` breaches fires, then latch).
  std::uint64_t x = 0x9e3779b97f4a7c15ull;
  auto next = [&x]() {
    x ^= x << 13;
    x ^= x >> 7;
    x ^= x << 17;
    return x;
  };

  for (int trial = 0; trial < 50; ++trial) {
    TriggerState s;
    s.patience = 1 + static_cast<int>(next() % 4);
    s.quorum_fraction = 0.5;

    int streak = 0;
    bool oracle_fired = false;
    for (int round = 0; round < 30; ++round) {
      const bool breach_round = (next() % 3) != 0;  // 4 of 6 below vs 1 of 6
      const auto reports = round_with(breach_round ? 4 : 1, 6);
      s = check_replacement_trigger(s, reports, 6);

      if (!oracle_fired) {
        streak = breach_round ? streak + 1 : 0;
        if (streak >= s.patience) oracle_fired = true;
      }
      CHECK(s.fired == oracle_fired);
    }
  }
}
