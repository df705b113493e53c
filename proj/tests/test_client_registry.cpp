#include <doctest.h>

#include <string>
#include <vector>

#include "fedsim/client_registry.hpp"

using namespace fedsim;

namespace {

ClientRecord make_record(const std::string& id) {
  ClientRecord r;
  r.client_id = id;
  r.compute_capacity = 2.0;
  r.bandwidth = 50.0;
  r.connect_time_ms = 0.0;
  r.data_summary.n_samples = 10;
  r.data_summary.class_histogram = {{0, 4}, {1, 6}};
  return r;
}

}  // namespace

TEST_CASE("register, lookup, and sorted listing") {
  ClientRegistry reg;
  reg.register_client(make_record("c2"));
  reg.register_client(make_record("c0"));
  reg.register_client(make_record("c1"));

  CHECK(reg.size() == 3);
  CHECK(reg.contains("c1"));
  CHECK_FALSE(reg.contains("c9"));
  CHECK(reg.ids() == std::vector<std::string>{"c0", "c1", "c2"});
  CHECK(reg.snapshot().front().client_id == "c0");
  CHECK(reg.find("c2").has_value());
  CHECK_FALSE(reg.find("missing").has_value());
  CHECK(reg.get("c0").bandwidth == 50.0);
  try {
    reg.get("missing");
    FAIL("expected kNotFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotFound);
  }
}

TEST_CASE("re-registration is idempotent but connect_time is immutable") {
  ClientRegistry reg;
  const ClientRecord r = make_record("c0");
  reg.register_client(r);
  CHECK_NOTHROW(reg.register_client(r));

  ClientRecord moved = r;
  moved.connect_time_ms = 99.0;
  try {
    reg.register_client(moved);
    FAIL("expected kRegistryConflict");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kRegistryConflict);
  }

  // Other fields may be updated in place.
  ClientRecord upgraded = r;
  upgraded.bandwidth = 80.0;
  reg.register_client(upgraded);
  CHECK(reg.get("c0").bandwidth == 80.0);
}

TEST_CASE("malformed records are rejected up front") {
  ClientRegistry reg;
  ClientRecord r = make_record("");
  CHECK_THROWS_AS(reg.register_client(r), Error);

  r = make_record("c0");
  r.compute_capacity = 0.0;
  CHECK_THROWS_AS(reg.register_client(r), Error);

  r = make_record("c0");
  r.connect_time_ms = 10.0;
  r.disconnect_time_ms = 5.0;
  CHECK_THROWS_AS(reg.register_client(r), Error);

  r = make_record("c0");
  r.perf_history = {{3, 0.5}, {3, 0.4}};
  CHECK_THROWS_AS(reg.register_client(r), Error);
}

TEST_CASE("online flag and perf history maintenance") {
  ClientRegistry reg;
  reg.register_client(make_record("c0"));
  reg.set_online("c0", false);
  CHECK_FALSE(reg.get("c0").online);
  CHECK_THROWS_AS(reg.set_online("nope", true), Error);

  reg.append_perf("c0", 1, 0.9);
  reg.append_perf("c0", 2, 0.7);
  CHECK(reg.get("c0").perf_history.size() == 2);
  // Rounds must strictly increase.
  CHECK_THROWS_AS(reg.append_perf("c0", 2, 0.6), Error);
  CHECK_THROWS_AS(reg.append_perf("ghost", 3, 0.1), Error);
}

TEST_CASE("json round-trip preserves every field") {
  ClientRegistry reg;
  ClientRecord r = make_record("c0");
  r.energy_budget = 12.5;
  r.data_summary.centroid_gap = 1.75;
  r.perf_history = {{1, 0.8}, {4, 0.3}};
  r.online = false;
  reg.register_client(r);
  reg.register_client(make_record("c1"));

  const ClientRegistry back = ClientRegistry::from_json(reg.to_json());
  CHECK(back.size() == 2);
  CHECK(back.get("c0") == reg.get("c0"));
  CHECK(back.get("c1") == reg.get("c1"));
}

TEST_CASE("garbage json is a parse error") {
  try {
    ClientRegistry::from_json("{{nope");
    FAIL("expected kParse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kParse);
  }
}
