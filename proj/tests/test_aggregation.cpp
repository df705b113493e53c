#include <doctest.h>

#include <cmath>
#include <vector>

#include "fedsim/aggregation.hpp"

using namespace fedsim;

namespace {

ModelUpdate update(const std::string& id, std::vector<double> params,
                   std::size_t n, int origin = 0) {
  ModelUpdate u;
  u.client_id = id;
  u.params = ParamVector(std::move(params));
  u.n_samples = n;
  u.origin_round = origin;
  return u;
}

}  // namespace

TEST_CASE("fedavg computes the sample-weighted mean") {
  const ParamVector out =
      fedavg({update("a", {0.0, 2.0}, 1), update("b", {3.0, 5.0}, 3)});
  CHECK(out.values[0] == doctest::Approx(2.25));
  CHECK(out.values[1] == doctest::Approx(4.25));
}

TEST_CASE("fedavg result version is one past the newest origin") {
  const ParamVector out = fedavg({update("a", {1.0}, 1, 4),
                                  update("b", {1.0}, 1, 6),
                                  update("c", {1.0}, 1, 5)});
  CHECK(out.version == 7);
}

TEST_CASE("fedavg is invariant to input permutation, bit for bit") {
  std::vector<ModelUpdate> updates;
  for (int i = 0; i < 7; ++i) {
    updates.push_back(update("c" + std::to_string(i),
                             {0.1 * i, 1.0 / (i + 1), std::sqrt(i + 1.0)},
                             static_cast<std::size_t>(i + 1)));
  }
  const ParamVector forward = fedavg(updates);
  std::reverse(updates.begin(), updates.end());
  const ParamVector reversed = fedavg(updates);
  CHECK(forward.values == reversed.values);
}

TEST_CASE("a single update passes through unchanged") {
  const ParamVector out = fedavg({update("solo", {0.25, -1.5}, 10, 2)});
  CHECK(out.values == std::vector<double>{0.25, -1.5});
  CHECK(out.version == 3);
}

TEST_CASE("fedavg rejects malformed input") {
  CHECK_THROWS_AS(fedavg({}), Error);
  CHECK_THROWS_AS(fedavg({update("a", {1.0}, 1), update("b", {1.0, 2.0}, 1)}),
                  Error);
  CHECK_THROWS_AS(fedavg({update("a", {1.0}, 0)}), Error);
  CHECK_THROWS_AS(fedavg({update("a", {std::nan("")}, 1)}), Error);
}

TEST_CASE("staleness weight decays from 1 and stays positive") {
  StalenessPolicy inverse{DecayKind::kInverse, 1.0};
  CHECK(inverse.weight(0) == 1.0);
  CHECK(inverse.weight(1) == doctest::Approx(0.5));
  CHECK(inverse.weight(2) == doctest::Approx(1.0 / 3.0));

  StalenessPolicy exp{DecayKind::kExponential, 0.5};
  CHECK(exp.weight(0) == 1.0);
  CHECK(exp.weight(2) == doctest::Approx(std::exp(-1.0)));

  for (const StalenessPolicy& p : {inverse, exp}) {
    double prev = p.weight(0);
    for (int tau = 1; tau <= 30; ++tau) {
      const double w = p.weight(tau);
      CHECK(w < prev);
      CHECK(w > 0.0);
      prev = w;
    }
  }

  CHECK_THROWS_AS(inverse.weight(-1), Error);
  CHECK_THROWS_AS((StalenessPolicy{DecayKind::kInverse, 0.0}).weight(1), Error);
}

TEST_CASE("decay kind names round-trip") {
  CHECK(decay_kind_from_name(decay_kind_name(DecayKind::kInverse)) ==
        DecayKind::kInverse);
  CHECK(decay_kind_from_name(decay_kind_name(DecayKind::kExponential)) ==
        DecayKind::kExponential);
  CHECK_THROWS_AS(decay_kind_from_name("linear"), Error);
}

TEST_CASE("async_aggregate blends by staleness-scaled mix") {
  const ParamVector global({0.0, 0.0});
  const StalenessPolicy policy{DecayKind::kInverse, 1.0};

  // Fresh update, mix 0.5: alpha = 0.5.
  ParamVector out = async_aggregate(global, update("a", {1.0, 2.0}, 1, 5), 5,
                                    policy, 0.5);
  CHECK(out.values == std::vector<double>{0.5, 1.0});
  CHECK(out.version == 6);

  // Two rounds stale: alpha = 0.5 * 1/3.
  out = async_aggregate(global, update("a", {1.0, 2.0}, 1, 3), 5, policy, 0.5);
  CHECK(out.values[0] == doctest::Approx(0.5 / 3.0));

  // alpha = 1 replaces the global outright.
  out = async_aggregate(global, update("a", {7.0, -7.0}, 1, 5), 5, policy, 1.0);
  CHECK(out.values == std::vector<double>{7.0, -7.0});
}

TEST_CASE("async_aggregate rejects future updates and bad mix") {
  const ParamVector global({0.0});
  const StalenessPolicy policy{DecayKind::kInverse, 1.0};
  try {
    async_aggregate(global, update("a", {1.0}, 1, 6), 5, policy, 0.5);
    FAIL("expected kCausality");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kCausality);
  }
  CHECK_THROWS_AS(
      async_aggregate(global, update("a", {1.0}, 1, 5), 5, policy, 0.0), Error);
  CHECK_THROWS_AS(
      async_aggregate(global, update("a", {1.0}, 1, 5), 5, policy, 1.5), Error);
  CHECK_THROWS_AS(
      async_aggregate(global, update("a", {1.0, 2.0}, 1, 5), 5, policy, 0.5),
      Error);
}
