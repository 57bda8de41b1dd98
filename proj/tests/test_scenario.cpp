#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "callout/harness.hpp"
#include "callout/scenario.hpp"
#include "support.hpp"

using namespace callout;
using nlohmann::json;

TEST_CASE("benchmark generation is deterministic") {
  const BenchmarkOptions o{.seed = 3};
  CHECK(scenario_to_json(generate_benchmark(o)).dump() == scenario_to_json(generate_benchmark(o)).dump());
  BenchmarkOptions other = o;
  other.seed = 4;
  CHECK(scenario_to_json(generate_benchmark(other)).dump() != scenario_to_json(generate_benchmark(o)).dump());
}

TEST_CASE("benchmark shape") {
  for (auto kind : {DistributionKind::kGaussian, DistributionKind::kPareto}) {
    const Scenario s = generate_benchmark({.seed = 11, .kind = kind});
    CHECK(s.num_networks() == 32);
    CHECK(s.bid_tables.size() == 10);
    CHECK(s.types.size() == 100);
    CHECK(s.constraints.mode == ConstraintMode::kTokenBucket);
    CHECK(s.constraints.arrival.kind == ArrivalKind::kPoisson);
    for (const auto& n : s.networks) {
      CHECK(n.bucket_size == 5.0);
      CHECK(n.token_rate >= 5.0);
      CHECK(n.token_rate <= 50.0);
      CHECK(n.rho >= 0.015);
      CHECK(n.rho <= 0.15);
    }
    for (const auto& t : s.types) {
      CHECK(t.min_price >= 0.2);
      CHECK(t.min_price <= 1.0);
      for (const auto& d : t.bids) CHECK(d.max_value() <= 1.0);
    }
  }
  const Scenario high = generate_benchmark({.seed = 11, .min_price_lo = 0.5});
  for (const auto& t : high.types) CHECK(t.min_price >= 0.5);
}

TEST_CASE("sales bids are 0/1 with the survival at the minimum price") {
  const Scenario s = generate_benchmark({.seed = 2});
  const auto& t = s.types[17];
  for (std::size_t i = 0; i < s.num_networks(); ++i) {
    const double p = s.bid_tables[t.vertical][i].survival(t.min_price);
    CHECK(t.sale_prob[i] == p);
    CHECK(t.bids[i].survival(1.0) == doctest::Approx(p));
  }
}

TEST_CASE("vertical assignment is uniform") {
  const Scenario s = generate_benchmark({.seed = 5});
  const TypeSampler sampler(s.types);
  Rng rng(21);
  std::vector<int> counts(10, 0);
  const int draws = 10000;
  for (int k = 0; k < draws; ++k) counts[s.types[sampler(rng)].vertical]++;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - draws / 10.0) * (c - draws / 10.0) / (draws / 10.0);
  // 0.99 quantile of chi-square with 9 degrees of freedom.
  CHECK(chi2 < 21.666);
}

TEST_CASE("scenario JSON round trip") {
  for (auto kind : {DistributionKind::kGaussian, DistributionKind::kPareto}) {
    const Scenario s = generate_benchmark({.seed = 8, .kind = kind});
    const auto j = scenario_to_json(s);
    const Scenario back = scenario_from_json(j);
    CHECK(scenario_to_json(back).dump() == j.dump());
    CHECK(back.types.size() == s.types.size());
    CHECK(back.types[3].bids[2].probs() == s.types[3].bids[2].probs());
    CHECK(back.generator.has_value());
  }
  const Scenario tiny = testing::tiny_scenario({{BidDistribution::point_mass(1.0)}}, {1.0}, {0.5});
  const Scenario back = scenario_from_json(json::parse(scenario_to_json(tiny).dump()));
  CHECK(std::isinf(back.networks[0].bucket_size));
}

TEST_CASE("malformed scenarios name the field") {
  auto j = scenario_to_json(testing::tiny_scenario({{BidDistribution::point_mass(1.0)}}, {1.0}, {0.5}));
  auto expect_field = [](nlohmann::json bad, const std::string& field) {
    try {
      scenario_from_json(bad);
      FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
      CHECK(e.field() == field);
    }
  };
  auto bad = j;
  bad["networks"][0]["rho"] = 1.5;
  expect_field(bad, "networks[0].rho");
  bad = j;
  bad["objective"] = "profit";
  expect_field(bad, "objective");
  bad = j;
  bad.erase("slots");
  expect_field(bad, "slots");
  bad = j;
  bad["types"][0]["arrival_prob"] = 0.5;
  expect_field(bad, "types");
  bad = j;
  bad["schema_version"] = 99;
  expect_field(bad, "schema_version");
  bad = j;
  bad["bid_tables"][0][0]["probs"] = {0.4};
  expect_field(bad, "bid_tables[0][0]");
}

TEST_CASE("duals JSON round trip") {
  DualSolution d;
  d.mode = LpMode::kPosted;
  d.lambda = {0.1, 0.25};
  d.tau = {{0.3, 0.1}, {0.0, 0.0}};
  d.observed = {true, false};
  d.objective = 1.25;
  d.method = "direct";
  const DualSolution back = duals_from_json(duals_to_json(d));
  CHECK(back.mode == d.mode);
  CHECK(back.lambda == d.lambda);
  CHECK(back.tau == d.tau);
  CHECK(back.observed == d.observed);
  CHECK(back.objective == d.objective);
}
