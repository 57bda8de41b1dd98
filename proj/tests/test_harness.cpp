#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "callout/harness.hpp"
#include "support.hpp"

using namespace callout;
using callout::testing::tiny_scenario;

TEST_CASE("saturated instance") {
  const Scenario s = tiny_scenario({{BidDistribution::point_mass(1.0)}}, {1.0}, {1.0});
  CHECK(compute_opt_ub(s) == doctest::Approx(1.0));
  CHECK(brute_force_policy_value(s) == doctest::Approx(1.0));
  SimOptions o;
  o.policy.kind = PolicyKind::kLpVal;
  o.replications = 3;
  const auto r = run_two_phase(s, o);
  CHECK(r.metric_summary().mean == doctest::Approx(1.0));
  CHECK(r.runs[0].lp_objective == doctest::Approx(1.0));
}

TEST_CASE("two deterministic networks") {
  const Scenario s =
      tiny_scenario({{BidDistribution::point_mass(2.0), BidDistribution::point_mass(1.0)}}, {1.0}, {0.5, 1.0});
  CHECK(compute_opt_ub(s) == doctest::Approx(1.5));
  CHECK(brute_force_policy_value(s) == doctest::Approx(1.5));
  SimOptions o;
  o.policy.kind = PolicyKind::kLpVal;
  o.exploit = 20000;
  o.replications = 4;
  const auto r = run_two_phase(s, o);
  const auto m = r.metric_summary();
  CHECK(std::abs(m.mean - 1.5) <= 3 * m.stddev + 1e-3);
}

TEST_CASE("baselines ignore the exploration length") {
  const Scenario s = generate_benchmark({.seed = 9, .networks = 8, .verticals = 3, .price_levels = 2});
  SimOptions a;
  a.policy = {.kind = PolicyKind::kMaxProb, .k = 2};
  a.replications = 2;
  SimOptions b = a;
  a.explore = 0;
  b.explore = 500;
  CHECK(replications_csv({run_two_phase(s, a)}) == replications_csv({run_two_phase(s, b)}));
}

TEST_CASE("matched seeds give identical reports, also across threads") {
  const Scenario s = generate_benchmark({.seed = 9, .networks = 8, .verticals = 3, .price_levels = 2});
  SimOptions o;
  o.policy = {.kind = PolicyKind::kThLp, .threshold = 1.0};
  o.replications = 3;
  const auto first = replications_csv({run_two_phase(s, o)});
  o.threads = 3;
  CHECK(replications_csv({run_two_phase(s, o)}) == first);
  o.seed = 2;
  CHECK(replications_csv({run_two_phase(s, o)}) != first);
}

TEST_CASE("ledger mode respects the rates exactly") {
  Rng gen(4);
  std::vector<BidDistribution> row;
  for (int i = 0; i < 4; ++i) row.push_back(generate_benchmark_distribution(DistributionKind::kGaussian, 1.0, gen, {.bins = 4}));
  const Scenario s = tiny_scenario({row}, {1.0}, {0.1, 0.2, 0.3, 0.05});
  for (auto kind : {PolicyKind::kLpVal, PolicyKind::kMaxProb, PolicyKind::kThProb, PolicyKind::kRandom}) {
    SimOptions o;
    o.policy = {.kind = kind, .k = 4, .threshold = 3.0};
    o.exploit = 5000;
    o.replications = 2;
    const auto r = run_two_phase(s, o);
    for (const auto& run : r.runs) {
      for (std::size_t i = 0; i < 4; ++i) CHECK(run.callout_rate[i] <= s.networks[i].rho + 1.0 / o.exploit);
    }
  }
}

TEST_CASE("token buckets stay within bounds") {
  const Scenario s = generate_benchmark({.seed = 1, .networks = 6, .verticals = 2, .price_levels = 2});
  SimOptions o;
  o.policy = {.kind = PolicyKind::kMaxProb, .k = 6};
  o.replications = 2;
  o.track_buckets = true;
  const auto r = run_two_phase(s, o);
  for (const auto& run : r.runs) {
    CHECK(run.bucket_bounds_ok);
    for (std::size_t i = 0; i < 6; ++i) {
      // Long-run grants cannot beat the refill rate plus the initial burst.
      CHECK(run.callout_rate[i] <= s.networks[i].rho * 1.3 + 5.0 / o.exploit);
    }
  }
}

TEST_CASE("brute force never exceeds the relaxation") {
  Rng gen(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<BidDistribution>> tables;
    for (int j = 0; j < 2; ++j) {
      std::vector<BidDistribution> row;
      for (int i = 0; i < 3; ++i) row.push_back(generate_benchmark_distribution(DistributionKind::kPareto, 1.0, gen, {.bins = 3}));
      tables.push_back(row);
    }
    const Scenario s = tiny_scenario(tables, {0.4, 0.6}, {u(gen), u(gen), u(gen)}, {1.0, 0.5});
    CHECK(brute_force_policy_value(s) <= compute_opt_ub(s) + 1e-9);
    Scenario posted = s;
    posted.objective = Objective::kPosted;
    posted.finalize();
    CHECK(brute_force_policy_value(posted) <= compute_opt_ub(posted) + 1e-9);
  }
}

TEST_CASE("brute force rejects large instances") {
  std::vector<BidDistribution> row(4, BidDistribution::point_mass(1.0));
  const Scenario s = tiny_scenario({row}, {1.0}, {0.5, 0.5, 0.5, 0.5});
  CHECK_THROWS_AS(brute_force_policy_value(s), std::invalid_argument);
}

TEST_CASE("sweep grids") {
  CHECK(default_set_grid() == std::vector<int>{1, 2, 4, 8, 16, 32});
  CHECK(default_threshold_grid() == std::vector<double>{0.5, 1.0, 1.5, 2.0, 2.5, 3.0});
  CHECK(default_bucket_grid() == std::vector<double>{2, 5, 15, 45});

  const Scenario s = generate_benchmark({.seed = 3, .networks = 4, .verticals = 2, .price_levels = 2});
  SimOptions o;
  o.replications = 2;
  o.exploit = 300;
  const auto set = sweep(s, SweepFamily::kSet, o, {1, 2});
  CHECK(set.reports.size() == 8);
  CHECK(set.peaks.size() == 4);
  const auto bucket = sweep(s, SweepFamily::kBucket, o, {}, {{.kind = PolicyKind::kThLp, .threshold = 1.0}});
  CHECK(bucket.reports.size() == 4);
  CHECK(bucket.reports[3].parameter == 45.0);
}

TEST_CASE("csv formatting") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.333333333");
  CHECK(format_number(12345678.9) == "12345678.9");
}

TEST_CASE("summaries") {
  const auto s = summarize({1.0, 2.0, 3.0});
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.stddev == doctest::Approx(1.0));
  CHECK(s.half_width == doctest::Approx(1.96 / std::sqrt(3.0)));
}
