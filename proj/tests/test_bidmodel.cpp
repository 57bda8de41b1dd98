#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "callout/bidmodel.hpp"

using namespace callout;

TEST_CASE("survival sums mass at or above the query") {
  const BidDistribution d({1.0, 2.0}, {0.3, 0.7});
  CHECK(d.survival(1.0) == doctest::Approx(1.0));
  CHECK(d.survival(2.0) == doctest::Approx(0.7));
  CHECK(d.survival(1.5) == doctest::Approx(0.7));
  CHECK(d.survival(0.0) == doctest::Approx(1.0));
  CHECK(d.survival(2.5) == 0.0);
}

TEST_CASE("mhr detection follows the discrete hazard") {
  CHECK(is_mhr(BidDistribution({1, 2, 3}, {0.5, 0.25, 0.25})));
  CHECK(is_mhr(BidDistribution::point_mass(5.0)));
  CHECK_FALSE(is_mhr(BidDistribution({1, 2, 3}, {0.5, 0.1, 0.4})));
  // Constant hazard 1/2 up to the last level.
  CHECK(is_mhr(BidDistribution({1, 2, 3, 4}, {0.5, 0.25, 0.125, 0.125})));
}

TEST_CASE("invalid distributions are rejected") {
  CHECK_THROWS_AS(BidDistribution({1.0, 1.0}, {0.5, 0.5}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(BidDistribution({1.0, 2.0}, {0.5, 0.6}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(BidDistribution({1.0, 2.0}, {-0.1, 1.1}).validate(), std::invalid_argument);
  CHECK_THROWS_AS(BidDistribution({1.0}, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(BidDistribution({1.0, 3.0}, {0.5, 0.5}).validate(2.0), std::invalid_argument);
}

TEST_CASE("zero-variance gaussian collapses to a point mass") {
  Rng rng(3);
  const auto d = generate_benchmark_distribution(DistributionKind::kGaussian, 1.0, rng, {.bins = 100, .forced_std = 0.0});
  REQUIRE(d.size() == 1);
  CHECK(d.probs()[0] == 1.0);
  CHECK(d.values()[0] <= 0.5 + 0.005);
}

TEST_CASE("generated distributions satisfy the invariants") {
  for (auto kind : {DistributionKind::kGaussian, DistributionKind::kPareto}) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
      Rng rng(seed);
      const auto d = generate_benchmark_distribution(kind, 2.0, rng);
      CHECK_NOTHROW(d.validate(2.0));
      const double total = std::accumulate(d.probs().begin(), d.probs().end(), 0.0);
      CHECK(std::abs(total - 1.0) <= 1e-9);
      CHECK(d.survival(0.0) == doctest::Approx(1.0));
      for (std::size_t k = 1; k < d.size(); ++k) CHECK(d.survival_at(k) <= d.survival_at(k - 1) + 1e-15);
    }
  }
}

TEST_CASE("generator is deterministic under a fixed seed") {
  Rng a(42), b(42);
  const auto da = generate_benchmark_distribution(DistributionKind::kPareto, 1.0, a);
  const auto db = generate_benchmark_distribution(DistributionKind::kPareto, 1.0, b);
  CHECK(da.values() == db.values());
  CHECK(da.probs() == db.probs());
}

TEST_CASE("generated means stay below half the scale") {
  // Truncation can only lower the mean of a distribution centred below R/2.
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const auto d = generate_benchmark_distribution(DistributionKind::kGaussian, 1.0, rng);
    CHECK(d.mean() <= 0.5 + 0.01);
  }
}

TEST_CASE("perturbation") {
  const BidDistribution d({1.0, 2.0}, {0.5, 0.5});
  Rng rng(1);
  const auto same = perturb_general_position(d, 0.0, rng);
  CHECK(same.probs() == d.probs());

  const auto p = perturb_general_position(d, 1e-9, rng);
  CHECK(std::abs(p.probs()[0] - 0.5) <= 2e-9);
  CHECK(std::abs(p.probs()[1] - 0.5) <= 2e-9);
  CHECK(std::abs(p.probs()[0] + p.probs()[1] - 1.0) <= 1e-15);

  Rng r1(10), r2(11);
  const auto p1 = perturb_general_position(d, 1e-9, r1);
  const auto p2 = perturb_general_position(d, 1e-9, r2);
  CHECK(p1.probs() != p2.probs());

  CHECK_THROWS_AS(perturb_general_position(d, 1e-3, rng), std::invalid_argument);
}

TEST_CASE("perturbation moves at most |support| * epsilon in total variation") {
  Rng gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto d = generate_benchmark_distribution(DistributionKind::kGaussian, 1.0, gen);
    const double eps = 1e-7;
    const auto p = perturb_general_position(d, eps, gen);
    double tv = 0.0;
    for (std::size_t k = 0; k < d.size(); ++k) tv += std::abs(d.probs()[k] - p.probs()[k]);
    CHECK(0.5 * tv <= d.size() * eps);
  }
}

TEST_CASE("slot profile invariants") {
  CHECK_NOTHROW(SlotProfile({1.0, 0.5, 0.5, 0.0}));
  CHECK_THROWS(SlotProfile(std::vector<double>{}));
  CHECK_THROWS(SlotProfile({0.5, 0.7}));
  CHECK_THROWS(SlotProfile({1.2}));
  const SlotProfile s({1.0, 0.5});
  CHECK(s.discount(2) == 0.0);
}

TEST_CASE("inverse-cdf sampling reproduces the masses") {
  const BidDistribution d({1.0, 2.0, 3.0}, {0.2, 0.5, 0.3});
  Rng rng(9);
  std::array<int, 3> counts{};
  const int trials = 200000;
  for (int t = 0; t < trials; ++t) counts[static_cast<int>(d.sample(rng)) - 1]++;
  for (int k = 0; k < 3; ++k) {
    const double p = d.probs()[k];
    const double se = std::sqrt(p * (1 - p) / trials);
    CHECK(std::abs(counts[k] / double(trials) - p) <= 4 * se);
  }
}
