#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "callout/mechanisms.hpp"

using namespace callout;

namespace {

std::vector<RealizedBid> bids_of(std::initializer_list<double> values) {
  std::vector<RealizedBid> out;
  int id = 0;
  for (double v : values) out.push_back({id++, v});
  return out;
}

}  // namespace

TEST_CASE("value auction fills slots in bid order") {
  const SlotProfile slots({1.0, 0.5});
  const auto out = run_value_auction(bids_of({1, 3, 2}), slots);
  CHECK(out.welfare == doctest::Approx(4.0));
  CHECK(out.revenue == 0.0);
  REQUIRE(out.awards.size() == 2);
  CHECK(out.awards[0].network == 1);
  CHECK(out.awards[1].network == 2);

  CHECK(run_value_auction({}, slots).welfare == 0.0);
  CHECK(run_value_auction(bids_of({0.7}), SlotProfile({1.0})).welfare == doctest::Approx(0.7));
}

TEST_CASE("gsp charges the next bid") {
  const auto out = run_gsp(bids_of({3, 2, 1}), SlotProfile({1.0, 0.5}));
  REQUIRE(out.awards.size() == 2);
  CHECK(out.awards[0].payment == doctest::Approx(2.0));
  CHECK(out.awards[1].payment == doctest::Approx(0.5));
  CHECK(out.revenue == doctest::Approx(2.5));

  CHECK(run_gsp(bids_of({4}), SlotProfile({1.0})).revenue == 0.0);
  const auto tie = run_gsp(bids_of({2, 2}), SlotProfile({1.0}));
  CHECK(tie.revenue == doctest::Approx(2.0));
  CHECK(tie.awards[0].network == 0);
}

TEST_CASE("reserve auction") {
  const SlotProfile slots({0.8});
  const auto a = run_reserve_auction(bids_of({3, 1}), 2.0, slots);
  CHECK(a.sold);
  CHECK(a.revenue == doctest::Approx(0.8 * 2.0));

  const auto b = run_reserve_auction(bids_of({1, 1}), 2.0, slots);
  CHECK_FALSE(b.sold);
  CHECK(b.revenue == 0.0);

  const auto c = run_reserve_auction(bids_of({3, 2.5}), 2.0, SlotProfile({1.0}));
  CHECK(c.revenue == doctest::Approx(2.5));
}

TEST_CASE("posted prices") {
  const SlotProfile one({1.0});
  const std::vector<PriceOffer> single{{0, 2.0, 0}};
  CHECK(run_posted(single, bids_of({3}), one).revenue == doctest::Approx(2.0));
  CHECK(run_posted(single, bids_of({1}), one).revenue == 0.0);

  const std::vector<PriceOffer> two{{0, 2.0, 0}, {1, 3.0, 0}};
  const auto out = run_posted(two, bids_of({5, 5}), one);
  CHECK(out.revenue == doctest::Approx(3.0));
  REQUIRE(out.awards.size() == 1);
  CHECK(out.awards[0].network == 1);
}

TEST_CASE("payments never exceed discounted bids") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const SlotProfile slots({1.0, 0.6, 0.3});
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<RealizedBid> bids;
    const int n = 1 + static_cast<int>(u(rng) * 6);
    for (int i = 0; i < n; ++i) bids.push_back({i, std::floor(u(rng) * 5) / 4});
    const auto value = run_value_auction(bids, slots);
    const auto gsp = run_gsp(bids, slots);
    CHECK(gsp.revenue <= value.welfare + 1e-12);
    for (const auto& a : gsp.awards) CHECK(a.payment <= a.bid * slots.discount(a.slot) + 1e-12);
    const auto res = run_reserve_auction(bids, u(rng), slots);
    for (const auto& a : res.awards) CHECK(a.payment <= a.bid * slots.discount(0) + 1e-12);
  }
}

TEST_CASE("stop process closed form") {
  const std::vector<std::pair<double, double>> one{{0.4, 0.7}};
  CHECK(stop_process_expectation(one) == doctest::Approx(0.4));
  const std::vector<std::pair<double, double>> certain{{0.5, 1.0}, {0.2, 0.5}};
  CHECK(stop_process_expectation(certain) == doctest::Approx(0.5));
  const std::vector<std::pair<double, double>> two{{0.5, 0.5}, {0.5, 0.5}};
  CHECK(stop_process_expectation(two) == doctest::Approx(0.75));
  const std::vector<std::pair<double, double>> bad{{0.1, 0.5}, {0.5, 0.5}};
  CHECK_THROWS_AS(stop_process_expectation(bad), std::invalid_argument);
}

TEST_CASE("stop process matches simulation") {
  // Element i contributes w_i / u_i when it stops the process, which happens w.p. u_i.
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int inst = 0; inst < 5; ++inst) {
    std::vector<std::pair<double, double>> pairs;
    for (int k = 0; k < 4; ++k) {
      const double uk = 0.05 + 0.2 * u(rng);
      pairs.push_back({uk * u(rng) * 3, uk});
    }
    order_by_ratio(pairs);
    const double exact = stop_process_expectation(pairs);
    const int trials = 100000;
    double sum = 0.0, sq = 0.0;
    for (int t = 0; t < trials; ++t) {
      double y = 0.0;
      for (const auto& [w, uk] : pairs) {
        if (u(rng) < uk) {
          y = w / uk;
          break;
        }
      }
      sum += y;
      sq += y * y;
    }
    const double mean = sum / trials;
    const double se = std::sqrt((sq / trials - mean * mean) / trials);
    CHECK(std::abs(mean - exact) <= 3 * se + 1e-12);
  }
}

TEST_CASE("lpmax bound") {
  const std::vector<BidDistribution> d{BidDistribution({0.0, 2.0}, {0.4, 0.6}), BidDistribution({0.0, 1.0}, {0.2, 0.8})};
  CHECK(lpmax_bound(d) == doctest::Approx(1.6));
  const std::vector<BidDistribution> point{BidDistribution::point_mass(1.7)};
  CHECK(lpmax_bound(point) == doctest::Approx(1.7));
  const std::vector<BidDistribution> thin{BidDistribution({0.0, 3.0}, {0.8, 0.2})};
  CHECK(lpmax_bound(thin) == doctest::Approx(0.6));
}

TEST_CASE("lpmax bound dominates the expected maximum") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int inst = 0; inst < 20; ++inst) {
    std::vector<BidDistribution> dists;
    for (int i = 0; i < 3; ++i) {
      std::vector<double> p{u(rng), u(rng), u(rng)};
      const double s = p[0] + p[1] + p[2];
      for (double& x : p) x /= s;
      dists.emplace_back(std::vector<double>{0.25, 0.5, 1.0}, p);
    }
    const double bound = lpmax_bound(dists);
    double sum = 0.0, sq = 0.0;
    const int trials = 20000;
    for (int t = 0; t < trials; ++t) {
      double m = 0.0;
      for (const auto& d : dists) m = std::max(m, d.sample(rng));
      sum += m;
      sq += m * m;
    }
    const double mean = sum / trials;
    const double se = std::sqrt((sq / trials - mean * mean) / trials);
    CHECK(mean <= bound + 3 * se);
  }
}

TEST_CASE("sales probability") {
  const std::vector<double> one{1.0};
  auto s = sales_probability(one, one);
  CHECK(s.exact == doctest::Approx(1.0));
  CHECK(s.lower == doctest::Approx(1.0 - std::exp(-1.0)));
  CHECK(s.upper == doctest::Approx(1.0));

  const std::vector<double> half{0.5, 0.5}, ones{1.0, 1.0}, zeros{0.0, 0.0};
  s = sales_probability(half, ones);
  CHECK(s.exact == doctest::Approx(0.75));
  CHECK(s.mass == doctest::Approx(1.0));
  CHECK(sales_probability(half, zeros).exact == 0.0);

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> p(1 + trial % 8), x(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
      p[i] = u(rng);
      x[i] = u(rng);
    }
    s = sales_probability(p, x);
    CHECK(s.exact >= s.lower - 1e-12);
    CHECK(s.exact <= s.upper + 1e-12);
  }
}
