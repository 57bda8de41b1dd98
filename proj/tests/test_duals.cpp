#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>

#include "callout/duals.hpp"

using namespace callout;

namespace {

ImpressionType make_type(int id, double q, std::vector<BidDistribution> bids) {
  ImpressionType t;
  t.id = id;
  t.vertical = id;
  t.arrival_prob = q;
  t.bids = std::move(bids);
  return t;
}

struct OracleCase {
  std::vector<ImpressionType> types;
  std::vector<double> rho;
  SlotProfile slots;
  double value_opt;
  double posted_opt;
};

std::vector<OracleCase> load_oracle_cases() {
  std::ifstream in(std::string(CALLOUT_TEST_DATA_DIR) + "/lp_oracle_cases.json");
  REQUIRE(in.good());
  const auto doc = nlohmann::json::parse(in);
  std::vector<OracleCase> out;
  for (const auto& c : doc) {
    OracleCase oc;
    oc.slots = SlotProfile(c["slots"].get<std::vector<double>>());
    oc.rho = c["rho"].get<std::vector<double>>();
    int id = 0;
    for (const auto& t : c["types"]) {
      std::vector<BidDistribution> bids;
      for (const auto& b : t["bids"]) {
        bids.emplace_back(b["values"].get<std::vector<double>>(), b["probs"].get<std::vector<double>>());
      }
      oc.types.push_back(make_type(id++, t["q"].get<double>(), std::move(bids)));
    }
    oc.value_opt = c["value_opt"].get<double>();
    oc.posted_opt = c["posted_opt"].get<double>();
    out.push_back(std::move(oc));
  }
  return out;
}

// Random tiny instance with general-position masses.
OracleCase random_instance(std::mt19937_64& rng, std::size_t max_networks = 3, std::size_t max_slots = 3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = 1 + static_cast<std::size_t>(u(rng) * max_networks);
  const std::size_t types = 1 + static_cast<std::size_t>(u(rng) * 3);
  const std::size_t m = 1 + static_cast<std::size_t>(u(rng) * max_slots);
  std::vector<double> discounts{1.0};
  for (std::size_t l = 1; l < m; ++l) discounts.push_back(discounts.back() * (0.3 + 0.7 * u(rng)));
  OracleCase oc;
  oc.slots = SlotProfile(discounts);
  double qsum = 0.0;
  for (std::size_t j = 0; j < types; ++j) {
    std::vector<BidDistribution> bids;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t levels = 1 + static_cast<std::size_t>(u(rng) * 4);
      std::vector<double> values, probs;
      double v = 0.0, total = 0.0;
      for (std::size_t k = 0; k < levels; ++k) {
        v += 0.1 + u(rng);
        values.push_back(v);
        probs.push_back(0.05 + u(rng));
        total += probs.back();
      }
      for (double& p : probs) p /= total;
      bids.emplace_back(values, probs);
    }
    const double q = 0.1 + u(rng);
    qsum += q;
    oc.types.push_back(make_type(static_cast<int>(j), q, std::move(bids)));
  }
  for (auto& t : oc.types) t.arrival_prob /= qsum;
  for (std::size_t i = 0; i < n; ++i) oc.rho.push_back(0.05 + 0.9 * u(rng));
  return oc;
}

}  // namespace

TEST_CASE("single saturated network") {
  const std::vector<ImpressionType> types{make_type(0, 1.0, {BidDistribution::point_mass(1.0)})};
  const std::vector<int> samples{0};
  const std::vector<double> rho{1.0};
  const auto lp = build_sample_lp(types, samples, rho, SlotProfile({1.0}), LpMode::kValue);
  const auto duals = solve_for_duals(lp);
  CHECK(duals.objective == doctest::Approx(1.0));
  CHECK(duals.lambda[0] == doctest::Approx(0.0));
}

TEST_CASE("zero rates give a zero optimum and the minimal lambda") {
  const std::vector<ImpressionType> types{make_type(0, 1.0, {BidDistribution::point_mass(1.0)})};
  const std::vector<int> samples{0};
  const std::vector<double> rho{0.0};
  for (auto method : {SolveMethod::kDirect, SolveMethod::kDecomposed}) {
    const auto duals =
        solve_for_duals(build_sample_lp(types, samples, rho, SlotProfile({1.0}), LpMode::kValue), {.method = method});
    CHECK(duals.objective == doctest::Approx(0.0));
    CHECK(duals.lambda[0] == doctest::Approx(1.0));
    CHECK(duals.residual <= 1e-6);
  }
}

TEST_CASE("two deterministic networks share one slot") {
  const std::vector<ImpressionType> types{
      make_type(0, 1.0, {BidDistribution::point_mass(2.0), BidDistribution::point_mass(1.0)})};
  const std::vector<int> samples{0, 0, 0};
  const std::vector<double> rho{0.5, 1.0};
  for (auto method : {SolveMethod::kDirect, SolveMethod::kDecomposed}) {
    CAPTURE(static_cast<int>(method));
    const auto lp = build_sample_lp(types, samples, rho, SlotProfile({1.0}), LpMode::kValue);
    const auto duals = solve_for_duals(lp, {.method = method});
    CHECK(duals.objective == doctest::Approx(1.5));
    CHECK(duals.lambda[0] == doctest::Approx(1.0));
    CHECK(duals.lambda[1] == doctest::Approx(0.0));
    CHECK(duals.tau[0][0] == doctest::Approx(1.0));
    CHECK(duals.residual <= 1e-6);
  }
}

TEST_CASE("build_sample_lp rejects bad input") {
  const std::vector<ImpressionType> types{make_type(0, 1.0, {BidDistribution::point_mass(1.0)})};
  const std::vector<double> rho{0.5};
  const std::vector<double> bad_rho{1.5};
  const std::vector<int> none;
  const std::vector<int> one{0};
  CHECK_THROWS_AS(build_sample_lp(types, none, rho, SlotProfile({1.0}), LpMode::kValue), std::invalid_argument);
  CHECK_THROWS_AS(build_sample_lp(types, one, bad_rho, SlotProfile({1.0}), LpMode::kValue), std::invalid_argument);
}

TEST_CASE("sampled weights are empirical frequencies") {
  const std::vector<ImpressionType> types{make_type(0, 0.5, {BidDistribution::point_mass(1.0)}),
                                          make_type(1, 0.5, {BidDistribution::point_mass(2.0)})};
  const std::vector<int> samples{0, 1, 1, 1};
  const std::vector<double> rho{1.0};
  const auto lp = build_sample_lp(types, samples, rho, SlotProfile({1.0}), LpMode::kValue, 0.05);
  REQUIRE(lp.num_blocks() == 2);
  CHECK(lp.weights[0] == doctest::Approx(0.25));
  CHECK(lp.weights[1] == doctest::Approx(0.75));
  CHECK(lp.rate_limits[0] == doctest::Approx(0.95));
}

TEST_CASE("both solve routes match the independent HiGHS oracle") {
  const auto cases = load_oracle_cases();
  REQUIRE(cases.size() == 40);
  for (std::size_t c = 0; c < cases.size(); ++c) {
    CAPTURE(c);
    const auto& oc = cases[c];
    for (auto mode : {LpMode::kValue, LpMode::kPosted}) {
      const double expected = mode == LpMode::kValue ? oc.value_opt : oc.posted_opt;
      const auto lp = build_exact_lp(oc.types, oc.rho, oc.slots, mode);
      const auto direct = solve_for_duals(lp, {.method = SolveMethod::kDirect});
      const auto decomposed = solve_for_duals(lp, {.method = SolveMethod::kDecomposed});
      CHECK(std::abs(direct.objective - expected) <= 1e-6 * std::max(1.0, expected));
      CHECK(std::abs(decomposed.objective - expected) <= 1e-6 * std::max(1.0, expected));
      CHECK(direct.residual <= 1e-6);
      CHECK(decomposed.residual <= 1e-6);
    }
  }
}

TEST_CASE("duals satisfy the slot-ratio monotonicity on random instances") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const auto oc = random_instance(rng);
    for (auto mode : {LpMode::kValue, LpMode::kPosted}) {
      for (auto method : {SolveMethod::kDirect, SolveMethod::kDecomposed}) {
        const auto duals = solve_for_duals(build_exact_lp(oc.types, oc.rho, oc.slots, mode), {.method = method});
        const auto issues = check_dual_invariants(duals, oc.slots);
        CAPTURE(trial);
        CHECK_MESSAGE(issues.empty(), (issues.empty() ? "" : issues.front()));
      }
    }
  }
}

TEST_CASE("pattern block solver matches the explicit block LP") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto oc = random_instance(rng, 5, 4);
    const auto& bids = oc.types.front().bids;
    std::vector<double> lambda;
    for (std::size_t i = 0; i < bids.size(); ++i) lambda.push_back(trial % 3 == 0 ? 0.0 : 2.0 * u(rng));
    for (auto mode : {LpMode::kValue, LpMode::kPosted}) {
      const auto fast = solve_block(bids, oc.slots, mode, lambda);
      const auto lp = solve_block_explicit(bids, oc.slots, mode, lambda);
      CAPTURE(trial);
      CHECK(fast.value == doctest::Approx(lp.value).epsilon(1e-9));
      // The pattern mixture is a feasible block point with the optimal value.
      double net = fast.gross_value;
      for (std::size_t i = 0; i < bids.size(); ++i) {
        CHECK(fast.usage[i] >= -1e-12);
        CHECK(fast.usage[i] <= 1.0 + 1e-9);
        net -= lambda[i] * fast.usage[i];
      }
      CHECK(net == doctest::Approx(lp.value).epsilon(1e-9));
      // Its slot prices certify the value through the dual objective.
      double dual = 0.0;
      for (std::size_t l = 0; l < oc.slots.size(); ++l) {
        CHECK(fast.tau[l] >= -1e-12);
        dual += fast.tau[l];
      }
      for (std::size_t i = 0; i < bids.size(); ++i) {
        const SlotFunction f(fast.tau, oc.slots);
        double gain = 0.0;
        const auto& d = bids[i];
        for (std::size_t k = 0; k < d.size(); ++k) {
          const double env = f.envelope(d.values()[k]);
          gain = mode == LpMode::kValue ? gain + d.probs()[k] * env : std::max(gain, d.survival_at(k) * env);
        }
        dual += std::max(0.0, gain - lambda[i]);
      }
      CHECK(dual == doctest::Approx(lp.value).epsilon(1e-9));
    }
  }
}

TEST_CASE("shrinking the rates by (1 - eps) costs at most that factor") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto oc = random_instance(rng);
    const auto full = solve_for_duals(build_exact_lp(oc.types, oc.rho, oc.slots, LpMode::kValue));
    for (double eps : {0.05, 0.2, 0.5}) {
      const auto shrunk = solve_for_duals(build_exact_lp(oc.types, oc.rho, oc.slots, LpMode::kValue, eps));
      CHECK(shrunk.objective >= (1.0 - eps) * full.objective - 1e-6);
      CHECK(shrunk.objective <= full.objective + 1e-9);
    }
  }
}

TEST_CASE("slot function examples") {
  const SlotProfile one({1.0});
  const SlotFunction trivial({0.0}, one);
  CHECK(trivial.slot_at(0.3) == 0);
  CHECK(trivial.slot_at(0.0) == 1);  // virtual slot

  const SlotProfile two({1.0, 0.5});
  const SlotFunction f({0.6, 0.2}, two);
  CHECK(f.slot_at(1.0) == 0);
  CHECK(f.slot_at(0.5) == 1);
  CHECK(f.slot_at(0.1) == 2);
  CHECK(f.envelope(1.0) == doctest::Approx(0.4));

  const auto pieces = f.pieces(2.0);
  REQUIRE(pieces.size() == 3);
  CHECK(pieces[0].slot == 2);
  CHECK(pieces[0].hi == doctest::Approx(0.4));
  CHECK(pieces[1].slot == 1);
  CHECK(pieces[1].hi == doctest::Approx(0.8));
  CHECK(pieces[2].slot == 0);
}

TEST_CASE("slot ties go to the better slot") {
  const SlotProfile equal({1.0, 1.0});
  const SlotFunction f({0.2, 0.2}, equal);
  CHECK(f.slot_at(1.0) == 0);
}

TEST_CASE("envelope winner moves to better slots as the bid grows") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = 1 + static_cast<std::size_t>(u(rng) * 4);
    std::vector<double> discounts{1.0};
    for (std::size_t l = 1; l < m; ++l) discounts.push_back(discounts.back() * (0.2 + 0.8 * u(rng)));
    // tau / discount non-increasing.
    std::vector<double> tau(m);
    double ratio = 2.0 * u(rng);
    for (std::size_t l = 0; l < m; ++l) {
      tau[l] = ratio * discounts[l];
      ratio *= u(rng);
    }
    const SlotFunction f(tau, SlotProfile(discounts));
    std::size_t previous = f.virtual_slot();
    for (int k = 0; k <= 400; ++k) {
      const std::size_t slot = f.slot_at(k * 0.01);
      CHECK(slot <= previous);
      previous = slot;
    }
    // Virtual slot exactly when every line is non-positive.
    for (int k = 0; k <= 100; ++k) {
      const double v = k * 0.04;
      bool all_nonpositive = true;
      for (std::size_t l = 0; l < m; ++l) all_nonpositive &= discounts[l] * v <= tau[l];
      CHECK((f.slot_at(v) == f.virtual_slot()) == all_nonpositive);
    }
  }
}

TEST_CASE("v1 threshold") {
  const std::vector<double> tau2{0.6, 0.2};
  CHECK(v1_threshold(tau2, SlotProfile({1.0, 0.5})) == doctest::Approx(0.8));
  const std::vector<double> tau1{0.6};
  CHECK(v1_threshold(tau1, SlotProfile({1.0})) == doctest::Approx(0.6));
  const std::vector<double> zeros{0.0, 0.0};
  CHECK(v1_threshold(zeros, SlotProfile({1.0, 0.5})) == doctest::Approx(0.0));
}

TEST_CASE("v1 is where slot 1 starts winning") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + static_cast<std::size_t>(u(rng) * 3);
    std::vector<double> discounts{1.0};
    for (std::size_t l = 1; l < m; ++l) discounts.push_back(discounts.back() * (0.2 + 0.7 * u(rng)));
    std::vector<double> tau(m);
    double ratio = 1.5 * u(rng);
    for (std::size_t l = 0; l < m; ++l) {
      tau[l] = ratio * discounts[l];
      ratio *= u(rng);
    }
    const SlotProfile slots(discounts);
    const double v1 = v1_threshold(tau, slots);
    const SlotFunction f(tau, slots);
    CHECK(f.slot_at(v1 + 1e-6) == 0);
    if (v1 > 1e-6) CHECK(f.slot_at(v1 - 1e-6) != 0);
  }
}

TEST_CASE("unobserved types borrow their vertical's average tau") {
  DualSolution d;
  d.tau = {{0.2}, {0.4}, {0.0}, {0.0}};
  d.observed = {true, true, false, false};
  std::vector<ImpressionType> types(4);
  types[0].vertical = 0;
  types[1].vertical = 0;
  types[2].vertical = 0;
  types[3].vertical = 7;
  fill_unobserved_types(d, types);
  CHECK(d.tau[2][0] == doctest::Approx(0.3));
  CHECK(d.tau[3][0] == doctest::Approx(0.3));
}

TEST_CASE("invariant checker names a non-monotone tau") {
  DualSolution d;
  d.lambda = {0.0};
  d.tau = {{0.2, 0.5}};
  d.observed = {true};
  const auto issues = check_dual_invariants(d, SlotProfile({1.0, 0.5}));
  REQUIRE(issues.size() == 1);
  CHECK(issues.front().find("tau-ratio-monotone") == 0);
}
