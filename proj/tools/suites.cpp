#include "suites.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "callout/harness.hpp"
#include "callout/mechanisms.hpp"
#include "callout/policies.hpp"

namespace callout::cli {

namespace {

using Failures = std::vector<std::string>;

const double kStopFactor = 1.0 - std::exp(-1.0);

std::string fmt(const std::string& what, double got, double want) {
  std::ostringstream out;
  out.precision(9);
  out << what << ": got " << got << ", bound " << want;
  return out.str();
}

std::vector<std::pair<double, double>> random_pairs(Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int len = std::uniform_int_distribution<int>(1, 10)(rng);
  std::vector<std::pair<double, double>> pairs(len);
  double total = 0.0;
  for (auto& [w, u] : pairs) {
    w = unit(rng);
    u = unit(rng);
    total += u;
  }
  const double cap = unit(rng);
  for (auto& p : pairs) p.second *= cap / total;
  order_by_ratio(pairs);
  return pairs;
}

Failures stop_process(std::uint64_t seed) {
  Failures bad;
  Rng rng(seed);
  for (int t = 0; t < 500; ++t) {
    const auto pairs = random_pairs(rng);
    double sum_w = 0.0;
    for (const auto& p : pairs) sum_w += p.first;
    const double e = stop_process_expectation(pairs);
    if (e < kStopFactor * sum_w - 1e-12) bad.push_back(fmt("stop-process-bound: list " + std::to_string(t), e, kStopFactor * sum_w));
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 5; ++t) {
    const auto pairs = random_pairs(rng);
    const double e = stop_process_expectation(pairs);
    const int trials = 20000;
    double sum = 0.0;
    double sq = 0.0;
    for (int k = 0; k < trials; ++k) {
      double y = 0.0;
      for (const auto& [w, u] : pairs) {
        y += w;
        if (unit(rng) < u) break;
      }
      sum += y;
      sq += y * y;
    }
    const double mean = sum / trials;
    const double se = std::sqrt(std::max(sq / trials - mean * mean, 0.0) / trials);
    if (std::abs(mean - e) > 4.0 * se + 1e-12) bad.push_back(fmt("stop-process-monte-carlo", mean, e));
  }
  return bad;
}

Failures sales_bounds(std::uint64_t seed) {
  Failures bad;
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 10000; ++t) {
    const int n = std::uniform_int_distribution<int>(1, 32)(rng);
    std::vector<double> p(n);
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) {
      p[i] = unit(rng);
      x[i] = unit(rng);
    }
    const SalesProbability s = sales_probability(p, x);
    if (s.exact < s.lower - 1e-12 || s.exact > s.upper + 1e-12) {
      bad.push_back(fmt("sales-bounds: vector " + std::to_string(t), s.exact, s.lower));
    }
  }
  return bad;
}

Failures mhr(std::uint64_t seed) {
  Failures bad;
  Rng rng(seed);
  int checked = 0;
  for (int k = 0; k < 200; ++k) {
    const auto d = generate_benchmark_distribution(DistributionKind::kGaussian, 1.0, rng);
    if (!is_mhr(d)) continue;
    ++checked;
    const double s = d.survival(mhr_reserve(d));
    if (s < std::exp(-2.0)) bad.push_back(fmt("mhr-acceptance: distribution " + std::to_string(k), s, std::exp(-2.0)));
  }
  if (checked < 50) bad.push_back(fmt("mhr-corpus-size", checked, 50));
  return bad;
}

Failures duals(std::uint64_t seed) {
  Failures bad;
  Rng rng(seed);
  for (int t = 0; t < 40; ++t) {
    TinyOptions opts;
    opts.objective = t % 2 == 0 ? Objective::kValue : Objective::kPosted;
    const Scenario s = random_tiny_scenario(rng, opts);
    const SampleLp lp = build_exact_lp(s.types, s.rho(), s.slots, lp_mode_for(s.objective));
    const DualSolution direct = solve_for_duals(lp, {SolveMethod::kDirect});
    const DualSolution split = solve_for_duals(lp, {SolveMethod::kDecomposed});
    const std::string tag = " (instance " + std::to_string(t) + ")";
    for (const auto& issue : check_dual_invariants(direct, s.slots)) bad.push_back(issue + tag);
    for (const auto& issue : check_dual_invariants(split, s.slots)) bad.push_back(issue + " decomposed" + tag);
    if (std::abs(direct.objective - split.objective) > 1e-6 * std::max(1.0, std::abs(direct.objective))) {
      bad.push_back(fmt("direct-vs-decomposed" + tag, split.objective, direct.objective));
    }
  }
  return bad;
}

Failures mechanisms(std::uint64_t seed) {
  Failures bad;
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 2000; ++t) {
    const int n = std::uniform_int_distribution<int>(1, 6)(rng);
    std::vector<RealizedBid> bids;
    for (int i = 0; i < n; ++i) bids.push_back({i, std::round(unit(rng) * 20.0) / 20.0});
    const SlotProfile slots(t % 2 == 0 ? std::vector<double>{1.0} : std::vector<double>{1.0, 0.6, 0.3});
    const AuctionOutcome gsp = run_gsp(bids, slots);
    for (const auto& a : gsp.awards) {
      if (a.payment > slots.discount(a.slot) * a.bid + 1e-12) bad.push_back(fmt("gsp-payment-at-most-bid", a.payment, a.bid));
    }
    if (gsp.revenue > gsp.welfare + 1e-12) bad.push_back(fmt("gsp-revenue-at-most-welfare", gsp.revenue, gsp.welfare));
    const double reserve = unit(rng);
    const AuctionOutcome res = run_reserve_auction(bids, reserve, slots);
    for (const auto& a : res.awards) {
      if (a.payment < slots.discount(0) * reserve - 1e-12 || a.bid < reserve) {
        bad.push_back(fmt("reserve-respected", a.payment, reserve));
      }
    }
  }
  return bad;
}

Failures token_bucket(std::uint64_t seed) {
  Failures bad;
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int t = 0; t < 50; ++t) {
    const double capacity = 1.0 + std::floor(unit(rng) * 10.0);
    const double rate = 0.1 + unit(rng) * 5.0;
    const ArrivalProcess arrivals{t % 2 == 0 ? ArrivalKind::kUniform : ArrivalKind::kPoisson, 0.05 + unit(rng)};
    TokenBucket bucket(capacity, rate);
    double now = 0.0;
    std::int64_t grants = 0;
    for (int k = 0; k < 2000; ++k) {
      now += arrivals.next_gap(rng);
      if (bucket.try_consume(now)) ++grants;
      if (bucket.level() < -1e-9 || bucket.level() > capacity + 1e-9) {
        bad.push_back(fmt("bucket-level-in-range", bucket.level(), capacity));
        break;
      }
    }
    const double allowed = capacity + rate * now;
    if (static_cast<double>(grants) > allowed + 1e-9) bad.push_back(fmt("bucket-grant-budget", grants, allowed));
  }
  for (int t = 0; t < 20; ++t) {
    const double rho = unit(rng);
    RateLedger ledger({rho});
    for (int k = 0; k < 1000; ++k) {
      ledger.begin_impression();
      ledger.try_consume(0);
      // A grant is allowed while granted < rho * count, so one grant may lead.
      const double limit = rho * static_cast<double>(ledger.impressions()) + 1.0;
      if (static_cast<double>(ledger.granted(0)) >= limit - 1e-12) {
        bad.push_back(fmt("ledger-rate", ledger.granted(0), limit));
        break;
      }
    }
  }
  return bad;
}

Failures policies(std::uint64_t seed) {
  Failures bad;
  Rng rng(seed);
  for (int t = 0; t < 30; ++t) {
    TinyOptions opts;
    opts.max_slots = 1;
    const Scenario s = random_tiny_scenario(rng, opts);
    const SampleLp lp = build_exact_lp(s.types, s.rho(), s.slots, LpMode::kValue);
    const DualSolution d = solve_for_duals(lp);
    const Policy val({PolicyKind::kLpVal}, s.types, s.slots, &d);
    const Policy gsp({PolicyKind::kLpGsp}, s.types, s.slots, &d);
    const CapacityState open = CapacityState::unlimited(s.num_networks());
    for (const auto& type : s.types) {
      Rng a(seed + t);
      Rng b(seed + t);
      const CallOutDecision dv = val.decide(type.id, open, a);
      const CallOutDecision dg = gsp.decide(type.id, open, b);
      if (dv.callouts != dg.callouts) bad.push_back("lp-val-gsp-same-set: instance " + std::to_string(t));
      if (dg.psi_size > 7) bad.push_back(fmt("psi-at-most-7", static_cast<double>(dg.psi_size), 7));
      for (const auto& diag : dv.diagnostics) {
        double sum_w = 0.0;
        double sum_u = 0.0;
        for (const auto& p : diag.pairs) {
          sum_w += p.first;
          sum_u += p.second;
        }
        if (sum_u > 1.0) continue;
        const double e = stop_process_expectation(diag.pairs);
        if (e < kStopFactor * sum_w - 1e-9) bad.push_back(fmt("slot-stop-process-bound", e, kStopFactor * sum_w));
      }
    }
  }
  return bad;
}

Failures determinism(std::uint64_t seed) {
  Failures bad;
  Rng rng(seed);
  const Scenario s = random_tiny_scenario(rng);
  SimOptions o;
  o.policy.kind = PolicyKind::kLpVal;
  o.explore = 200;
  o.exploit = 2000;
  o.replications = 4;
  o.seed = seed;
  const std::string first = replications_csv({run_two_phase(s, o)});
  const std::string second = replications_csv({run_two_phase(s, o)});
  o.threads = 2;
  const std::string threaded = replications_csv({run_two_phase(s, o)});
  if (first != second) bad.push_back("csv-repeatable: two runs differ");
  if (first != threaded) bad.push_back("csv-thread-independent: threaded run differs");
  return bad;
}

}  // namespace

const std::vector<Suite>& validation_suites() {
  static const std::vector<Suite> suites = {
      {"stop-process", "stop-process bound and Monte-Carlo agreement", stop_process},
      {"sales-bounds", "1 - exp(-c) <= Pr[sale] <= c", sales_bounds},
      {"mhr", "MHR reserve accepted with probability >= e^-2", mhr},
      {"duals", "strong duality, tau/discount monotonicity, direct vs decomposed", duals},
      {"mechanisms", "GSP and reserve-auction payment rules", mechanisms},
      {"token-bucket", "bucket levels, grant budgets and time-average ledgers", token_bucket},
      {"policies", "LP-Val/LP-GSP agreement, |Psi| <= 7, per-slot stop-process bound", policies},
      {"determinism", "matched seeds reproduce identical CSV", determinism},
  };
  return suites;
}

}  // namespace callout::cli
