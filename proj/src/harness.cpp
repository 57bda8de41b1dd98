#include "callout/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "callout/mechanisms.hpp"

namespace callout {

Summary summarize(const std::vector<double>& xs) {
  Summary s;
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  if (xs.size() > 1) {
    double sq = 0.0;
    for (double x : xs) sq += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(sq / (xs.size() - 1));
    s.half_width = 1.96 * s.stddev / std::sqrt(static_cast<double>(xs.size()));
  }
  return s;
}

double objective_metric(Objective objective, const ReplicationResult& r) {
  switch (objective) {
    case Objective::kValue: return r.welfare;
    case Objective::kGsp:
    case Objective::kPosted: return r.revenue;
    case Objective::kSales: return r.sales;
  }
  return 0.0;
}

double SimReport::metric(const ReplicationResult& r) const { return objective_metric(objective, r); }

namespace {

template <typename F>
Summary summarize_runs(const std::vector<ReplicationResult>& runs, F&& f) {
  std::vector<double> xs;
  for (const auto& r : runs) xs.push_back(f(r));
  return summarize(xs);
}

}  // namespace

Summary SimReport::metric_summary() const {
  return summarize_runs(runs, [&](const ReplicationResult& r) { return metric(r); });
}
Summary SimReport::welfare() const {
  return summarize_runs(runs, [](const ReplicationResult& r) { return r.welfare; });
}
Summary SimReport::revenue() const {
  return summarize_runs(runs, [](const ReplicationResult& r) { return r.revenue; });
}
Summary SimReport::sales() const {
  return summarize_runs(runs, [](const ReplicationResult& r) { return r.sales; });
}

Rng stream(std::uint64_t seed, int replication, int stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replication), static_cast<std::uint32_t>(stream_id)};
  return Rng(seq);
}

std::vector<ImpressionType> belief_types(const Scenario& s, double noise, Rng& rng) {
  std::vector<ImpressionType> out = s.types;
  if (noise <= 0.0) return out;
  std::normal_distribution<double> gauss(0.0, noise);
  for (auto& type : out) {
    for (std::size_t i = 0; i < type.sale_prob.size(); ++i) {
      const double p = std::clamp(type.sale_prob[i] + gauss(rng), 0.0, 1.0);
      type.sale_prob[i] = p;
      if (s.objective == Objective::kSales) type.bids[i] = BidDistribution::binary(p);
    }
  }
  return out;
}

TypeSampler::TypeSampler(const std::vector<ImpressionType>& types) {
  if (types.empty()) throw std::invalid_argument("TypeSampler: no types");
  double acc = 0.0;
  for (const auto& t : types) {
    acc += t.arrival_prob;
    cdf_.push_back(acc);
  }
  for (double& c : cdf_) c /= acc;
  cdf_.back() = 1.0;
}

int TypeSampler::operator()(Rng& rng) const {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return static_cast<int>(std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1));
}

namespace {

struct RunSetup {
  ConstraintMode mode;
  std::vector<double> rho;
  std::vector<double> bucket_size;
  std::vector<double> token_rate;
};

RunSetup resolve_setup(const Scenario& s, const SimOptions& o) {
  RunSetup r;
  r.mode = o.constraint_mode.value_or(s.constraints.mode);
  r.rho = o.rho_override.empty() ? s.rho() : o.rho_override;
  if (r.rho.size() != s.num_networks()) throw std::invalid_argument("rho override has the wrong size");
  r.bucket_size = s.bucket_sizes();
  if (o.bucket_size) std::fill(r.bucket_size.begin(), r.bucket_size.end(), *o.bucket_size);
  if (o.rho_override.empty()) {
    r.token_rate = s.token_rates();
  } else {
    for (double x : r.rho) r.token_rate.push_back(x / s.constraints.arrival.mean_interarrival);
  }
  return r;
}

CapacityState make_capacity(const RunSetup& setup, std::size_t n) {
  switch (setup.mode) {
    case ConstraintMode::kTimeAverage: return CapacityState::time_average(setup.rho);
    case ConstraintMode::kTokenBucket: return CapacityState::token_bucket(setup.bucket_size, setup.token_rate);
    case ConstraintMode::kUnlimited: return CapacityState::unlimited(n);
  }
  return CapacityState::unlimited(n);
}

AuctionOutcome run_mechanism(const CallOutDecision& d, Objective objective, std::span<const RealizedBid> bids,
                             const SlotProfile& slots) {
  switch (d.mechanism) {
    case MechanismKind::kNone: return {};
    case MechanismKind::kValueAuction:
      return objective == Objective::kGsp ? run_gsp(bids, slots) : run_value_auction(bids, slots);
    case MechanismKind::kGspRegular: return run_gsp(bids, slots);
    case MechanismKind::kSingleSlotReserve: return run_reserve_auction(bids, d.reserve, slots);
    case MechanismKind::kPosted: return run_posted(d.offers, bids, slots);
  }
  return {};
}

ReplicationResult run_replication(const Scenario& s, const SimOptions& o, int rep) {
  const std::size_t n = s.num_networks();
  const RunSetup setup = resolve_setup(s, o);
  ReplicationResult out;
  out.replication = rep;
  out.seed = o.seed;

  Rng noise_rng = stream(o.seed, rep, kNoiseStream);
  const std::vector<ImpressionType> belief = belief_types(s, o.noise, noise_rng);

  DualSolution learned;
  const DualSolution* duals = nullptr;
  if (is_lp_policy(o.policy.kind)) {
    if (o.duals && !o.duals->empty()) {
      duals = &(*o.duals)[o.duals->size() == 1 ? 0 : static_cast<std::size_t>(rep)];
    } else {
      Rng explore = stream(o.seed, rep, kExploreStream);
      learned = learn_duals(s, belief, setup.rho, o.explore, explore, o.shrink, o.solve);
      duals = &learned;
    }
    out.lp_objective = duals->objective;
    out.lp_residual = duals->residual;
  }

  Policy policy(o.policy, belief, s.slots, duals);
  Rng run_rng = stream(o.seed, rep, kRunStream);
  policy.start_run(run_rng);

  Rng type_rng = stream(o.seed, rep, kTypeStream);
  Rng bid_rng = stream(o.seed, rep, kBidStream);
  Rng arrival_rng = stream(o.seed, rep, kArrivalStream);
  Rng policy_rng = stream(o.seed, rep, kPolicyStream);
  const TypeSampler sampler(s.types);

  CapacityState capacity = make_capacity(setup, n);
  const CapacityState open = CapacityState::unlimited(n);
  std::int64_t warmup = 0;
  if (o.exclude_warmup && setup.mode == ConstraintMode::kTokenBucket) {
    std::vector<double> per_impression;
    for (double r : setup.token_rate) per_impression.push_back(r * s.constraints.arrival.mean_interarrival);
    warmup = warmup_skip(setup.bucket_size, per_impression);
  }

  std::vector<std::int64_t> granted(n, 0), attempted(n, 0);
  out.network_value.assign(n, 0.0);
  std::vector<double> bids(n);
  std::vector<RealizedBid> called;
  double now = 0.0;
  const std::int64_t total = warmup + o.exploit;
  for (std::int64_t t = 0; t < total; ++t) {
    now += s.constraints.arrival.next_gap(arrival_rng);
    const int j = sampler(type_rng);
    const ImpressionType& type = s.types[j];
    for (std::size_t i = 0; i < n; ++i) bids[i] = type.bids[i].sample(bid_rng);

    capacity.begin_impression(now);
    const bool counted = t >= warmup;
    CallOutDecision d;
    if (o.gating == Gating::kDecision) {
      d = policy.decide(j, capacity, policy_rng);
      for (int i : d.callouts) {
        if (!capacity.try_consume(i)) throw std::logic_error("policy emitted a call-out without capacity");
      }
      if (counted) {
        for (int i : d.callouts) ++attempted[i];
      }
    } else {
      d = policy.decide(j, open, policy_rng);
      if (counted) {
        for (int i : d.callouts) ++attempted[i];
      }
      d.callouts = gate_callouts(d.callouts, capacity);
      std::erase_if(d.offers, [&](const PriceOffer& offer) {
        return std::find(d.callouts.begin(), d.callouts.end(), offer.network) == d.callouts.end();
      });
      if (d.callouts.empty()) d.mechanism = MechanismKind::kNone;
    }
    if (o.track_buckets && setup.mode == ConstraintMode::kTokenBucket) {
      for (const auto& b : capacity.buckets()) {
        if (b.level() < 0.0 || b.level() > b.capacity()) out.bucket_bounds_ok = false;
      }
    }
    if (!counted) continue;

    called.clear();
    for (int i : d.callouts) called.push_back({i, bids[i]});
    const AuctionOutcome outcome = run_mechanism(d, s.objective, called, s.slots);
    out.welfare += outcome.welfare;
    out.revenue += outcome.revenue;
    out.sales += outcome.sold ? 1.0 : 0.0;
    for (const auto& a : outcome.awards) out.network_value[a.network] += s.slots.discount(a.slot) * a.bid;
    for (int i : d.callouts) ++granted[i];
    out.max_psi = std::max(out.max_psi, d.psi_size);
    out.reserve_auctions += d.mechanism == MechanismKind::kSingleSlotReserve;
    out.gsp_auctions += d.mechanism == MechanismKind::kGspRegular;
  }
  out.impressions = o.exploit;
  const double m = static_cast<double>(std::max<std::int64_t>(o.exploit, 1));
  out.welfare /= m;
  out.revenue /= m;
  out.sales /= m;
  for (auto& v : out.network_value) v /= m;
  for (std::size_t i = 0; i < n; ++i) {
    out.callout_rate.push_back(granted[i] / m);
    out.attempt_rate.push_back(attempted[i] / m);
  }
  out.denied = capacity.denied();
  return out;
}

std::string policy_label(const PolicyParams& p) { return to_string(p.kind); }

double policy_parameter(const PolicyParams& p) {
  if (is_set_policy(p.kind)) return p.k;
  if (is_threshold_policy(p.kind)) return p.threshold;
  if (p.kind == PolicyKind::kAdvCutoff) return p.delta;
  return 0.0;
}

}  // namespace

DualSolution learn_duals(const Scenario& s, const std::vector<ImpressionType>& belief, std::span<const double> rho,
                         std::int64_t samples, Rng& rng, double shrink, const SolveOptions& solve) {
  if (samples < 1) throw std::invalid_argument("learn_duals: LP policies need at least one exploration impression");
  const TypeSampler sampler(belief);
  std::vector<int> ids(static_cast<std::size_t>(samples));
  for (auto& id : ids) id = sampler(rng);
  const SampleLp lp = build_sample_lp(belief, ids, rho, s.slots, lp_mode_for(s.objective), shrink);
  DualSolution d = solve_for_duals(lp, solve);
  fill_unobserved_types(d, belief);
  return d;
}

std::vector<DualSolution> learn_replication_duals(const Scenario& s, const SimOptions& o) {
  const RunSetup setup = resolve_setup(s, o);
  std::vector<DualSolution> out(static_cast<std::size_t>(o.replications));
  parallel_for(o.replications, o.threads, [&](int rep) {
    Rng noise_rng = stream(o.seed, rep, kNoiseStream);
    const auto belief = belief_types(s, o.noise, noise_rng);
    Rng explore = stream(o.seed, rep, kExploreStream);
    out[rep] = learn_duals(s, belief, setup.rho, o.explore, explore, o.shrink, o.solve);
  });
  return out;
}

SimReport run_two_phase(const Scenario& s, const SimOptions& o) {
  if (o.replications < 1) throw std::invalid_argument("run_two_phase: at least one replication");
  if (o.exploit < 1) throw std::invalid_argument("run_two_phase: at least one exploitation impression");
  SimReport report;
  report.policy = policy_label(o.policy);
  report.parameter = policy_parameter(o.policy);
  report.objective = s.objective;
  report.runs.resize(static_cast<std::size_t>(o.replications));
  parallel_for(o.replications, o.threads, [&](int rep) { report.runs[rep] = run_replication(s, o, rep); });
  return report;
}

double compute_opt_ub(const Scenario& s, const SolveOptions& solve) {
  const SampleLp lp = build_exact_lp(s.types, s.rho(), s.slots, lp_mode_for(s.objective));
  return solve_for_duals(lp, solve).objective;
}

namespace {

// Every joint bid profile of `members` with its probability.
template <typename F>
void enumerate_profiles(const ImpressionType& type, const std::vector<int>& members, F&& visit) {
  std::vector<RealizedBid> bids(members.size());
  std::function<void(std::size_t, double)> rec = [&](std::size_t k, double prob) {
    if (prob == 0.0) return;
    if (k == members.size()) {
      visit(std::span<const RealizedBid>(bids), prob);
      return;
    }
    const auto& d = type.bids[members[k]];
    for (std::size_t v = 0; v < d.size(); ++v) {
      bids[k] = {members[k], d.values()[v]};
      rec(k + 1, prob * d.probs()[v]);
    }
  };
  rec(0, 1.0);
}

struct Action {
  std::vector<int> members;
  std::vector<PriceOffer> offers;
  double value = 0.0;
};

std::vector<Action> actions_for(const Scenario& s, const ImpressionType& type) {
  const int n = static_cast<int>(s.num_networks());
  std::vector<Action> out;
  for (int mask = 1; mask < (1 << n); ++mask) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i) {
      if (mask & (1 << i)) members.push_back(i);
    }
    if (s.objective != Objective::kPosted) {
      Action a{members, {}, 0.0};
      enumerate_profiles(type, members, [&](std::span<const RealizedBid> bids, double prob) {
        AuctionOutcome o = s.objective == Objective::kGsp ? run_gsp(bids, s.slots) : run_value_auction(bids, s.slots);
        const double v = s.objective == Objective::kSales ? (o.sold ? 1.0 : 0.0)
                         : s.objective == Objective::kGsp ? o.revenue
                                                          : o.welfare;
        a.value += prob * v;
      });
      out.push_back(std::move(a));
      continue;
    }
    // Every combination of one positive grid price per member.
    std::vector<std::vector<double>> prices;
    for (int i : members) {
      std::vector<double> ps;
      for (double v : type.bids[i].values()) {
        if (v > 0.0) ps.push_back(v);
      }
      prices.push_back(ps);
    }
    std::vector<std::size_t> pick(members.size(), 0);
    bool empty_choice = false;
    for (const auto& ps : prices) empty_choice = empty_choice || ps.empty();
    if (empty_choice) continue;
    while (true) {
      Action a{members, {}, 0.0};
      for (std::size_t k = 0; k < members.size(); ++k) a.offers.push_back({members[k], prices[k][pick[k]], 0});
      enumerate_profiles(type, members, [&](std::span<const RealizedBid> bids, double prob) {
        a.value += prob * run_posted(a.offers, bids, s.slots).revenue;
      });
      out.push_back(std::move(a));
      std::size_t k = 0;
      while (k < pick.size() && ++pick[k] == prices[k].size()) pick[k++] = 0;
      if (k == pick.size()) break;
    }
  }
  return out;
}

}  // namespace

double brute_force_policy_value(const Scenario& s) {
  if (s.num_networks() > 3 || s.types.size() > 3 || s.slots.size() > 2) {
    throw std::invalid_argument("brute_force_policy_value: instance too large");
  }
  for (const auto& t : s.types) {
    for (const auto& d : t.bids) {
      if (d.size() > 4) throw std::invalid_argument("brute_force_policy_value: too many bid levels");
    }
  }
  const std::size_t n = s.num_networks();
  LinearProgram lp(0);
  std::vector<std::vector<std::pair<int, double>>> rate_terms(n);
  std::vector<std::vector<std::pair<int, double>>> type_terms(s.types.size());
  for (std::size_t j = 0; j < s.types.size(); ++j) {
    const double q = s.types[j].arrival_prob;
    for (const Action& a : actions_for(s, s.types[j])) {
      const int var = lp.add_variable(q * a.value);
      type_terms[j].push_back({var, 1.0});
      for (int i : a.members) rate_terms[i].push_back({var, q});
    }
  }
  const auto rho = s.rho();
  for (std::size_t i = 0; i < n; ++i) lp.add_constraint(rate_terms[i], rho[i]);
  for (const auto& row : type_terms) lp.add_constraint(row, 1.0);
  const LpResult r = solve_simplex(lp);
  if (!r.optimal()) throw std::runtime_error("brute_force_policy_value: LP did not solve");
  return r.objective;
}

std::string to_string(SweepFamily family) {
  switch (family) {
    case SweepFamily::kSet: return "set";
    case SweepFamily::kThreshold: return "threshold";
    case SweepFamily::kBucket: return "bucket";
  }
  return "unknown";
}

SweepFamily sweep_family_from_string(const std::string& s) {
  if (s == "set") return SweepFamily::kSet;
  if (s == "threshold") return SweepFamily::kThreshold;
  if (s == "bucket") return SweepFamily::kBucket;
  throw std::invalid_argument("unknown sweep family: " + s);
}

const std::vector<int>& default_set_grid() {
  static const std::vector<int> grid{1, 2, 4, 8, 16, 32};
  return grid;
}

const std::vector<double>& default_threshold_grid() {
  static const std::vector<double> grid{0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
  return grid;
}

const std::vector<double>& default_bucket_grid() {
  static const std::vector<double> grid{2, 5, 15, 45};
  return grid;
}

double SweepResult::peak_of(const std::string& policy) const {
  for (const auto& [name, idx] : peaks) {
    if (name == policy) return reports[idx].metric_summary().mean;
  }
  throw std::out_of_range("no sweep results for " + policy);
}

SweepResult sweep(const Scenario& s, SweepFamily family, const SimOptions& base, std::vector<double> grid,
                  std::vector<PolicyParams> policies) {
  std::vector<SimOptions> runs;
  if (family == SweepFamily::kSet) {
    if (grid.empty()) grid.assign(default_set_grid().begin(), default_set_grid().end());
    for (PolicyKind k : {PolicyKind::kRandom, PolicyKind::kMaxRemBand, PolicyKind::kMaxProb, PolicyKind::kMaxExp}) {
      for (double g : grid) {
        SimOptions o = base;
        o.policy.kind = k;
        o.policy.k = static_cast<int>(g);
        runs.push_back(o);
      }
    }
  } else if (family == SweepFamily::kThreshold) {
    if (grid.empty()) grid = default_threshold_grid();
    for (PolicyKind k : {PolicyKind::kThRandom, PolicyKind::kThMaxRemBand, PolicyKind::kThProb, PolicyKind::kThLp}) {
      for (double g : grid) {
        SimOptions o = base;
        o.policy.kind = k;
        o.policy.threshold = g;
        runs.push_back(o);
      }
    }
  } else {
    if (grid.empty()) grid = default_bucket_grid();
    if (policies.empty()) policies.push_back(base.policy);
    for (const auto& p : policies) {
      for (double g : grid) {
        SimOptions o = base;
        o.policy = p;
        o.bucket_size = g;
        runs.push_back(o);
      }
    }
  }

  bool needs_duals = false;
  for (const auto& o : runs) needs_duals = needs_duals || is_lp_policy(o.policy.kind);
  std::shared_ptr<const std::vector<DualSolution>> shared = base.duals;
  if (needs_duals && !shared) shared = std::make_shared<const std::vector<DualSolution>>(learn_replication_duals(s, base));

  SweepResult result;
  const double opt_ub = compute_opt_ub(s, base.solve);
  for (auto& o : runs) {
    o.duals = shared;
    SimReport r = run_two_phase(s, o);
    r.opt_ub = opt_ub;
    if (family == SweepFamily::kBucket) r.parameter = *o.bucket_size;
    result.reports.push_back(std::move(r));
  }
  for (std::size_t k = 0; k < result.reports.size(); ++k) {
    const auto& name = result.reports[k].policy;
    auto it = std::find_if(result.peaks.begin(), result.peaks.end(), [&](const auto& p) { return p.first == name; });
    const double mean = result.reports[k].metric_summary().mean;
    if (it == result.peaks.end()) {
      result.peaks.push_back({name, k});
    } else if (mean > result.reports[it->second].metric_summary().mean) {
      it->second = k;
    }
  }
  return result;
}

std::string format_number(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

std::string replications_csv(const std::vector<SimReport>& reports) {
  std::ostringstream out;
  std::size_t n = 0;
  for (const auto& r : reports) {
    for (const auto& run : r.runs) n = std::max(n, run.callout_rate.size());
  }
  out << "policy,parameter,replication,seed,value,welfare,revenue,sales,opt_ub";
  for (std::size_t i = 0; i < n; ++i) out << ",rate_" << i;
  out << "\n";
  for (const auto& r : reports) {
    for (const auto& run : r.runs) {
      out << r.policy << ',' << format_number(r.parameter) << ',' << run.replication << ',' << run.seed << ','
          << format_number(r.metric(run)) << ',' << format_number(run.welfare) << ',' << format_number(run.revenue)
          << ',' << format_number(run.sales) << ',' << format_number(r.opt_ub);
      for (double x : run.callout_rate) out << ',' << format_number(x);
      out << "\n";
    }
  }
  return out.str();
}

std::string summary_csv(const std::vector<SimReport>& reports) {
  std::ostringstream out;
  out << "policy,parameter,replications,value_mean,value_std,value_ci,welfare_mean,revenue_mean,sales_mean,opt_ub\n";
  for (const auto& r : reports) {
    const Summary v = r.metric_summary();
    out << r.policy << ',' << format_number(r.parameter) << ',' << r.runs.size() << ',' << format_number(v.mean) << ','
        << format_number(v.stddev) << ',' << format_number(v.half_width) << ',' << format_number(r.welfare().mean)
        << ',' << format_number(r.revenue().mean) << ',' << format_number(r.sales().mean) << ','
        << format_number(r.opt_ub) << "\n";
  }
  return out.str();
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (int k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::vector<std::thread> pool;
  const int workers = std::min(threads, count);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int k = next++; k < count; k = next++) {
        try {
          fn(k);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace callout
