#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "callout/duals.hpp"
#include "callout/policies.hpp"
#include "callout/scenario.hpp"

namespace callout {

/// How call-out capacity is enforced during exploitation.
/// kDecision: the policy sees capacity and only emits grantable call-outs.
/// kConvert: the policy decides as if unconstrained; each attempt is then
/// tried on the constraint and denied attempts are dropped.
enum class Gating { kDecision, kConvert };

struct SimOptions {
  PolicyParams policy;
  std::int64_t explore = 500;
  std::int64_t exploit = 2000;
  int replications = 10;
  std::uint64_t seed = 1;
  /// Rate constraints of the sampled LP are shrunk to (1 - shrink) * rho.
  double shrink = 0.0;
  Gating gating = Gating::kDecision;
  /// Overrides the scenario's constraint mode when set.
  std::optional<ConstraintMode> constraint_mode;
  /// Overrides every bucket size when set.
  std::optional<double> bucket_size;
  /// Overrides per-impression rates (and token rates) when non-empty.
  std::vector<double> rho_override;
  /// Drop the first ceil(max sigma / rho) impressions from the metrics.
  bool exclude_warmup = false;
  /// Std of Gaussian noise added to the policy's survival estimates.
  double noise = 0.0;
  int threads = 1;
  /// Duals to use instead of learning them (one per replication, or one shared).
  std::shared_ptr<const std::vector<DualSolution>> duals;
  SolveOptions solve;
  bool track_buckets = false;
};

struct ReplicationResult {
  int replication = 0;
  std::uint64_t seed = 0;
  std::int64_t impressions = 0;
  double welfare = 0.0;
  double revenue = 0.0;
  double sales = 0.0;
  std::vector<double> callout_rate;
  std::vector<double> attempt_rate;
  std::size_t max_psi = 0;
  std::int64_t reserve_auctions = 0;
  std::int64_t gsp_auctions = 0;
  std::int64_t denied = 0;
  bool bucket_bounds_ok = true;
  double lp_objective = 0.0;
  double lp_residual = 0.0;
  /// Per-network welfare credited to each network's awards.
  std::vector<double> network_value;
};

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;
  double half_width = 0.0;  // 1.96 * stddev / sqrt(reps)
};
Summary summarize(const std::vector<double>& xs);

struct SimReport {
  std::string policy;
  double parameter = 0.0;
  Objective objective = Objective::kValue;
  std::vector<ReplicationResult> runs;
  double opt_ub = 0.0;

  /// Per-impression objective value of one run (welfare, revenue or sales).
  double metric(const ReplicationResult& r) const;
  Summary metric_summary() const;
  Summary welfare() const;
  Summary revenue() const;
  Summary sales() const;
};

/// The objective-specific value for a run.
double objective_metric(Objective objective, const ReplicationResult& r);

/// Independent per-replication RNG stream.
Rng stream(std::uint64_t seed, int replication, int stream_id);

enum StreamId : int { kExploreStream = 1, kTypeStream, kBidStream, kArrivalStream, kPolicyStream, kNoiseStream, kRunStream };

/// Draws impression type ids by inverse CDF over arrival probabilities.
class TypeSampler {
 public:
  explicit TypeSampler(const std::vector<ImpressionType>& types);
  int operator()(Rng& rng) const;

 private:
  std::vector<double> cdf_;
};

/// Policy inputs for a replication: the scenario's types, or a copy with
/// noisy survival estimates (and matching sales bids).
std::vector<ImpressionType> belief_types(const Scenario& s, double noise, Rng& rng);

/// Learns duals from `samples` exploration impressions of the belief types.
DualSolution learn_duals(const Scenario& s, const std::vector<ImpressionType>& belief, std::span<const double> rho,
                         std::int64_t samples, Rng& rng, double shrink, const SolveOptions& solve = {});

/// Per-replication duals, using the streams run_two_phase would use.
std::vector<DualSolution> learn_replication_duals(const Scenario& s, const SimOptions& options);

/// Exploration then exploitation, over all replications.
SimReport run_two_phase(const Scenario& s, const SimOptions& options);

/// Per-impression optimum of the relaxation on the true distribution.
double compute_opt_ub(const Scenario& s, const SolveOptions& solve = {});

/// Best stationary randomized call-out policy on a tiny scenario, found
/// exactly as an LP over call-out sets (or set-and-price actions for the
/// posted objective) with outcomes enumerated over all bid profiles.
/// Throws std::invalid_argument when the instance is too large.
double brute_force_policy_value(const Scenario& s);

enum class SweepFamily { kSet, kThreshold, kBucket };
std::string to_string(SweepFamily family);
SweepFamily sweep_family_from_string(const std::string& s);

const std::vector<int>& default_set_grid();
const std::vector<double>& default_threshold_grid();
const std::vector<double>& default_bucket_grid();

struct SweepResult {
  std::vector<SimReport> reports;
  /// Index of the best report for each policy name.
  std::vector<std::pair<std::string, std::size_t>> peaks;
  double peak_of(const std::string& policy) const;
};

/// Runs every policy of the family over its grid. For the bucket family
/// `policies` picks the policies, each run at every bucket size.
SweepResult sweep(const Scenario& s, SweepFamily family, const SimOptions& base, std::vector<double> grid = {},
                  std::vector<PolicyParams> policies = {});

/// One row per (policy, parameter, replication).
std::string replications_csv(const std::vector<SimReport>& reports);
/// Means and confidence half-widths per (policy, parameter).
std::string summary_csv(const std::vector<SimReport>& reports);
std::string format_number(double x);

/// Runs fn(0..count-1) over `threads` workers.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace callout
