#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "callout/bidmodel.hpp"
#include "callout/constraints.hpp"
#include "callout/duals.hpp"

namespace callout {

inline constexpr int kSchemaVersion = 1;

/// Raised for malformed scenario or duals files; names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class Objective { kValue, kGsp, kPosted, kSales };
std::string to_string(Objective objective);
Objective objective_from_string(const std::string& s);
LpMode lp_mode_for(Objective objective);

struct NetworkSpec {
  /// Call-out rate per impression.
  double rho = 1.0;
  /// Token-bucket burst size; kUnlimited disables the bucket.
  double bucket_size = kUnlimited;
  /// Tokens per unit time.
  double token_rate = 1.0;
};

struct ConstraintSpec {
  ConstraintMode mode = ConstraintMode::kTimeAverage;
  ArrivalProcess arrival;
};

struct TypeSpec {
  double arrival_prob = 0.0;
  /// Index into Scenario::bid_tables (the vertical for benchmark scenarios).
  int table = 0;
  double min_price = 0.0;
};

struct BenchmarkOptions {
  std::uint64_t seed = 1;
  DistributionKind kind = DistributionKind::kGaussian;
  Objective objective = Objective::kSales;
  std::vector<double> slots{1.0};
  int networks = 32;
  int verticals = 10;
  int price_levels = 10;
  double scale = 1.0;
  double min_price_lo = 0.2;
  double min_price_hi = 1.0;
  double bucket_size = 5.0;
  double token_rate_lo = 5.0;
  double token_rate_hi = 50.0;
  double mean_interarrival = 0.003;
  int bins = 100;
  double perturbation = 0.0;
};

struct Scenario {
  std::string name = "scenario";
  Objective objective = Objective::kValue;
  double scale = 1.0;
  SlotProfile slots{{1.0}};
  std::vector<NetworkSpec> networks;
  ConstraintSpec constraints;
  /// bid_tables[table][network]: raw bid distributions.
  std::vector<std::vector<BidDistribution>> bid_tables;
  std::vector<TypeSpec> type_specs;
  double perturbation = 0.0;
  std::uint64_t perturbation_seed = 0;
  std::optional<BenchmarkOptions> generator;

  /// Derived by finalize(): per-type effective bids for the objective.
  std::vector<ImpressionType> types;

  /// Validates and builds `types`. Throws ConfigError.
  void finalize();
  std::size_t num_networks() const { return networks.size(); }
  std::vector<double> rho() const;
  std::vector<double> bucket_sizes() const;
  std::vector<double> token_rates() const;
  std::vector<double> arrival_probs() const;
};

/// Effective per-network bids for one type under an objective: raw bids for
/// value, gsp and posted; 0/1 bids with Pr[1] = survival(min price) for sales.
std::vector<BidDistribution> effective_bids(const std::vector<BidDistribution>& raw, double min_price,
                                            Objective objective);

/// The experimental setup of the benchmark: networks, verticals, token
/// buckets on a Poisson clock, and discretized minimum prices.
Scenario generate_benchmark(const BenchmarkOptions& options);

/// Time-average scenario with one bid table per type and uniform arrivals.
Scenario tiny_scenario(std::vector<std::vector<BidDistribution>> tables, std::vector<double> q,
                       std::vector<double> rho, std::vector<double> slots = {1.0},
                       Objective objective = Objective::kValue);

struct TinyOptions {
  int max_networks = 3;
  int max_types = 3;
  int max_levels = 4;
  int max_slots = 2;
  Objective objective = Objective::kValue;
};

/// A random instance small enough for brute_force_policy_value.
Scenario random_tiny_scenario(Rng& rng, const TinyOptions& options = {});

nlohmann::json scenario_to_json(const Scenario& s);
Scenario scenario_from_json(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& s, const std::string& path);

nlohmann::json duals_to_json(const DualSolution& d);
DualSolution duals_from_json(const nlohmann::json& j);
DualSolution load_duals(const std::string& path);
void save_duals(const DualSolution& d, const std::string& path);

/// Writes `text` to `path`, throwing std::runtime_error when unwritable.
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace callout
