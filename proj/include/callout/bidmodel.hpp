#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace callout {

using Rng = std::mt19937_64;

/// Discrete distribution of one network's bid on one impression type.
///
/// Values are strictly increasing, non-negative bid levels; probs holds the
/// mass on each level. Zero-mass levels are allowed.
class BidDistribution {
 public:
  BidDistribution() = default;
  BidDistribution(std::vector<double> values, std::vector<double> probs);

  static BidDistribution point_mass(double value);
  /// 0/1 bid: the network is willing to buy at the quoted minimum price with
  /// probability `p_one`.
  static BidDistribution binary(double p_one);

  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& probs() const { return probs_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double max_value() const { return values_.empty() ? 0.0 : values_.back(); }

  /// Pr[V >= v]; v need not be a grid point.
  double survival(double v) const;
  /// Survival at grid index k (mass on levels k..end).
  double survival_at(std::size_t k) const { return survival_[k]; }
  /// E[V].
  double mean() const;
  /// Sum of v * p(v) over levels v >= threshold.
  double tail_value(double threshold) const;
  /// Inverse-CDF draw.
  double sample(Rng& rng) const;

  /// Throws std::invalid_argument naming the violated invariant.
  void validate(double max_value_bound = -1.0) const;

 private:
  void rebuild();

  std::vector<double> values_;
  std::vector<double> probs_;
  std::vector<double> survival_;
  std::vector<double> cdf_;
};

/// Discrete hazard p(v)/survival(v) non-decreasing over the support.
bool is_mhr(const BidDistribution& dist);

enum class DistributionKind { kGaussian, kPareto };

std::string_view to_string(DistributionKind kind);
DistributionKind distribution_kind_from_string(std::string_view name);

struct GeneratorOptions {
  int bins = 100;
  /// Negative means "draw it"; used to force degenerate cases.
  double forced_std = -1.0;
};

/// Benchmark bid distribution: mean ~ U[0, R/2]; Gaussian std ~ U[0, mean/2]
/// or Pareto shape ~ U[2, 5]; truncated to [0, R] and binned onto equal bins
/// whose value is the bin midpoint. Empty bins are dropped.
BidDistribution generate_benchmark_distribution(DistributionKind kind, double scale, Rng& rng,
                                                const GeneratorOptions& options = {});

/// Jitters every mass by an independent U[-epsilon, epsilon] and renormalizes.
BidDistribution perturb_general_position(const BidDistribution& dist, double epsilon, Rng& rng);

/// Slot discounts rho_1 >= ... >= rho_M >= 0 with rho_1 <= 1. Slot index M
/// (zero-based) is the virtual "no slot" with discount 0.
class SlotProfile {
 public:
  SlotProfile() = default;
  explicit SlotProfile(std::vector<double> discounts);

  std::size_t size() const { return discounts_.size(); }
  /// Discount of zero-based slot `l`; returns 0 for the virtual slot.
  double discount(std::size_t l) const { return l < discounts_.size() ? discounts_[l] : 0.0; }
  const std::vector<double>& discounts() const { return discounts_; }

 private:
  std::vector<double> discounts_;
};

struct ImpressionType {
  int id = 0;
  double arrival_prob = 0.0;
  int vertical = 0;
  double min_price = 0.0;
  /// Per-network bid distribution seen by the objective (0/1 for sales).
  std::vector<BidDistribution> bids;
  /// Per-network Pr[raw bid >= min_price].
  std::vector<double> sale_prob;
  /// Per-network expected raw bid.
  std::vector<double> expected_bid;
};

}  // namespace callout
