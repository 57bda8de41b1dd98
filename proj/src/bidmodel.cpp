#include "callout/bidmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace callout {

namespace {

constexpr double kMassTolerance = 1e-9;

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

BidDistribution from_bins(const std::vector<double>& mass, double scale) {
  const int bins = static_cast<int>(mass.size());
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  std::vector<double> values;
  std::vector<double> probs;
  for (int k = 0; k < bins; ++k) {
    if (mass[k] / total < 1e-12) continue;
    values.push_back((k + 0.5) * scale / bins);
    probs.push_back(mass[k]);
  }
  const double kept = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (double& p : probs) p /= kept;
  return BidDistribution(std::move(values), std::move(probs));
}

BidDistribution point_mass_bin(double mean, double scale, int bins) {
  int k = static_cast<int>(std::floor(mean / scale * bins));
  k = std::clamp(k, 0, bins - 1);
  return BidDistribution::point_mass((k + 0.5) * scale / bins);
}

}  // namespace

BidDistribution::BidDistribution(std::vector<double> values, std::vector<double> probs)
    : values_(std::move(values)), probs_(std::move(probs)) {
  if (values_.size() != probs_.size()) {
    throw std::invalid_argument("BidDistribution: values and probs differ in length");
  }
  rebuild();
}

BidDistribution BidDistribution::point_mass(double value) { return BidDistribution({value}, {1.0}); }

BidDistribution BidDistribution::binary(double p_one) {
  p_one = std::clamp(p_one, 0.0, 1.0);
  return BidDistribution({0.0, 1.0}, {1.0 - p_one, p_one});
}

void BidDistribution::rebuild() {
  const std::size_t n = values_.size();
  survival_.assign(n + 1, 0.0);
  cdf_.assign(n, 0.0);
  for (std::size_t k = n; k-- > 0;) survival_[k] = survival_[k + 1] + probs_[k];
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    acc += probs_[k];
    cdf_[k] = acc;
  }
}

double BidDistribution::survival(double v) const {
  const auto it = std::lower_bound(values_.begin(), values_.end(), v);
  return survival_[static_cast<std::size_t>(it - values_.begin())];
}

double BidDistribution::mean() const {
  return std::inner_product(values_.begin(), values_.end(), probs_.begin(), 0.0);
}

double BidDistribution::tail_value(double threshold) const {
  double acc = 0.0;
  for (std::size_t k = values_.size(); k-- > 0 && values_[k] >= threshold;) acc += values_[k] * probs_[k];
  return acc;
}

double BidDistribution::sample(Rng& rng) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng) * cdf_.back();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), values_.size() - 1);
  return values_[k];
}

void BidDistribution::validate(double max_value_bound) const {
  if (values_.empty()) throw std::invalid_argument("BidDistribution: empty support");
  double total = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!(probs_[k] >= 0.0)) throw std::invalid_argument("BidDistribution: negative probability");
    if (!(values_[k] >= 0.0)) throw std::invalid_argument("BidDistribution: negative bid value");
    if (k > 0 && !(values_[k] > values_[k - 1])) {
      throw std::invalid_argument("BidDistribution: values not strictly increasing");
    }
    total += probs_[k];
  }
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw std::invalid_argument("BidDistribution: probabilities do not sum to 1");
  }
  if (max_value_bound >= 0.0 && values_.back() > max_value_bound + 1e-12) {
    throw std::invalid_argument("BidDistribution: value exceeds bid bound");
  }
}

bool is_mhr(const BidDistribution& dist) {
  double previous = -1.0;
  for (std::size_t k = 0; k < dist.size(); ++k) {
    const double p = dist.probs()[k];
    if (p <= 0.0) continue;
    const double hazard = p / dist.survival_at(k);
    if (hazard < previous - 1e-12) return false;
    previous = hazard;
  }
  return true;
}

std::string_view to_string(DistributionKind kind) {
  return kind == DistributionKind::kGaussian ? "gaussian" : "pareto";
}

DistributionKind distribution_kind_from_string(std::string_view name) {
  if (name == "gaussian") return DistributionKind::kGaussian;
  if (name == "pareto") return DistributionKind::kPareto;
  throw std::invalid_argument("unknown distribution kind: " + std::string(name));
}

BidDistribution generate_benchmark_distribution(DistributionKind kind, double scale, Rng& rng,
                                                const GeneratorOptions& options) {
  if (!(scale > 0.0)) throw std::invalid_argument("generate_benchmark_distribution: scale must be positive");
  if (options.bins < 1) throw std::invalid_argument("generate_benchmark_distribution: bins must be >= 1");
  const int bins = options.bins;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double mean = 0.5 * scale * unit(rng);
  std::vector<double> mass(bins, 0.0);

  if (kind == DistributionKind::kGaussian) {
    const double std_dev = options.forced_std >= 0.0 ? options.forced_std : 0.5 * mean * unit(rng);
    if (std_dev <= 0.0) return point_mass_bin(mean, scale, bins);
    for (int k = 0; k < bins; ++k) {
      const double lo = scale * k / bins;
      const double hi = scale * (k + 1) / bins;
      mass[k] = normal_cdf((hi - mean) / std_dev) - normal_cdf((lo - mean) / std_dev);
    }
  } else {
    // Pareto type I with tail exponent `shape`: mean = shape * x_m / (shape - 1).
    const double shape = 2.0 + 3.0 * unit(rng);
    const double x_min = mean * (shape - 1.0) / shape;
    if (x_min <= 0.0) return point_mass_bin(mean, scale, bins);
    const auto cdf = [&](double x) { return x <= x_min ? 0.0 : 1.0 - std::pow(x_min / x, shape); };
    for (int k = 0; k < bins; ++k) {
      mass[k] = cdf(scale * (k + 1) / bins) - cdf(scale * k / bins);
    }
  }
  if (std::accumulate(mass.begin(), mass.end(), 0.0) <= 0.0) return point_mass_bin(mean, scale, bins);
  return from_bins(mass, scale);
}

BidDistribution perturb_general_position(const BidDistribution& dist, double epsilon, Rng& rng) {
  if (epsilon < 0.0 || epsilon > 1e-6) {
    throw std::invalid_argument("perturb_general_position: epsilon must lie in [0, 1e-6]");
  }
  if (epsilon == 0.0) return dist;
  std::uniform_real_distribution<double> jitter(-epsilon, epsilon);
  std::vector<double> probs = dist.probs();
  for (double& p : probs) p = std::max(0.0, p + jitter(rng));
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (double& p : probs) p /= total;
  return BidDistribution(dist.values(), std::move(probs));
}

SlotProfile::SlotProfile(std::vector<double> discounts) : discounts_(std::move(discounts)) {
  if (discounts_.empty()) throw std::invalid_argument("SlotProfile: at least one slot required");
  if (discounts_.front() > 1.0 + 1e-12) throw std::invalid_argument("SlotProfile: first discount exceeds 1");
  for (std::size_t l = 0; l < discounts_.size(); ++l) {
    if (discounts_[l] < 0.0) throw std::invalid_argument("SlotProfile: negative discount");
    if (l > 0 && discounts_[l] > discounts_[l - 1]) {
      throw std::invalid_argument("SlotProfile: discounts must be non-increasing");
    }
  }
}

}  // namespace callout
