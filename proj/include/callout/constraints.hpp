#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "callout/bidmodel.hpp"

namespace callout {

inline constexpr double kUnlimited = std::numeric_limits<double>::infinity();

/// Real-valued token bucket with continuous refill. Starts full.
class TokenBucket {
 public:
  TokenBucket(double capacity, double rate, double start_time = 0.0);

  /// Refills to `now`, then spends one token if at least one is available.
  /// Throws std::invalid_argument if `now` precedes the last update.
  bool try_consume(double now);
  /// Level after refilling to `now`, without spending.
  double peek(double now) const;
  void advance(double now);

  double capacity() const { return capacity_; }
  double rate() const { return rate_; }
  double level() const { return level_; }
  double last_update() const { return last_; }

 private:
  double capacity_;
  double rate_;
  double level_;
  double last_;
};

/// Time-average limits: network i is granted at most rho_i of impressions so far.
class RateLedger {
 public:
  explicit RateLedger(std::vector<double> rho);

  void begin_impression() { ++impressions_; }
  bool can_grant(int i) const;
  bool try_consume(int i);

  std::int64_t impressions() const { return impressions_; }
  std::int64_t attempted(int i) const { return attempted_[i]; }
  std::int64_t granted(int i) const { return granted_[i]; }
  /// rho_i * impressions - granted_i.
  double remaining(int i) const;

 private:
  std::vector<double> rho_;
  std::vector<std::int64_t> attempted_;
  std::vector<std::int64_t> granted_;
  std::int64_t impressions_ = 0;
};

enum class ArrivalKind { kUniform, kPoisson };
std::string to_string(ArrivalKind kind);
ArrivalKind arrival_kind_from_string(const std::string& s);

struct ArrivalProcess {
  ArrivalKind kind = ArrivalKind::kUniform;
  double mean_interarrival = 1.0;

  double next_gap(Rng& rng) const;
};

enum class ConstraintMode { kTimeAverage, kTokenBucket, kUnlimited };
std::string to_string(ConstraintMode mode);
ConstraintMode constraint_mode_from_string(const std::string& s);

/// Per-replication call-out capacity for every network.
class CapacityState {
 public:
  static CapacityState unlimited(std::size_t n);
  static CapacityState time_average(std::vector<double> rho);
  /// `token_rate` is per unit time; arrival times are supplied by begin_impression.
  static CapacityState token_bucket(std::span<const double> bucket_size, std::span<const double> token_rate);

  void begin_impression(double now);
  bool available(int i) const;
  bool try_consume(int i);
  /// Remaining bandwidth used by bandwidth-ordered baselines.
  double remaining(int i) const;

  ConstraintMode mode() const { return mode_; }
  std::size_t size() const { return n_; }
  const std::vector<TokenBucket>& buckets() const { return buckets_; }
  std::int64_t denied() const { return denied_; }

 private:
  ConstraintMode mode_ = ConstraintMode::kUnlimited;
  std::size_t n_ = 0;
  double now_ = 0.0;
  RateLedger ledger_{{}};
  std::vector<TokenBucket> buckets_;
  std::int64_t denied_ = 0;
};

/// Attempts each call-out on the capacity state and keeps the granted ones.
std::vector<int> gate_callouts(std::span<const int> attempted, CapacityState& capacity);

/// Impressions to exclude before metrics: ceil(max_i sigma_i / rho_i), with
/// rho_i the per-impression token rate. Zero when every bucket is unlimited.
std::int64_t warmup_skip(std::span<const double> bucket_size, std::span<const double> rho_per_impression);

}  // namespace callout
