#include "callout/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace callout {

TokenBucket::TokenBucket(double capacity, double rate, double start_time)
    : capacity_(capacity), rate_(rate), level_(capacity), last_(start_time) {
  if (!(capacity >= 1.0)) throw std::invalid_argument("TokenBucket: capacity must be at least 1");
  if (!(rate >= 0.0)) throw std::invalid_argument("TokenBucket: negative rate");
}

double TokenBucket::peek(double now) const {
  if (now < last_) throw std::invalid_argument("TokenBucket: time moved backwards");
  if (std::isinf(capacity_)) return capacity_;
  return std::min(capacity_, level_ + rate_ * (now - last_));
}

void TokenBucket::advance(double now) {
  level_ = peek(now);
  last_ = now;
}

bool TokenBucket::try_consume(double now) {
  advance(now);
  if (level_ < 1.0) return false;
  level_ -= 1.0;
  return true;
}

RateLedger::RateLedger(std::vector<double> rho)
    : rho_(std::move(rho)), attempted_(rho_.size(), 0), granted_(rho_.size(), 0) {
  for (double r : rho_) {
    if (r < 0.0) throw std::invalid_argument("RateLedger: negative rate");
  }
}

bool RateLedger::can_grant(int i) const {
  return static_cast<double>(granted_[i]) < rho_[i] * static_cast<double>(impressions_);
}

bool RateLedger::try_consume(int i) {
  ++attempted_[i];
  if (!can_grant(i)) return false;
  ++granted_[i];
  return true;
}

double RateLedger::remaining(int i) const {
  return rho_[i] * static_cast<double>(impressions_) - static_cast<double>(granted_[i]);
}

std::string to_string(ArrivalKind kind) { return kind == ArrivalKind::kUniform ? "uniform" : "poisson"; }

ArrivalKind arrival_kind_from_string(const std::string& s) {
  if (s == "uniform") return ArrivalKind::kUniform;
  if (s == "poisson") return ArrivalKind::kPoisson;
  throw std::invalid_argument("unknown arrival kind: " + s);
}

double ArrivalProcess::next_gap(Rng& rng) const {
  if (kind == ArrivalKind::kUniform) return mean_interarrival;
  return std::exponential_distribution<double>(1.0 / mean_interarrival)(rng);
}

std::string to_string(ConstraintMode mode) {
  switch (mode) {
    case ConstraintMode::kTimeAverage: return "time-average";
    case ConstraintMode::kTokenBucket: return "token-bucket";
    case ConstraintMode::kUnlimited: return "unlimited";
  }
  return "unknown";
}

ConstraintMode constraint_mode_from_string(const std::string& s) {
  if (s == "time-average") return ConstraintMode::kTimeAverage;
  if (s == "token-bucket") return ConstraintMode::kTokenBucket;
  if (s == "unlimited") return ConstraintMode::kUnlimited;
  throw std::invalid_argument("unknown constraint mode: " + s);
}

CapacityState CapacityState::unlimited(std::size_t n) {
  CapacityState s;
  s.n_ = n;
  return s;
}

CapacityState CapacityState::time_average(std::vector<double> rho) {
  CapacityState s;
  s.mode_ = ConstraintMode::kTimeAverage;
  s.n_ = rho.size();
  s.ledger_ = RateLedger(std::move(rho));
  return s;
}

CapacityState CapacityState::token_bucket(std::span<const double> bucket_size, std::span<const double> token_rate) {
  if (bucket_size.size() != token_rate.size()) throw std::invalid_argument("token_bucket: size mismatch");
  CapacityState s;
  s.mode_ = ConstraintMode::kTokenBucket;
  s.n_ = bucket_size.size();
  for (std::size_t i = 0; i < s.n_; ++i) s.buckets_.emplace_back(bucket_size[i], token_rate[i]);
  return s;
}

void CapacityState::begin_impression(double now) {
  now_ = now;
  if (mode_ == ConstraintMode::kTimeAverage) ledger_.begin_impression();
  if (mode_ == ConstraintMode::kTokenBucket) {
    for (auto& b : buckets_) b.advance(now);
  }
}

bool CapacityState::available(int i) const {
  switch (mode_) {
    case ConstraintMode::kTimeAverage: return ledger_.can_grant(i);
    case ConstraintMode::kTokenBucket: return buckets_[i].level() >= 1.0;
    case ConstraintMode::kUnlimited: return true;
  }
  return false;
}

bool CapacityState::try_consume(int i) {
  bool ok = true;
  if (mode_ == ConstraintMode::kTimeAverage) ok = ledger_.try_consume(i);
  if (mode_ == ConstraintMode::kTokenBucket) ok = buckets_[i].try_consume(now_);
  if (!ok) ++denied_;
  return ok;
}

double CapacityState::remaining(int i) const {
  switch (mode_) {
    case ConstraintMode::kTimeAverage: return ledger_.remaining(i);
    case ConstraintMode::kTokenBucket: return buckets_[i].level();
    case ConstraintMode::kUnlimited: return kUnlimited;
  }
  return 0.0;
}

std::vector<int> gate_callouts(std::span<const int> attempted, CapacityState& capacity) {
  std::vector<int> granted;
  for (int i : attempted) {
    if (capacity.try_consume(i)) granted.push_back(i);
  }
  return granted;
}

std::int64_t warmup_skip(std::span<const double> bucket_size, std::span<const double> rho_per_impression) {
  if (bucket_size.size() != rho_per_impression.size()) throw std::invalid_argument("warmup_skip: size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < bucket_size.size(); ++i) {
    if (std::isinf(bucket_size[i])) continue;
    if (rho_per_impression[i] <= 0.0) throw std::invalid_argument("warmup_skip: non-positive rate");
    worst = std::max(worst, bucket_size[i] / rho_per_impression[i]);
  }
  return static_cast<std::int64_t>(std::ceil(worst - 1e-9));
}

}  // namespace callout
