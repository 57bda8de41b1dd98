#pragma once

#include <span>
#include <utility>
#include <vector>

#include "callout/bidmodel.hpp"

namespace callout {

struct RealizedBid {
  int network = 0;
  double bid = 0.0;
};

struct SlotAward {
  std::size_t slot = 0;  // zero-based
  int network = 0;
  double bid = 0.0;
  double payment = 0.0;
};

struct AuctionOutcome {
  /// Realized bids sorted non-increasing (ties by network id).
  std::vector<RealizedBid> ranked;
  std::vector<SlotAward> awards;
  double welfare = 0.0;
  double revenue = 0.0;
  bool sold = false;
};

/// A posted offer: take-it-or-leave-it price with the slot the LP had in mind.
struct PriceOffer {
  int network = 0;
  double price = 0.0;
  std::size_t intended_slot = 0;
};

/// Slots 1..M to the highest bids; welfare only.
AuctionOutcome run_value_auction(std::span<const RealizedBid> bids, const SlotProfile& slots);

/// Slot r to the r-th highest bid at price discount_r * (r+1)-th bid.
AuctionOutcome run_gsp(std::span<const RealizedBid> bids, const SlotProfile& slots);

/// Single slot: the highest bid at or above `reserve` wins and pays
/// discount_1 * max(reserve, second-highest bid).
AuctionOutcome run_reserve_auction(std::span<const RealizedBid> bids, double reserve, const SlotProfile& slots);

/// Networks accept when their bid reaches the offered price; accepted offers
/// are placed greedily by price and pay discount * price.
AuctionOutcome run_posted(std::span<const PriceOffer> offers, std::span<const RealizedBid> bids,
                          const SlotProfile& slots);

/// E[Y] = sum_i prod_{i' < i} (1 - u_i') w_i for pairs ordered by w/u
/// non-increasing. Throws std::invalid_argument when the order is violated.
double stop_process_expectation(std::span<const std::pair<double, double>> pairs);

/// Sorts (w, u) pairs into the order stop_process_expectation expects.
void order_by_ratio(std::vector<std::pair<double, double>>& pairs);

/// Water-filling optimum of max sum v x_iv s.t. sum x_iv <= 1, x_iv <= p_iv.
double lpmax_bound(std::span<const BidDistribution> dists);

struct SalesProbability {
  double exact = 0.0;
  double lower = 0.0;  // 1 - exp(-c)
  double upper = 0.0;  // c
  double mass = 0.0;   // c = sum p_i x_i
};

SalesProbability sales_probability(std::span<const double> survival, std::span<const double> callout_prob);

}  // namespace callout
