#include "callout/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace callout {

namespace {

std::vector<RealizedBid> rank(std::span<const RealizedBid> bids) {
  std::vector<RealizedBid> ranked(bids.begin(), bids.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const RealizedBid& a, const RealizedBid& b) {
    return a.bid != b.bid ? a.bid > b.bid : a.network < b.network;
  });
  return ranked;
}

AuctionOutcome allocate_ranked(std::span<const RealizedBid> bids, const SlotProfile& slots, bool charge_gsp) {
  AuctionOutcome out;
  out.ranked = rank(bids);
  const std::size_t filled = std::min(out.ranked.size(), slots.size());
  for (std::size_t r = 0; r < filled; ++r) {
    const double next = r + 1 < out.ranked.size() ? out.ranked[r + 1].bid : 0.0;
    SlotAward award{r, out.ranked[r].network, out.ranked[r].bid, charge_gsp ? slots.discount(r) * next : 0.0};
    out.welfare += slots.discount(r) * award.bid;
    out.revenue += award.payment;
    out.sold = out.sold || award.bid > 0.0;
    out.awards.push_back(award);
  }
  return out;
}

}  // namespace

AuctionOutcome run_value_auction(std::span<const RealizedBid> bids, const SlotProfile& slots) {
  return allocate_ranked(bids, slots, false);
}

AuctionOutcome run_gsp(std::span<const RealizedBid> bids, const SlotProfile& slots) {
  return allocate_ranked(bids, slots, true);
}

AuctionOutcome run_reserve_auction(std::span<const RealizedBid> bids, double reserve, const SlotProfile& slots) {
  if (reserve < 0.0) throw std::invalid_argument("run_reserve_auction: negative reserve");
  AuctionOutcome out;
  out.ranked = rank(bids);
  if (out.ranked.empty() || out.ranked.front().bid < reserve) return out;
  const double runner_up = out.ranked.size() > 1 ? out.ranked[1].bid : 0.0;
  SlotAward award{0, out.ranked.front().network, out.ranked.front().bid,
                  slots.discount(0) * std::max(reserve, runner_up)};
  out.welfare = slots.discount(0) * award.bid;
  out.revenue = award.payment;
  out.sold = true;
  out.awards.push_back(award);
  return out;
}

AuctionOutcome run_posted(std::span<const PriceOffer> offers, std::span<const RealizedBid> bids,
                          const SlotProfile& slots) {
  AuctionOutcome out;
  out.ranked = rank(bids);
  std::vector<std::pair<PriceOffer, double>> accepted;
  for (const PriceOffer& offer : offers) {
    const auto it = std::find_if(bids.begin(), bids.end(), [&](const RealizedBid& b) { return b.network == offer.network; });
    if (it != bids.end() && it->bid >= offer.price) accepted.push_back({offer, it->bid});
  }
  std::stable_sort(accepted.begin(), accepted.end(), [](const auto& a, const auto& b) {
    return a.first.price != b.first.price ? a.first.price > b.first.price : a.first.network < b.first.network;
  });
  const std::size_t filled = std::min(accepted.size(), slots.size());
  for (std::size_t r = 0; r < filled; ++r) {
    const auto& [offer, bid] = accepted[r];
    SlotAward award{r, offer.network, bid, slots.discount(r) * offer.price};
    out.welfare += slots.discount(r) * bid;
    out.revenue += award.payment;
    out.awards.push_back(award);
  }
  out.sold = !out.awards.empty();
  return out;
}

void order_by_ratio(std::vector<std::pair<double, double>>& pairs) {
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
    // w_a / u_a > w_b / u_b without dividing.
    return a.first * b.second > b.first * a.second;
  });
}

double stop_process_expectation(std::span<const std::pair<double, double>> pairs) {
  double reach = 1.0;
  double total = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const double w = pairs[k].first;
    double u = pairs[k].second;
    if (u < -1e-9 || u > 1.0 + 1e-9 || w < 0.0) throw std::invalid_argument("stop_process_expectation: pair out of range");
    u = std::clamp(u, 0.0, 1.0);
    if (k > 0) {
      const auto [wp, up] = pairs[k - 1];
      if (wp * u < w * up - 1e-12 * std::max(1.0, w * up)) {
        throw std::invalid_argument("stop_process_expectation: pairs not ordered by w/u");
      }
    }
    total += reach * w;
    reach *= 1.0 - u;
  }
  return total;
}

double lpmax_bound(std::span<const BidDistribution> dists) {
  std::vector<std::pair<double, double>> atoms;
  for (const auto& d : dists) {
    for (std::size_t k = 0; k < d.size(); ++k) atoms.push_back({d.values()[k], d.probs()[k]});
  }
  std::sort(atoms.begin(), atoms.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  double remaining = 1.0;
  double value = 0.0;
  for (const auto& [v, p] : atoms) {
    if (remaining <= 0.0) break;
    const double take = std::min(p, remaining);
    value += v * take;
    remaining -= take;
  }
  return value;
}

SalesProbability sales_probability(std::span<const double> survival, std::span<const double> callout_prob) {
  if (survival.size() != callout_prob.size()) throw std::invalid_argument("sales_probability: size mismatch");
  SalesProbability out;
  double none = 1.0;
  for (std::size_t i = 0; i < survival.size(); ++i) {
    const double p = survival[i];
    const double x = callout_prob[i];
    if (p < 0.0 || p > 1.0 || x < 0.0 || x > 1.0) throw std::invalid_argument("sales_probability: entry outside [0,1]");
    none *= 1.0 - p * x;
    out.mass += p * x;
  }
  out.exact = 1.0 - none;
  out.lower = 1.0 - std::exp(-out.mass);
  out.upper = out.mass;
  return out;
}

}  // namespace callout
