#include "callout/policies.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace callout {

namespace {

struct KindName {
  PolicyKind kind;
  const char* name;
};

constexpr KindName kKindNames[] = {
    {PolicyKind::kLpVal, "lp-val"},
    {PolicyKind::kLpGsp, "lp-gsp"},
    {PolicyKind::kLpPost, "lp-post"},
    {PolicyKind::kRandom, "random"},
    {PolicyKind::kMaxRemBand, "max-rem-band"},
    {PolicyKind::kMaxProb, "max-prob"},
    {PolicyKind::kMaxExp, "max-exp"},
    {PolicyKind::kThRandom, "th-random"},
    {PolicyKind::kThMaxRemBand, "th-max-rem-band"},
    {PolicyKind::kThProb, "th-prob"},
    {PolicyKind::kThLp, "th-lp"},
    {PolicyKind::kAdvCutoff, "adv-cutoff"},
};

// Stable descending order by key; equal keys keep ascending network id.
std::vector<int> order_by(std::vector<double> const& key) {
  std::vector<int> idx(key.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return key[a] > key[b]; });
  return idx;
}

}  // namespace

std::string to_string(PolicyKind kind) {
  for (const auto& kn : kKindNames) {
    if (kn.kind == kind) return kn.name;
  }
  return "unknown";
}

PolicyKind policy_kind_from_string(const std::string& s) {
  for (const auto& kn : kKindNames) {
    if (s == kn.name) return kn.kind;
  }
  throw std::invalid_argument("unknown policy: " + s);
}

const std::vector<PolicyKind>& all_policy_kinds() {
  static const std::vector<PolicyKind> kinds = [] {
    std::vector<PolicyKind> out;
    for (const auto& kn : kKindNames) out.push_back(kn.kind);
    return out;
  }();
  return kinds;
}

bool is_lp_policy(PolicyKind kind) {
  return kind == PolicyKind::kLpVal || kind == PolicyKind::kLpGsp || kind == PolicyKind::kLpPost ||
         kind == PolicyKind::kThLp;
}

bool is_set_policy(PolicyKind kind) {
  return kind == PolicyKind::kRandom || kind == PolicyKind::kMaxRemBand || kind == PolicyKind::kMaxProb ||
         kind == PolicyKind::kMaxExp;
}

bool is_threshold_policy(PolicyKind kind) {
  return kind == PolicyKind::kThRandom || kind == PolicyKind::kThMaxRemBand || kind == PolicyKind::kThProb ||
         kind == PolicyKind::kThLp;
}

std::string to_string(ScoreRule rule) { return rule == ScoreRule::kGross ? "gross" : "reduced"; }

ScoreRule score_rule_from_string(const std::string& s) {
  if (s == "gross") return ScoreRule::kGross;
  if (s == "reduced") return ScoreRule::kReduced;
  throw std::invalid_argument("unknown score rule: " + s);
}

std::string to_string(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::kNone: return "none";
    case MechanismKind::kValueAuction: return "value-auction";
    case MechanismKind::kGspRegular: return "gsp-regular";
    case MechanismKind::kSingleSlotReserve: return "single-slot-reserve";
    case MechanismKind::kPosted: return "posted";
  }
  return "unknown";
}

double mhr_reserve(const BidDistribution& dist) {
  if (dist.size() == 0) throw std::invalid_argument("mhr_reserve: empty distribution");
  // Suffix sums of v * p, walked from the top.
  const auto& v = dist.values();
  const auto& p = dist.probs();
  std::vector<double> tail(v.size() + 1, 0.0);
  for (std::size_t k = v.size(); k-- > 0;) tail[k] = tail[k + 1] + v[k] * p[k];
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (p[k] <= 0.0) continue;
    if (2.0 * v[k] * dist.survival_at(k) >= tail[k] * (1.0 - 1e-12)) return v[k];
  }
  return dist.max_value();
}

TypeTerms compute_type_terms(const ImpressionType& type, const DualSolution& duals, const SlotProfile& slots) {
  TypeTerms out;
  const auto& tau = duals.tau.at(type.id);
  const SlotFunction sf(tau, slots);
  out.v1 = v1_threshold(tau, slots);
  const std::size_t m = slots.size();
  for (const auto& d : type.bids) {
    NetworkTerms t;
    t.w.assign(m, 0.0);
    t.u.assign(m, 0.0);
    for (std::size_t k = 0; k < d.size(); ++k) {
      const double v = d.values()[k];
      const double p = d.probs()[k];
      const std::size_t l = sf.slot_at(v);
      if (l < m) {
        t.gross_score += v * sf.discount(l) * p;
        t.reduced_score += (v * sf.discount(l) - sf.tau(l)) * p;
        t.w[l] += v * p;
        t.u[l] += p;
      }
      if (v > 0.0) {
        const double value = sf.envelope(v) * d.survival_at(k);
        if (value > t.post_value) {
          t.post_value = value;
          t.post_price = v;
          t.post_slot = l;
        }
      }
    }
    t.slot1_tail = d.tail_value(out.v1);
    t.mhr = d.size() > 0 ? mhr_reserve(d) : 0.0;
    out.networks.push_back(std::move(t));
  }
  return out;
}

ReserveChoice choose_reserve(const TypeTerms& terms, std::span<const int> called) {
  if (called.empty()) throw std::invalid_argument("choose_reserve: empty call-out set");
  ReserveChoice out;
  double psi_mass = 0.0;
  int best = -1;
  for (int i : called) {
    const auto& t = terms.networks[i];
    out.z += t.slot1_tail;
    if (terms.v1 <= t.mhr) {
      out.psi.push_back(i);
      psi_mass += t.slot1_tail;
      if (best < 0 || t.slot1_tail > terms.networks[best].slot1_tail) best = i;
    }
  }
  const double e2 = std::exp(2.0);
  if (best >= 0 && psi_mass >= 7.0 * e2 * out.z / (7.0 * e2 + 1.0)) {
    out.reserve = terms.networks[best].mhr;
    out.mhr_case = true;
  } else {
    out.reserve = terms.v1;
  }
  return out;
}

std::vector<double> cutoff_set(double delta, bool* rounded) {
  if (!(delta > 0.0) || delta > 1.0) throw std::invalid_argument("cutoff_set: delta must lie in (0, 1]");
  const double exponent = std::floor(std::log2(delta) + 1e-12);
  const double snapped = std::exp2(exponent);
  if (rounded) *rounded = std::abs(snapped - delta) > 1e-12 * delta;
  std::vector<double> h;
  for (double c = snapped / 2.0; c <= 1.0 + 1e-12; c *= 2.0) h.push_back(c);
  return h;
}

Policy::Policy(PolicyParams params, const std::vector<ImpressionType>& types, const SlotProfile& slots,
               const DualSolution* duals)
    : params_(params), types_(&types), slots_(slots), duals_(duals) {
  for (std::size_t j = 0; j < types.size(); ++j) {
    if (types[j].id != static_cast<int>(j)) throw std::invalid_argument("Policy: type ids must equal their index");
  }
  if (is_lp_policy(params_.kind)) {
    if (!duals_) throw std::invalid_argument("Policy: " + to_string(params_.kind) + " needs duals");
    const LpMode want = params_.kind == PolicyKind::kLpPost ? LpMode::kPosted : LpMode::kValue;
    if (duals_->mode != want) throw std::invalid_argument("Policy: duals were solved in the wrong mode");
    if (duals_->tau.size() < types.size()) throw std::invalid_argument("Policy: duals cover too few types");
    for (const auto& type : types) terms_.push_back(compute_type_terms(type, *duals_, slots_));
  }
  if (is_set_policy(params_.kind) && params_.k < 1) throw std::invalid_argument("Policy: k must be positive");
  if (is_threshold_policy(params_.kind) && !(params_.threshold > 0.0)) {
    throw std::invalid_argument("Policy: threshold must be positive");
  }
  if (params_.kind == PolicyKind::kAdvCutoff) cutoff_set(params_.delta);
}

void Policy::start_run(Rng& rng) {
  if (params_.kind != PolicyKind::kAdvCutoff) return;
  const auto h = cutoff_set(params_.delta);
  cutoff_ = h[std::uniform_int_distribution<std::size_t>(0, h.size() - 1)(rng)];
}

bool Policy::lp_interested(int type_id, int i) const {
  const auto& t = terms_.at(type_id).networks.at(i);
  // At the optimum a binding network's lambda equals the score of the type
  // it serves fractionally; solver roundoff may put lambda just above it.
  const double lambda = duals_->lambda[i];
  const double cut = lambda - 1e-9 * std::max(1.0, lambda);
  if (params_.kind == PolicyKind::kLpPost) return t.post_value > 0.0 && t.post_value >= cut;
  const double score = params_.score_rule == ScoreRule::kGross ? t.gross_score : t.reduced_score;
  return score >= cut;
}

CallOutDecision Policy::decide(int type_id, const CapacityState& capacity, Rng& rng) const {
  if (type_id < 0 || type_id >= static_cast<int>(types_->size())) throw std::out_of_range("Policy: bad type id");
  switch (params_.kind) {
    case PolicyKind::kLpVal: return decide_lp_val(type_id, capacity);
    case PolicyKind::kLpGsp: return decide_lp_gsp(type_id, capacity);
    case PolicyKind::kLpPost: return decide_lp_post(type_id, capacity);
    case PolicyKind::kAdvCutoff: return decide_adv_cutoff(type_id, capacity);
    default: return decide_baseline(type_id, capacity, rng);
  }
}

void Policy::add_diagnostics(int j, CallOutDecision& d) const {
  const auto& terms = terms_[j];
  for (std::size_t l = 0; l < slots_.size(); ++l) {
    SlotDiagnostics diag;
    diag.slot = l;
    std::vector<std::pair<std::pair<double, double>, int>> entries;
    for (int i : d.callouts) {
      const auto& t = terms.networks[i];
      if (t.u[l] > 0.0) entries.push_back({{t.w[l], t.u[l]}, i});
    }
    std::stable_sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
      return a.first.first * b.first.second > b.first.first * a.first.second;
    });
    for (const auto& [pair, i] : entries) {
      diag.pairs.push_back(pair);
      diag.networks.push_back(i);
    }
    d.diagnostics.push_back(std::move(diag));
  }
}

CallOutDecision Policy::decide_lp_val(int j, const CapacityState& capacity) const {
  CallOutDecision d;
  const int n = static_cast<int>((*types_)[j].bids.size());
  for (int i = 0; i < n; ++i) {
    if (lp_interested(j, i) && capacity.available(i)) d.callouts.push_back(i);
  }
  if (!d.callouts.empty()) d.mechanism = MechanismKind::kValueAuction;
  add_diagnostics(j, d);
  return d;
}

CallOutDecision Policy::decide_lp_gsp(int j, const CapacityState& capacity) const {
  CallOutDecision d = decide_lp_val(j, capacity);
  const auto& terms = terms_[j];
  d.v1 = terms.v1;
  if (d.callouts.empty()) {
    d.mechanism = MechanismKind::kNone;
    return d;
  }
  double lhs = 0.0;
  double rhs = 0.0;
  for (int i : d.callouts) {
    lhs += terms.networks[i].gross_score;
    rhs += slots_.discount(0) * terms.networks[i].slot1_tail;
  }
  const ReserveChoice choice = choose_reserve(terms, d.callouts);
  d.psi_size = choice.psi.size();
  if (lhs >= 3.0 * rhs && lhs > 0.0) {
    d.mechanism = MechanismKind::kGspRegular;
  } else {
    d.mechanism = MechanismKind::kSingleSlotReserve;
    d.reserve = choice.reserve;
  }
  return d;
}

CallOutDecision Policy::decide_lp_post(int j, const CapacityState& capacity) const {
  CallOutDecision d;
  const auto& terms = terms_[j];
  const int n = static_cast<int>((*types_)[j].bids.size());
  for (int i = 0; i < n; ++i) {
    if (!lp_interested(j, i) || !capacity.available(i)) continue;
    const auto& t = terms.networks[i];
    d.callouts.push_back(i);
    d.offers.push_back({i, t.post_price, t.post_slot});
  }
  if (!d.callouts.empty()) d.mechanism = MechanismKind::kPosted;
  return d;
}

CallOutDecision Policy::decide_baseline(int j, const CapacityState& capacity, Rng& rng) const {
  const ImpressionType& type = (*types_)[j];
  const int n = static_cast<int>(type.bids.size());
  std::vector<int> order;
  switch (params_.kind) {
    case PolicyKind::kRandom:
    case PolicyKind::kThRandom:
      order.resize(n);
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      break;
    case PolicyKind::kMaxRemBand:
    case PolicyKind::kThMaxRemBand: {
      std::vector<double> key(n);
      for (int i = 0; i < n; ++i) key[i] = capacity.remaining(i);
      order = order_by(key);
      break;
    }
    case PolicyKind::kMaxProb:
    case PolicyKind::kThProb: order = order_by(type.sale_prob); break;
    case PolicyKind::kMaxExp: order = order_by(type.expected_bid); break;
    case PolicyKind::kThLp: {
      std::vector<double> key(n);
      for (int i = 0; i < n; ++i) {
        const auto& t = terms_[j].networks[i];
        const double score = params_.score_rule == ScoreRule::kGross ? t.gross_score : t.reduced_score;
        key[i] = score - duals_->lambda[i];
      }
      for (int i : order_by(key)) {
        if (key[i] >= 0.0) order.push_back(i);
      }
      break;
    }
    default: throw std::invalid_argument("decide_baseline: not a baseline kind");
  }

  CallOutDecision d;
  if (is_set_policy(params_.kind)) {
    for (int i : order) {
      if (static_cast<int>(d.callouts.size()) >= params_.k) break;
      if (capacity.available(i)) d.callouts.push_back(i);
    }
  } else {
    double acc = 0.0;
    for (int i : order) {
      if (acc >= params_.threshold) break;
      const double s = type.sale_prob[i];
      if (s <= 0.0 || !capacity.available(i)) continue;
      if (acc + s <= params_.threshold) {
        d.callouts.push_back(i);
        acc += s;
      } else {
        const double q = (params_.threshold - acc) / s;
        if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < q) d.callouts.push_back(i);
        break;
      }
    }
  }
  if (!d.callouts.empty()) d.mechanism = MechanismKind::kValueAuction;
  return d;
}

CallOutDecision Policy::decide_adv_cutoff(int j, const CapacityState& capacity) const {
  const ImpressionType& type = (*types_)[j];
  const int cap = static_cast<int>(std::floor(2.0 / cutoff_ + 1e-9));
  CallOutDecision d;
  for (int i = 0; i < static_cast<int>(type.bids.size()); ++i) {
    if (static_cast<int>(d.callouts.size()) >= cap) break;
    const double s = type.sale_prob[i];
    if (s >= cutoff_ && s <= 2.0 * cutoff_ && capacity.available(i)) d.callouts.push_back(i);
  }
  if (!d.callouts.empty()) d.mechanism = MechanismKind::kValueAuction;
  return d;
}

}  // namespace callout
