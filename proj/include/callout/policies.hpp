#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "callout/bidmodel.hpp"
#include "callout/constraints.hpp"
#include "callout/duals.hpp"
#include "callout/mechanisms.hpp"

namespace callout {

enum class PolicyKind {
  kLpVal,
  kLpGsp,
  kLpPost,
  kRandom,
  kMaxRemBand,
  kMaxProb,
  kMaxExp,
  kThRandom,
  kThMaxRemBand,
  kThProb,
  kThLp,
  kAdvCutoff,
};

std::string to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& s);
const std::vector<PolicyKind>& all_policy_kinds();
bool is_lp_policy(PolicyKind kind);
bool is_set_policy(PolicyKind kind);
bool is_threshold_policy(PolicyKind kind);

/// How LP-Val compares a network's interest against its multiplier.
/// kGross: sum v * discount(l(v)) * p >= lambda.
/// kReduced: sum (v * discount(l(v)) - tau_l(v)) * p >= lambda.
enum class ScoreRule { kGross, kReduced };
std::string to_string(ScoreRule rule);
ScoreRule score_rule_from_string(const std::string& s);

struct PolicyParams {
  PolicyKind kind = PolicyKind::kLpVal;
  int k = 1;
  double threshold = 1.0;
  double delta = 0.25;
  ScoreRule score_rule = ScoreRule::kGross;
};

enum class MechanismKind { kNone, kValueAuction, kGspRegular, kSingleSlotReserve, kPosted };
std::string to_string(MechanismKind kind);

/// (w, u) pairs for one slot, ordered by w/u non-increasing.
struct SlotDiagnostics {
  std::size_t slot = 0;
  std::vector<int> networks;
  std::vector<std::pair<double, double>> pairs;
};

struct CallOutDecision {
  std::vector<int> callouts;
  MechanismKind mechanism = MechanismKind::kNone;
  double reserve = 0.0;
  std::vector<PriceOffer> offers;
  std::vector<SlotDiagnostics> diagnostics;
  /// Reserve-analysis quantities (LP-GSP only).
  double v1 = 0.0;
  std::size_t psi_size = 0;
};

/// Smallest support point v with 2 v Pr[V >= v] >= sum_{v' >= v} v' Pr[V = v'].
double mhr_reserve(const BidDistribution& dist);

/// Per (type, network) quantities derived from the duals, computed once.
struct NetworkTerms {
  double gross_score = 0.0;
  double reduced_score = 0.0;
  double slot1_tail = 0.0;  // sum_{v >= v1} v p
  double mhr = 0.0;
  std::vector<double> w;  // per slot
  std::vector<double> u;
  double post_price = 0.0;
  double post_value = 0.0;
  std::size_t post_slot = 0;
};

struct TypeTerms {
  double v1 = 0.0;
  std::vector<NetworkTerms> networks;
};

TypeTerms compute_type_terms(const ImpressionType& type, const DualSolution& duals, const SlotProfile& slots);

struct ReserveChoice {
  double reserve = 0.0;
  double z = 0.0;
  std::vector<int> psi;
  bool mhr_case = false;
};

/// Reserve for the single-slot auction over the called set `called`.
ReserveChoice choose_reserve(const TypeTerms& terms, std::span<const int> called);

/// Expands {delta/2, delta, ..., 1} after rounding delta down to a negative
/// power of two. `rounded` receives true when delta had to be adjusted.
std::vector<double> cutoff_set(double delta, bool* rounded = nullptr);

/// A configured policy over a fixed set of believed impression types.
class Policy {
 public:
  /// `duals` is required for the LP-based kinds and ignored otherwise.
  Policy(PolicyParams params, const std::vector<ImpressionType>& types, const SlotProfile& slots,
         const DualSolution* duals);

  /// Draws per-run randomness (the adv-cutoff threshold).
  void start_run(Rng& rng);

  CallOutDecision decide(int type_id, const CapacityState& capacity, Rng& rng) const;

  const PolicyParams& params() const { return params_; }
  const TypeTerms& terms(int type_id) const { return terms_.at(type_id); }
  double cutoff() const { return cutoff_; }
  /// Whether network i would pass the LP cut-off on this type.
  bool lp_interested(int type_id, int i) const;

 private:
  CallOutDecision decide_lp_val(int j, const CapacityState& capacity) const;
  CallOutDecision decide_lp_gsp(int j, const CapacityState& capacity) const;
  CallOutDecision decide_lp_post(int j, const CapacityState& capacity) const;
  CallOutDecision decide_baseline(int j, const CapacityState& capacity, Rng& rng) const;
  CallOutDecision decide_adv_cutoff(int j, const CapacityState& capacity) const;
  void add_diagnostics(int j, CallOutDecision& d) const;

  PolicyParams params_;
  const std::vector<ImpressionType>* types_;
  SlotProfile slots_;
  const DualSolution* duals_;
  std::vector<TypeTerms> terms_;
  double cutoff_ = 1.0;
};

}  // namespace callout
