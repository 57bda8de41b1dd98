#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "callout/bidmodel.hpp"
#include "callout/simplex.hpp"

namespace callout {

/// value-lp: one call-out variable per (network, type), welfare objective.
/// posted-lp: one call-out variable per (network, type, offered price).
enum class LpMode { kValue, kPosted };

std::string_view to_string(LpMode mode);
LpMode lp_mode_from_string(std::string_view name);

/// The sampled (or exact) relaxation over a finite set of impression types.
/// Repeated samples of one type are merged into one block with weight
/// count / samples.
struct SampleLp {
  LpMode mode = LpMode::kValue;
  SlotProfile slots;
  std::size_t num_networks = 0;
  /// Right-hand sides of the per-network rate constraints, already shrunk.
  std::vector<double> rate_limits;
  std::vector<int> type_ids;
  std::vector<double> weights;
  std::vector<const std::vector<BidDistribution>*> bids;
  int max_type_id = -1;

  std::size_t num_blocks() const { return type_ids.size(); }
};

/// The whole relaxation written out as one explicit LP.
struct MaterializedLp {
  LinearProgram lp;
  std::vector<int> rate_rows;
  /// slot_rows[block][slot]
  std::vector<std::vector<int>> slot_rows;
};
MaterializedLp materialize(const SampleLp& lp);

/// Builds the relaxation over the empirical distribution of `sample_ids`.
SampleLp build_sample_lp(const std::vector<ImpressionType>& types, std::span<const int> sample_ids,
                         std::span<const double> rho, const SlotProfile& slots, LpMode mode,
                         double shrink = 0.0);

/// Builds the relaxation over the true arrival probabilities.
SampleLp build_exact_lp(const std::vector<ImpressionType>& types, std::span<const double> rho,
                        const SlotProfile& slots, LpMode mode, double shrink = 0.0);

struct DualSolution {
  LpMode mode = LpMode::kValue;
  std::vector<double> lambda;
  /// tau[type id][slot]; rows of unobserved types are filled by fallback.
  std::vector<std::vector<double>> tau;
  std::vector<bool> observed;
  double objective = 0.0;
  double dual_objective = 0.0;
  double residual = 0.0;
  int iterations = 0;
  std::string method;
};

enum class SolveMethod { kAuto, kDirect, kDecomposed };

struct SolveOptions {
  SolveMethod method = SolveMethod::kAuto;
  /// Auto picks the direct solve while rows * cols stays below this.
  double direct_size_limit = 4.0e6;
  int max_rounds = 500;
  double gap_tol = 1e-9;
};

/// Solves the relaxation and extracts lambda (rate rows) and tau (slot rows,
/// normalized by block weight). Throws std::runtime_error with residuals on
/// failure.
DualSolution solve_for_duals(const SampleLp& lp, const SolveOptions& options = {});

/// Fills tau for types never sampled with the average over observed types of
/// the same vertical, else over all observed types.
void fill_unobserved_types(DualSolution& duals, const std::vector<ImpressionType>& types);

/// Value of the per-type block LP at fixed lambda, with its slot duals.
struct BlockSolution {
  double value = 0.0;        // objective including -lambda * usage
  double gross_value = 0.0;  // welfare / revenue part only
  std::vector<double> usage;
  std::vector<double> tau;
  int iterations = 0;
};
/// Column generation over call-out patterns: a pattern calls a set of
/// networks and places each bid level on its best slot at the current slot
/// prices; the small master over patterns prices the slots.
BlockSolution solve_block(const std::vector<BidDistribution>& bids, const SlotProfile& slots, LpMode mode,
                          std::span<const double> lambda);
/// The same block solved as one explicit LP.
BlockSolution solve_block_explicit(const std::vector<BidDistribution>& bids, const SlotProfile& slots, LpMode mode,
                                   std::span<const double> lambda);

/// Piecewise-constant map from a bid to the slot maximizing
/// discount * v - tau over the lines with a strictly positive value. Slot
/// index M (zero-based) is the virtual slot.
class SlotFunction {
 public:
  struct Piece {
    double lo;
    double hi;
    std::size_t slot;
  };

  SlotFunction(std::vector<double> tau, const SlotProfile& slots);

  std::size_t slot_at(double v) const;
  std::size_t virtual_slot() const { return discounts_.size(); }
  double discount(std::size_t slot) const { return slot < discounts_.size() ? discounts_[slot] : 0.0; }
  double tau(std::size_t slot) const { return slot < tau_.size() ? tau_[slot] : 0.0; }
  /// discount * v - tau on the winning line (0 for the virtual slot).
  double envelope(double v) const;
  /// Maximal open intervals of [0, upper] with a constant winner.
  std::vector<Piece> pieces(double upper) const;
  /// Bids where the winner can change.
  std::vector<double> breakpoints() const;

 private:
  std::vector<double> tau_;
  std::vector<double> discounts_;
};

SlotFunction slot_function(const DualSolution& duals, int type_id, const SlotProfile& slots);

/// max over slots with a discount different from slot 1 (virtual slot
/// included) of (tau_1 - tau_l) / (rho_1 - rho_l).
double v1_threshold(std::span<const double> tau, const SlotProfile& slots);
double v1_threshold(const DualSolution& duals, int type_id, const SlotProfile& slots);

/// Named invariant violations; empty when the duals are sound.
std::vector<std::string> check_dual_invariants(const DualSolution& duals, const SlotProfile& slots,
                                               double tolerance = 1e-6);

}  // namespace callout
