#include "callout/duals.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace callout {

std::string_view to_string(LpMode mode) { return mode == LpMode::kValue ? "value-lp" : "posted-lp"; }

LpMode lp_mode_from_string(std::string_view name) {
  if (name == "value-lp") return LpMode::kValue;
  if (name == "posted-lp") return LpMode::kPosted;
  throw std::invalid_argument("unknown LP mode: " + std::string(name));
}

namespace {

using Terms = std::vector<std::pair<int, double>>;

struct BlockIndex {
  std::vector<Terms> usage;  // per network
  std::vector<int> slot_rows;
  Terms gross;  // per-unit welfare coefficients (unweighted)
};

// Appends LP2 (value) or LP5 (posted) for one impression type. The welfare
// part of the objective is scaled by `weight`; `lambda`, when non-empty, is
// charged per unit of call-out usage.
BlockIndex append_block(LinearProgram& lp, const std::vector<BidDistribution>& bids, const SlotProfile& slots,
                        LpMode mode, double weight, std::span<const double> lambda) {
  const std::size_t n = bids.size();
  const std::size_t m = slots.size();
  BlockIndex index;
  index.usage.resize(n);
  std::vector<Terms> slot_terms(m);

  for (std::size_t i = 0; i < n; ++i) {
    const double price = lambda.empty() ? 0.0 : lambda[i];
    const BidDistribution& dist = bids[i];
    if (mode == LpMode::kValue) {
      const int x = lp.add_variable(-price);
      lp.add_constraint({{x, 1.0}}, 1.0);
      index.usage[i].push_back({x, 1.0});
      for (std::size_t k = 0; k < dist.size(); ++k) {
        const double v = dist.values()[k];
        const double p = dist.probs()[k];
        if (v <= 0.0 || p <= 0.0) continue;
        Terms link;
        for (std::size_t l = 0; l < m; ++l) {
          if (slots.discount(l) <= 0.0) continue;
          const int y = lp.add_variable(weight * v * slots.discount(l));
          index.gross.push_back({y, v * slots.discount(l)});
          link.push_back({y, 1.0});
          slot_terms[l].push_back({y, 1.0});
        }
        if (link.empty()) continue;
        link.push_back({x, -p});
        lp.add_constraint(link, 0.0);
      }
    } else {
      Terms offer_cap;
      for (std::size_t k = 0; k < dist.size(); ++k) {
        const double v = dist.values()[k];
        const double accept = dist.survival_at(k);
        if (v <= 0.0 || accept <= 0.0) continue;
        const int x = lp.add_variable(-price);
        offer_cap.push_back({x, 1.0});
        index.usage[i].push_back({x, 1.0});
        Terms link;
        for (std::size_t l = 0; l < m; ++l) {
          if (slots.discount(l) <= 0.0) continue;
          const int y = lp.add_variable(weight * v * slots.discount(l));
          index.gross.push_back({y, v * slots.discount(l)});
          link.push_back({y, 1.0});
          slot_terms[l].push_back({y, 1.0});
        }
        link.push_back({x, -accept});
        lp.add_constraint(link, 0.0);
      }
      if (!offer_cap.empty()) lp.add_constraint(offer_cap, 1.0);
    }
  }
  for (std::size_t l = 0; l < m; ++l) index.slot_rows.push_back(lp.add_constraint(slot_terms[l], 1.0));
  return index;
}

double eval_terms(const Terms& terms, const std::vector<double>& x) {
  double acc = 0.0;
  for (const auto& [var, coeff] : terms) acc += coeff * x[var];
  return acc;
}

DualSolution empty_solution(const SampleLp& lp) {
  DualSolution out;
  out.mode = lp.mode;
  out.lambda.assign(lp.num_networks, 0.0);
  const std::size_t types = static_cast<std::size_t>(std::max(lp.max_type_id + 1, 0));
  out.tau.assign(types, std::vector<double>(lp.slots.size(), 0.0));
  out.observed.assign(types, false);
  return out;
}

DualSolution solve_direct(const SampleLp& sample) {
  MaterializedLp full = materialize(sample);
  LpResult res = solve_simplex(full.lp);
  if (!res.optimal()) {
    std::ostringstream msg;
    msg << "sampled LP solve failed: status=" << to_string(res.status) << " iterations=" << res.iterations
        << " primal_infeasibility=" << res.primal_infeasibility
        << " dual_infeasibility=" << res.dual_infeasibility;
    throw std::runtime_error(msg.str());
  }
  DualSolution out = empty_solution(sample);
  for (std::size_t i = 0; i < sample.num_networks; ++i) out.lambda[i] = res.duals[full.rate_rows[i]];
  for (std::size_t b = 0; b < sample.num_blocks(); ++b) {
    const int id = sample.type_ids[b];
    out.observed[id] = true;
    for (std::size_t l = 0; l < sample.slots.size(); ++l) {
      out.tau[id][l] = res.duals[full.slot_rows[b][l]] / sample.weights[b];
    }
  }
  out.objective = res.objective;
  out.dual_objective = res.dual_objective;
  out.residual = res.duality_gap();
  out.iterations = res.iterations;
  out.method = "direct";
  return out;
}

struct Column {
  std::size_t block;
  double gross;
  std::vector<double> usage;
};

// Dantzig-Wolfe column generation: the master prices the rate rows, each
// block is re-solved at those prices, and the gap between the master value
// and the Lagrangian bound certifies optimality.
DualSolution solve_decomposed(const SampleLp& sample, const SolveOptions& options) {
  const std::size_t n = sample.num_networks;
  const std::size_t blocks = sample.num_blocks();
  std::vector<Column> columns;
  std::vector<double> lambda(n, 0.0);
  std::vector<double> convexity(blocks, 0.0);
  std::vector<BlockSolution> latest(blocks);
  double lower = 0.0;
  double upper = 0.0;
  int round = 0;
  int master_iterations = 0;

  std::vector<double> master_rhs(sample.rate_limits.begin(), sample.rate_limits.end());
  master_rhs.resize(n + blocks, 1.0);
  RevisedSimplex master(std::move(master_rhs));
  std::size_t posted = 0;

  for (; round < options.max_rounds; ++round) {
    if (round > 0) {
      for (; posted < columns.size(); ++posted) {
        const Column& col = columns[posted];
        const double weight = sample.weights[col.block];
        Terms terms;
        for (std::size_t i = 0; i < n; ++i) {
          if (col.usage[i] != 0.0) terms.push_back({static_cast<int>(i), weight * col.usage[i]});
        }
        terms.push_back({static_cast<int>(n + col.block), 1.0});
        master.add_column(weight * col.gross, std::move(terms));
      }
      LpResult res = master.solve();
      master_iterations += res.iterations;
      if (!res.optimal()) {
        std::ostringstream msg;
        msg << "master LP failed at round " << round << ": status=" << to_string(res.status)
            << " columns=" << columns.size();
        throw std::runtime_error(msg.str());
      }
      lower = res.objective;
      for (std::size_t i = 0; i < n; ++i) lambda[i] = res.duals[i];
      for (std::size_t b = 0; b < blocks; ++b) convexity[b] = res.duals[n + b];
    }

    upper = 0.0;
    for (std::size_t i = 0; i < n; ++i) upper += lambda[i] * sample.rate_limits[i];
    bool added = false;
    for (std::size_t b = 0; b < blocks; ++b) {
      latest[b] = solve_block(*sample.bids[b], sample.slots, sample.mode, lambda);
      upper += sample.weights[b] * latest[b].value;
      if (latest[b].value - convexity[b] > 1e-10 * (1.0 + std::abs(latest[b].value))) {
        columns.push_back({b, latest[b].gross_value, latest[b].usage});
        added = true;
      }
    }
    if (round > 0 && (!added || upper - lower <= options.gap_tol * std::max(1.0, std::abs(upper)))) break;
  }
  if (round >= options.max_rounds) {
    std::ostringstream msg;
    msg << "column generation hit the round cap: lower=" << lower << " upper=" << upper;
    throw std::runtime_error(msg.str());
  }

  DualSolution out = empty_solution(sample);
  out.lambda = lambda;
  for (std::size_t b = 0; b < blocks; ++b) {
    const int id = sample.type_ids[b];
    out.observed[id] = true;
    out.tau[id] = latest[b].tau;
  }
  out.objective = lower;
  out.dual_objective = upper;
  out.residual = std::abs(upper - lower) / std::max(1.0, std::abs(upper));
  out.iterations = master_iterations;
  out.method = "decomposed";
  return out;
}

void validate_rates(std::span<const double> rho, std::size_t networks) {
  if (rho.size() != networks) throw std::invalid_argument("build_sample_lp: one rate per network required");
  for (double r : rho) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("build_sample_lp: rate outside [0, 1]");
  }
}

}  // namespace

MaterializedLp materialize(const SampleLp& sample) {
  MaterializedLp out;
  std::vector<Terms> rate_terms(sample.num_networks);
  for (std::size_t b = 0; b < sample.num_blocks(); ++b) {
    BlockIndex idx = append_block(out.lp, *sample.bids[b], sample.slots, sample.mode, sample.weights[b], {});
    for (std::size_t i = 0; i < sample.num_networks; ++i) {
      for (const auto& [var, coeff] : idx.usage[i]) rate_terms[i].push_back({var, coeff * sample.weights[b]});
    }
    out.slot_rows.push_back(idx.slot_rows);
  }
  for (std::size_t i = 0; i < sample.num_networks; ++i) {
    out.rate_rows.push_back(out.lp.add_constraint(rate_terms[i], sample.rate_limits[i]));
  }
  return out;
}

SampleLp build_sample_lp(const std::vector<ImpressionType>& types, std::span<const int> sample_ids,
                         std::span<const double> rho, const SlotProfile& slots, LpMode mode, double shrink) {
  if (sample_ids.empty()) throw std::invalid_argument("build_sample_lp: empty sample set");
  if (types.empty()) throw std::invalid_argument("build_sample_lp: no impression types");
  const std::size_t n = types.front().bids.size();
  validate_rates(rho, n);
  std::map<int, int> counts;
  for (int id : sample_ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= types.size()) {
      throw std::out_of_range("build_sample_lp: sampled type id out of range");
    }
    ++counts[id];
  }
  SampleLp out;
  out.mode = mode;
  out.slots = slots;
  out.num_networks = n;
  for (double r : rho) out.rate_limits.push_back((1.0 - shrink) * r);
  for (const auto& [id, count] : counts) {
    out.type_ids.push_back(id);
    out.weights.push_back(static_cast<double>(count) / static_cast<double>(sample_ids.size()));
    out.bids.push_back(&types[id].bids);
  }
  out.max_type_id = static_cast<int>(types.size()) - 1;
  return out;
}

SampleLp build_exact_lp(const std::vector<ImpressionType>& types, std::span<const double> rho,
                        const SlotProfile& slots, LpMode mode, double shrink) {
  if (types.empty()) throw std::invalid_argument("build_exact_lp: no impression types");
  const std::size_t n = types.front().bids.size();
  validate_rates(rho, n);
  SampleLp out;
  out.mode = mode;
  out.slots = slots;
  out.num_networks = n;
  for (double r : rho) out.rate_limits.push_back((1.0 - shrink) * r);
  for (std::size_t j = 0; j < types.size(); ++j) {
    if (types[j].arrival_prob <= 0.0) continue;
    out.type_ids.push_back(static_cast<int>(j));
    out.weights.push_back(types[j].arrival_prob);
    out.bids.push_back(&types[j].bids);
  }
  out.max_type_id = static_cast<int>(types.size()) - 1;
  return out;
}

BlockSolution solve_block_explicit(const std::vector<BidDistribution>& bids, const SlotProfile& slots, LpMode mode,
                                   std::span<const double> lambda) {
  LinearProgram lp;
  BlockIndex idx = append_block(lp, bids, slots, mode, 1.0, lambda);
  const LpResult res = solve_simplex(lp);
  if (!res.optimal()) throw std::runtime_error("block LP failed: status=" + std::string(to_string(res.status)));
  BlockSolution out;
  out.value = res.objective;
  out.gross_value = eval_terms(idx.gross, res.primal);
  out.usage.resize(bids.size());
  for (std::size_t i = 0; i < bids.size(); ++i) out.usage[i] = eval_terms(idx.usage[i], res.primal);
  for (int row : idx.slot_rows) out.tau.push_back(res.duals[row]);
  out.iterations = res.iterations;
  return out;
}

namespace {

struct Pattern {
  double net = 0.0;      // welfare minus lambda over called networks
  double reduced = 0.0;  // net - tau . slot_use at the pricing tau
  std::vector<double> slot_use;
  std::vector<int> called;
};

// Best pattern at slot prices tau: each network contributes its envelope
// gain net of lambda when that is positive.
Pattern price_pattern(const std::vector<BidDistribution>& bids, const SlotProfile& slots, LpMode mode,
                      std::span<const double> lambda, const std::vector<double>& tau) {
  const std::size_t m = slots.size();
  Pattern best;
  best.slot_use.assign(m, 0.0);
  std::vector<double> use(m);
  auto best_slot = [&](double v, double& gain) {
    std::size_t pick = m;
    gain = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
      const double g = slots.discount(l) * v - tau[l];
      if (g > gain) {
        gain = g;
        pick = l;
      }
    }
    return pick;
  };
  for (std::size_t i = 0; i < bids.size(); ++i) {
    const BidDistribution& d = bids[i];
    const double price = lambda.empty() ? 0.0 : lambda[i];
    std::fill(use.begin(), use.end(), 0.0);
    double net = 0.0;
    double gross = 0.0;
    if (mode == LpMode::kValue) {
      for (std::size_t k = 0; k < d.size(); ++k) {
        const double v = d.values()[k];
        const double p = d.probs()[k];
        if (v <= 0.0 || p <= 0.0) continue;
        double gain = 0.0;
        const std::size_t l = best_slot(v, gain);
        if (l == m) continue;
        net += p * gain;
        gross += p * slots.discount(l) * v;
        use[l] += p;
      }
    } else {
      std::size_t pick_l = m;
      double pick_accept = 0.0;
      double pick_v = 0.0;
      for (std::size_t k = 0; k < d.size(); ++k) {
        const double v = d.values()[k];
        const double accept = d.survival_at(k);
        if (v <= 0.0 || accept <= 0.0) continue;
        double gain = 0.0;
        const std::size_t l = best_slot(v, gain);
        if (l == m || accept * gain <= net) continue;
        net = accept * gain;
        pick_l = l;
        pick_accept = accept;
        pick_v = v;
      }
      if (pick_l < m) {
        gross = pick_accept * slots.discount(pick_l) * pick_v;
        use[pick_l] = pick_accept;
      }
    }
    if (net - price <= 0.0) continue;
    best.reduced += net - price;
    best.net += gross - price;
    for (std::size_t l = 0; l < m; ++l) best.slot_use[l] += use[l];
    best.called.push_back(static_cast<int>(i));
  }
  return best;
}

}  // namespace

BlockSolution solve_block(const std::vector<BidDistribution>& bids, const SlotProfile& slots, LpMode mode,
                          std::span<const double> lambda) {
  const std::size_t m = slots.size();
  const std::size_t n = bids.size();
  std::vector<Pattern> patterns;
  std::vector<double> tau(m, 0.0);
  double theta = 0.0;
  LpResult master;
  int iterations = 0;
  const int cap = 10000;
  for (; iterations < cap; ++iterations) {
    Pattern next = price_pattern(bids, slots, mode, lambda, tau);
    // The master is solved to a 1e-10 reduced-cost tolerance, so a known
    // pattern can reappear with a tiny positive reduced cost.
    if (next.reduced <= theta + 1e-9 * (1.0 + std::abs(theta))) break;
    const bool known = std::any_of(patterns.begin(), patterns.end(), [&](const Pattern& p) {
      return p.called == next.called && p.slot_use == next.slot_use;
    });
    if (known) break;
    patterns.push_back(std::move(next));
    LinearProgram lp(static_cast<int>(patterns.size()));
    std::vector<Terms> rows(m + 1);
    for (std::size_t c = 0; c < patterns.size(); ++c) {
      const int var = static_cast<int>(c);
      lp.set_objective(var, patterns[c].net);
      for (std::size_t l = 0; l < m; ++l) {
        if (patterns[c].slot_use[l] != 0.0) rows[l].push_back({var, patterns[c].slot_use[l]});
      }
      rows[m].push_back({var, 1.0});
    }
    for (const Terms& row : rows) lp.add_constraint(row, 1.0);
    master = solve_simplex(lp);
    if (!master.optimal()) {
      throw std::runtime_error("block master failed: status=" + std::string(to_string(master.status)));
    }
    for (std::size_t l = 0; l < m; ++l) tau[l] = master.duals[l];
    theta = master.duals[m];
  }
  if (iterations >= cap) throw std::runtime_error("block column generation hit the iteration cap");

  BlockSolution out;
  out.usage.assign(n, 0.0);
  out.tau = tau;
  out.iterations = iterations;
  for (std::size_t c = 0; c < patterns.size(); ++c) {
    const double mu = master.primal[c];
    if (mu == 0.0) continue;
    out.value += mu * patterns[c].net;
    for (int i : patterns[c].called) out.usage[i] += mu;
  }
  out.gross_value = out.value;
  for (std::size_t i = 0; i < n; ++i) out.gross_value += (lambda.empty() ? 0.0 : lambda[i]) * out.usage[i];
  return out;
}

DualSolution solve_for_duals(const SampleLp& lp, const SolveOptions& options) {
  if (lp.num_blocks() == 0) throw std::invalid_argument("solve_for_duals: empty LP");
  SolveMethod method = options.method;
  if (method == SolveMethod::kAuto) {
    // Rough tableau size of the explicit LP.
    double vars = 0.0;
    double rows = static_cast<double>(lp.num_networks);
    for (std::size_t b = 0; b < lp.num_blocks(); ++b) {
      for (const auto& dist : *lp.bids[b]) {
        vars += 1.0 + static_cast<double>(dist.size() * (lp.slots.size() + (lp.mode == LpMode::kPosted ? 1 : 0)));
        rows += 1.0 + static_cast<double>(dist.size());
      }
      rows += static_cast<double>(lp.slots.size());
    }
    method = rows * (rows + vars) <= options.direct_size_limit ? SolveMethod::kDirect : SolveMethod::kDecomposed;
  }
  return method == SolveMethod::kDirect ? solve_direct(lp) : solve_decomposed(lp, options);
}

void fill_unobserved_types(DualSolution& duals, const std::vector<ImpressionType>& types) {
  const std::size_t m = duals.tau.empty() ? 0 : duals.tau.front().size();
  std::map<int, std::pair<std::vector<double>, int>> by_vertical;
  std::vector<double> overall(m, 0.0);
  int overall_count = 0;
  for (std::size_t j = 0; j < types.size() && j < duals.tau.size(); ++j) {
    if (!duals.observed[j]) continue;
    auto& [sum, count] = by_vertical[types[j].vertical];
    sum.resize(m, 0.0);
    for (std::size_t l = 0; l < m; ++l) {
      sum[l] += duals.tau[j][l];
      overall[l] += duals.tau[j][l];
    }
    ++count;
    ++overall_count;
  }
  for (std::size_t j = 0; j < types.size() && j < duals.tau.size(); ++j) {
    if (duals.observed[j]) continue;
    const auto it = by_vertical.find(types[j].vertical);
    if (it != by_vertical.end()) {
      for (std::size_t l = 0; l < m; ++l) duals.tau[j][l] = it->second.first[l] / it->second.second;
    } else if (overall_count > 0) {
      for (std::size_t l = 0; l < m; ++l) duals.tau[j][l] = overall[l] / overall_count;
    }
  }
}

SlotFunction::SlotFunction(std::vector<double> tau, const SlotProfile& slots)
    : tau_(std::move(tau)), discounts_(slots.discounts()) {
  if (tau_.size() != discounts_.size()) throw std::invalid_argument("SlotFunction: tau/slot size mismatch");
}

std::size_t SlotFunction::slot_at(double v) const {
  std::size_t best = virtual_slot();
  double best_value = 0.0;
  for (std::size_t l = 0; l < discounts_.size(); ++l) {
    const double value = discounts_[l] * v - tau_[l];
    if (value > best_value) {
      best_value = value;
      best = l;
    }
  }
  return best;
}

double SlotFunction::envelope(double v) const {
  const std::size_t l = slot_at(v);
  return l == virtual_slot() ? 0.0 : discounts_[l] * v - tau_[l];
}

std::vector<double> SlotFunction::breakpoints() const {
  std::vector<double> points;
  const std::size_t m = discounts_.size();
  for (std::size_t a = 0; a <= m; ++a) {
    for (std::size_t b = a + 1; b <= m; ++b) {
      const double ra = discount(a);
      const double rb = discount(b);
      if (ra == rb) continue;
      const double x = (tau(a) - tau(b)) / (ra - rb);
      if (x >= 0.0) points.push_back(x);
    }
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  return points;
}

std::vector<SlotFunction::Piece> SlotFunction::pieces(double upper) const {
  std::vector<double> cuts{0.0};
  for (double x : breakpoints()) {
    if (x > 0.0 && x < upper) cuts.push_back(x);
  }
  cuts.push_back(upper);
  std::vector<Piece> out;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    const std::size_t slot = slot_at(mid);
    if (!out.empty() && out.back().slot == slot) {
      out.back().hi = cuts[k + 1];
    } else {
      out.push_back({cuts[k], cuts[k + 1], slot});
    }
  }
  return out;
}

SlotFunction slot_function(const DualSolution& duals, int type_id, const SlotProfile& slots) {
  return SlotFunction(duals.tau.at(static_cast<std::size_t>(type_id)), slots);
}

double v1_threshold(std::span<const double> tau, const SlotProfile& slots) {
  const std::size_t m = slots.size();
  const double r1 = slots.discount(0);
  double best = 0.0;
  bool any = false;
  for (std::size_t l = 1; l <= m; ++l) {
    const double rl = slots.discount(l);
    if (rl == r1) continue;
    const double tl = l < m ? tau[l] : 0.0;
    const double candidate = (tau[0] - tl) / (r1 - rl);
    best = any ? std::max(best, candidate) : candidate;
    any = true;
  }
  return any ? std::max(best, 0.0) : 0.0;
}

double v1_threshold(const DualSolution& duals, int type_id, const SlotProfile& slots) {
  return v1_threshold(duals.tau.at(static_cast<std::size_t>(type_id)), slots);
}

std::vector<std::string> check_dual_invariants(const DualSolution& duals, const SlotProfile& slots,
                                               double tolerance) {
  std::vector<std::string> issues;
  for (std::size_t i = 0; i < duals.lambda.size(); ++i) {
    if (duals.lambda[i] < -tolerance) issues.push_back("lambda-nonnegative: network " + std::to_string(i));
  }
  for (std::size_t j = 0; j < duals.tau.size(); ++j) {
    const auto& tau = duals.tau[j];
    if (tau.size() != slots.size()) {
      issues.push_back("tau-shape: type " + std::to_string(j));
      continue;
    }
    for (std::size_t l = 0; l < tau.size(); ++l) {
      if (tau[l] < -tolerance) issues.push_back("tau-nonnegative: type " + std::to_string(j));
    }
    for (std::size_t l = 1; l < tau.size(); ++l) {
      const double r_prev = slots.discount(l - 1);
      const double r = slots.discount(l);
      if (r <= 0.0) continue;
      if (r == r_prev) {
        if (std::abs(tau[l] - tau[l - 1]) > tolerance * std::max(1.0, tau[l - 1])) {
          issues.push_back("tau-equal-discounts: type " + std::to_string(j) + " slot " + std::to_string(l + 1));
        }
      } else if (tau[l] / r > tau[l - 1] / r_prev + tolerance * std::max(1.0, tau[l - 1] / r_prev)) {
        issues.push_back("tau-ratio-monotone: type " + std::to_string(j) + " slot " + std::to_string(l + 1));
      }
    }
  }
  if (duals.residual > tolerance) issues.push_back("strong-duality: residual " + std::to_string(duals.residual));
  return issues;
}

}  // namespace callout
