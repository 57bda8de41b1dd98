#pragma once

#include <string_view>
#include <utility>
#include <vector>

namespace callout {

/// max c.x  s.t.  A x <= b,  x >= 0,  with b >= 0 (the all-zero point is feasible).
class LinearProgram {
 public:
  explicit LinearProgram(int num_vars = 0) : num_vars_(num_vars), objective_(num_vars, 0.0) {}

  int add_variable(double objective_coeff);
  /// Appends `sum_k coeff_k x_{var_k} <= rhs`; returns the row index.
  int add_constraint(const std::vector<std::pair<int, double>>& terms, double rhs);
  void set_objective(int var, double coeff) { objective_[var] = coeff; }

  int num_vars() const { return num_vars_; }
  int num_rows() const { return static_cast<int>(rhs_.size()); }
  const std::vector<double>& objective() const { return objective_; }
  const std::vector<double>& rhs() const { return rhs_; }
  double coeff(int row, int var) const;
  const std::vector<std::pair<int, double>>& row_terms(int row) const { return rows_[row]; }

 private:
  int num_vars_;
  std::vector<double> objective_;
  std::vector<std::vector<std::pair<int, double>>> rows_;
  std::vector<double> rhs_;
};

enum class LpStatus { kOptimal, kUnbounded, kIterationLimit };

std::string_view to_string(LpStatus status);

struct LpResult {
  LpStatus status = LpStatus::kIterationLimit;
  double objective = 0.0;       // c.x
  double dual_objective = 0.0;  // b.y
  std::vector<double> primal;
  std::vector<double> duals;  // one per row, >= 0
  int iterations = 0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;

  bool optimal() const { return status == LpStatus::kOptimal; }
  /// |c.x - b.y| / max(1, |c.x|).
  double duality_gap() const;
};

struct SimplexOptions {
  int max_iterations = 0;  // 0: 50 * (rows + vars) + 1000
  double optimality_tol = 1e-10;
  double pivot_tol = 1e-11;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int degenerate_switch = 40;
};

/// Dense tableau primal simplex started from the slack basis.
LpResult solve_simplex(const LinearProgram& lp, const SimplexOptions& options = {});

/// Revised primal simplex for max c.x, A x <= b, x >= 0 with b >= 0, whose
/// columns may be appended between solves. Each solve resumes from the last
/// basis, which suits column generation masters.
class RevisedSimplex {
 public:
  explicit RevisedSimplex(std::vector<double> rhs, SimplexOptions options = {});

  int add_column(double objective, std::vector<std::pair<int, double>> terms);
  int num_columns() const { return static_cast<int>(columns_.size()); }
  int num_rows() const { return m_; }
  /// Primal has one entry per column; iterations counts this call only.
  LpResult solve();

 private:
  struct Column {
    double objective;
    std::vector<std::pair<int, double>> terms;
  };

  double basic_cost(int r) const;
  void reinvert();
  void compute_duals(std::vector<double>& y) const;

  int m_;
  std::vector<double> rhs_;
  SimplexOptions options_;
  std::vector<Column> columns_;
  std::vector<int> basis_;     // column index, or -1 - row for a slack
  std::vector<int> position_;  // basis row of each column, -1 when nonbasic
  std::vector<double> binv_;   // row-major m x m
  std::vector<double> xb_;
  int pivots_since_reinvert_ = 0;
};

}  // namespace callout
