#include "callout/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace callout {

int LinearProgram::add_variable(double objective_coeff) {
  objective_.push_back(objective_coeff);
  return num_vars_++;
}

int LinearProgram::add_constraint(const std::vector<std::pair<int, double>>& terms, double rhs) {
  if (rhs < 0.0) throw std::invalid_argument("LinearProgram: negative right-hand side");
  for (const auto& [var, coeff] : terms) {
    if (var < 0 || var >= num_vars_) throw std::out_of_range("LinearProgram: variable index");
    (void)coeff;
  }
  rows_.push_back(terms);
  rhs_.push_back(rhs);
  return static_cast<int>(rhs_.size()) - 1;
}

double LinearProgram::coeff(int row, int var) const {
  double acc = 0.0;
  for (const auto& [v, c] : rows_[row]) {
    if (v == var) acc += c;
  }
  return acc;
}

std::string_view to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal: return "optimal";
    case LpStatus::kUnbounded: return "unbounded";
    case LpStatus::kIterationLimit: return "iteration-limit";
  }
  return "unknown";
}

double LpResult::duality_gap() const {
  return std::abs(objective - dual_objective) / std::max(1.0, std::abs(objective));
}

namespace {

class Tableau {
 public:
  Tableau(const LinearProgram& lp) : m_(lp.num_rows()), n_(lp.num_vars()), width_(n_ + m_ + 1) {
    data_.assign(static_cast<std::size_t>(m_ + 1) * width_, 0.0);
    for (int j = 0; j < n_; ++j) at(0, j) = -lp.objective()[j];
    for (int i = 0; i < m_; ++i) {
      for (const auto& [var, coeff] : lp.row_terms(i)) at(i + 1, var) += coeff;
      at(i + 1, n_ + i) = 1.0;
      at(i + 1, width_ - 1) = lp.rhs()[i];
    }
    basis_.resize(m_);
    for (int i = 0; i < m_; ++i) basis_[i] = n_ + i;
  }

  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * width_ + c]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * width_ + c]; }
  int rows() const { return m_; }
  int cols() const { return width_ - 1; }
  double rhs(int r) const { return at(r, width_ - 1); }
  std::vector<int>& basis() { return basis_; }

  void pivot(int pr, int pc) {
    double* prow = &at(pr, 0);
    const double inv = 1.0 / prow[pc];
    for (int c = 0; c < width_; ++c) prow[c] *= inv;
    prow[pc] = 1.0;
    for (int r = 0; r <= m_; ++r) {
      if (r == pr) continue;
      double* row = &at(r, 0);
      const double factor = row[pc];
      if (factor == 0.0) continue;
      for (int c = 0; c < width_; ++c) {
        if (prow[c] != 0.0) row[c] -= factor * prow[c];
      }
      row[pc] = 0.0;
      if (r > 0 && row[width_ - 1] < 0.0 && row[width_ - 1] > -1e-12) row[width_ - 1] = 0.0;
    }
    basis_[pr - 1] = pc;
  }

 private:
  int m_;
  int n_;
  int width_;
  std::vector<double> data_;
  std::vector<int> basis_;
};

}  // namespace

LpResult solve_simplex(const LinearProgram& lp, const SimplexOptions& options) {
  Tableau t(lp);
  const int m = t.rows();
  const int n = lp.num_vars();
  const int cols = t.cols();
  const int max_iter = options.max_iterations > 0 ? options.max_iterations : 50 * (m + n) + 1000;

  LpResult result;
  bool bland = false;
  int degenerate_streak = 0;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    int enter = -1;
    double best = -options.optimality_tol;
    for (int c = 0; c < cols; ++c) {
      const double rc = t.at(0, c);
      if (rc < best) {
        enter = c;
        if (bland) break;
        best = rc;
      }
    }
    if (enter < 0) {
      result.status = LpStatus::kOptimal;
      break;
    }

    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int r = 1; r <= m; ++r) {
      const double a = t.at(r, enter);
      if (a <= options.pivot_tol) continue;
      const double ratio = t.rhs(r) / a;
      if (leave < 0 || ratio < best_ratio - 1e-12) {
        leave = r;
        best_ratio = ratio;
      } else if (ratio <= best_ratio + 1e-12) {
        const bool take = bland ? t.basis()[r - 1] < t.basis()[leave - 1] : a > t.at(leave, enter);
        if (take) {
          leave = r;
          best_ratio = std::min(best_ratio, ratio);
        }
      }
    }
    if (leave < 0) {
      result.status = LpStatus::kUnbounded;
      break;
    }
    if (best_ratio <= 1e-12) {
      if (++degenerate_streak > options.degenerate_switch) bland = true;
    } else {
      degenerate_streak = 0;
      bland = false;
    }
    t.pivot(leave, enter);
  }
  result.iterations = iter;

  result.primal.assign(n, 0.0);
  for (int r = 1; r <= m; ++r) {
    const int var = t.basis()[r - 1];
    if (var < n) result.primal[var] = std::max(0.0, t.rhs(r));
  }
  result.duals.assign(m, 0.0);
  for (int i = 0; i < m; ++i) result.duals[i] = std::max(0.0, t.at(0, n + i));

  const auto& c = lp.objective();
  for (int j = 0; j < n; ++j) result.objective += c[j] * result.primal[j];
  for (int i = 0; i < m; ++i) result.dual_objective += lp.rhs()[i] * result.duals[i];

  // Residuals against the original data.
  for (int i = 0; i < m; ++i) {
    double lhs = 0.0;
    for (const auto& [var, coeff] : lp.row_terms(i)) lhs += coeff * result.primal[var];
    result.primal_infeasibility = std::max(result.primal_infeasibility, lhs - lp.rhs()[i]);
  }
  std::vector<double> reduced(c.begin(), c.end());
  for (int i = 0; i < m; ++i) {
    for (const auto& [var, coeff] : lp.row_terms(i)) reduced[var] -= coeff * result.duals[i];
  }
  for (int j = 0; j < n; ++j) result.dual_infeasibility = std::max(result.dual_infeasibility, reduced[j]);
  return result;
}

RevisedSimplex::RevisedSimplex(std::vector<double> rhs, SimplexOptions options)
    : m_(static_cast<int>(rhs.size())), rhs_(std::move(rhs)), options_(options) {
  for (double b : rhs_) {
    if (b < 0.0) throw std::invalid_argument("RevisedSimplex: negative right-hand side");
  }
  basis_.resize(m_);
  binv_.assign(static_cast<std::size_t>(m_) * m_, 0.0);
  for (int i = 0; i < m_; ++i) {
    basis_[i] = -1 - i;
    binv_[static_cast<std::size_t>(i) * m_ + i] = 1.0;
  }
  xb_ = rhs_;
}

int RevisedSimplex::add_column(double objective, std::vector<std::pair<int, double>> terms) {
  for (const auto& [row, coeff] : terms) {
    if (row < 0 || row >= m_) throw std::out_of_range("RevisedSimplex: row index");
    (void)coeff;
  }
  columns_.push_back({objective, std::move(terms)});
  position_.push_back(-1);
  return num_columns() - 1;
}

double RevisedSimplex::basic_cost(int r) const { return basis_[r] >= 0 ? columns_[basis_[r]].objective : 0.0; }

void RevisedSimplex::compute_duals(std::vector<double>& y) const {
  y.assign(m_, 0.0);
  for (int r = 0; r < m_; ++r) {
    const double c = basic_cost(r);
    if (c == 0.0) continue;
    const double* row = &binv_[static_cast<std::size_t>(r) * m_];
    for (int k = 0; k < m_; ++k) y[k] += c * row[k];
  }
}

void RevisedSimplex::reinvert() {
  // Gauss-Jordan on [B | I] with partial pivoting.
  const std::size_t m = static_cast<std::size_t>(m_);
  std::vector<double> a(m * m, 0.0);
  for (int r = 0; r < m_; ++r) {
    if (basis_[r] < 0) {
      a[static_cast<std::size_t>(-1 - basis_[r]) * m + r] = 1.0;
    } else {
      for (const auto& [row, coeff] : columns_[basis_[r]].terms) a[static_cast<std::size_t>(row) * m + r] += coeff;
    }
  }
  std::vector<double> inv(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) inv[i * m + i] = 1.0;
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < m; ++r) {
      if (std::abs(a[r * m + c]) > std::abs(a[p * m + c])) p = r;
    }
    if (std::abs(a[p * m + c]) < 1e-14) throw std::runtime_error("RevisedSimplex: singular basis");
    if (p != c) {
      for (std::size_t k = 0; k < m; ++k) {
        std::swap(a[p * m + k], a[c * m + k]);
        std::swap(inv[p * m + k], inv[c * m + k]);
      }
    }
    const double d = 1.0 / a[c * m + c];
    for (std::size_t k = 0; k < m; ++k) {
      a[c * m + k] *= d;
      inv[c * m + k] *= d;
    }
    for (std::size_t r = 0; r < m; ++r) {
      const double f = a[r * m + c];
      if (r == c || f == 0.0) continue;
      for (std::size_t k = 0; k < m; ++k) {
        a[r * m + k] -= f * a[c * m + k];
        inv[r * m + k] -= f * inv[c * m + k];
      }
    }
  }
  // inv = B^{-1}; row r belongs to basis position r.
  binv_ = std::move(inv);
  for (int r = 0; r < m_; ++r) {
    double x = 0.0;
    const double* row = &binv_[static_cast<std::size_t>(r) * m_];
    for (int k = 0; k < m_; ++k) x += row[k] * rhs_[k];
    xb_[r] = x < 0.0 && x > -1e-9 ? 0.0 : x;
  }
  pivots_since_reinvert_ = 0;
}

LpResult RevisedSimplex::solve() {
  const int n = num_columns();
  const int max_iter = options_.max_iterations > 0 ? options_.max_iterations : 50 * (m_ + n) + 1000;
  LpResult result;
  std::vector<double> y;
  std::vector<double> alpha(m_);
  bool bland = false;
  int degenerate_streak = 0;
  int iter = 0;
  for (; iter < max_iter; ++iter) {
    if (pivots_since_reinvert_ >= 100) reinvert();
    compute_duals(y);
    // Candidates are ordered columns first, then slacks, for Bland's rule.
    int enter = -1;
    double best = options_.optimality_tol;
    for (int j = 0; j < n && !(bland && enter >= 0); ++j) {
      if (position_[j] >= 0) continue;
      double d = columns_[j].objective;
      for (const auto& [row, coeff] : columns_[j].terms) d -= y[row] * coeff;
      if (d > best) {
        enter = j;
        best = bland ? best : d;
      }
    }
    std::vector<char> slack_basic(m_, 0);
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] < 0) slack_basic[-1 - basis_[r]] = 1;
    }
    for (int i = 0; i < m_ && !(bland && enter >= 0); ++i) {
      const double d = -y[i];
      if (d > best && !slack_basic[i]) {
        enter = n + i;
        best = bland ? best : d;
      }
    }
    if (enter < 0) {
      if (pivots_since_reinvert_ > 0) {
        reinvert();
        --iter;
        continue;
      }
      result.status = LpStatus::kOptimal;
      break;
    }

    if (enter < n) {
      std::fill(alpha.begin(), alpha.end(), 0.0);
      for (const auto& [row, coeff] : columns_[enter].terms) {
        for (int r = 0; r < m_; ++r) alpha[r] += binv_[static_cast<std::size_t>(r) * m_ + row] * coeff;
      }
    } else {
      for (int r = 0; r < m_; ++r) alpha[r] = binv_[static_cast<std::size_t>(r) * m_ + (enter - n)];
    }
    auto order = [&](int r) { return basis_[r] >= 0 ? basis_[r] : n + (-1 - basis_[r]); };
    int leave = -1;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (int r = 0; r < m_; ++r) {
      const double a = alpha[r];
      if (a <= options_.pivot_tol) continue;
      const double ratio = std::max(xb_[r], 0.0) / a;
      if (leave < 0 || ratio < best_ratio - 1e-12) {
        leave = r;
        best_ratio = ratio;
      } else if (ratio <= best_ratio + 1e-12) {
        const bool take = bland ? order(r) < order(leave) : a > alpha[leave];
        if (take) {
          leave = r;
          best_ratio = std::min(best_ratio, ratio);
        }
      }
    }
    if (leave < 0) {
      result.status = LpStatus::kUnbounded;
      break;
    }
    if (best_ratio <= 1e-12) {
      if (++degenerate_streak > options_.degenerate_switch) bland = true;
    } else {
      degenerate_streak = 0;
      bland = false;
    }

    const double pivot = alpha[leave];
    double* prow = &binv_[static_cast<std::size_t>(leave) * m_];
    for (int k = 0; k < m_; ++k) prow[k] /= pivot;
    const double step = std::max(xb_[leave], 0.0) / pivot;
    for (int r = 0; r < m_; ++r) {
      if (r == leave || alpha[r] == 0.0) continue;
      double* row = &binv_[static_cast<std::size_t>(r) * m_];
      const double f = alpha[r];
      for (int k = 0; k < m_; ++k) row[k] -= f * prow[k];
      xb_[r] -= f * step;
      if (xb_[r] < 0.0 && xb_[r] > -1e-12) xb_[r] = 0.0;
    }
    xb_[leave] = step;
    if (basis_[leave] >= 0) position_[basis_[leave]] = -1;
    basis_[leave] = enter < n ? enter : -1 - (enter - n);
    if (enter < n) position_[enter] = leave;
    ++pivots_since_reinvert_;
  }
  result.iterations = iter;

  result.primal.assign(n, 0.0);
  for (int r = 0; r < m_; ++r) {
    if (basis_[r] >= 0) result.primal[basis_[r]] = std::max(0.0, xb_[r]);
  }
  compute_duals(y);
  result.duals.assign(m_, 0.0);
  for (int i = 0; i < m_; ++i) result.duals[i] = std::max(0.0, y[i]);
  std::vector<double> lhs(m_, 0.0);
  for (int j = 0; j < n; ++j) {
    result.objective += columns_[j].objective * result.primal[j];
    double d = columns_[j].objective;
    for (const auto& [row, coeff] : columns_[j].terms) {
      lhs[row] += coeff * result.primal[j];
      d -= coeff * result.duals[row];
    }
    result.dual_infeasibility = std::max(result.dual_infeasibility, d);
  }
  for (int i = 0; i < m_; ++i) {
    result.dual_objective += rhs_[i] * result.duals[i];
    result.primal_infeasibility = std::max(result.primal_infeasibility, lhs[i] - rhs_[i]);
  }
  return result;
}

}  // namespace callout
