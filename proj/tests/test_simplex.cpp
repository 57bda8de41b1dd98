#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "callout/simplex.hpp"

using namespace callout;

TEST_CASE("textbook LP") {
  // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), 36
  LinearProgram lp(2);
  lp.set_objective(0, 3);
  lp.set_objective(1, 5);
  lp.add_constraint({{0, 1}}, 4);
  lp.add_constraint({{1, 2}}, 12);
  lp.add_constraint({{0, 3}, {1, 2}}, 18);
  const auto r = solve_simplex(lp);
  REQUIRE(r.optimal());
  CHECK(r.objective == doctest::Approx(36));
  CHECK(r.primal[0] == doctest::Approx(2));
  CHECK(r.primal[1] == doctest::Approx(6));
  CHECK(r.duals[0] == doctest::Approx(0));
  CHECK(r.duals[1] == doctest::Approx(1.5));
  CHECK(r.duals[2] == doctest::Approx(1));
  CHECK(r.dual_objective == doctest::Approx(36));
}

TEST_CASE("unbounded LP is reported") {
  LinearProgram lp(2);
  lp.set_objective(0, 1);
  lp.add_constraint({{1, 1}}, 1);
  CHECK(solve_simplex(lp).status == LpStatus::kUnbounded);
}

TEST_CASE("negative right-hand sides are rejected") {
  LinearProgram lp(1);
  CHECK_THROWS(lp.add_constraint({{0, 1}}, -1));
}

TEST_CASE("degenerate LP terminates") {
  // Many constraints through the origin.
  LinearProgram lp(3);
  lp.set_objective(0, 1);
  lp.set_objective(1, 1);
  lp.set_objective(2, 1);
  lp.add_constraint({{0, 1}, {1, -1}}, 0);
  lp.add_constraint({{1, 1}, {2, -1}}, 0);
  lp.add_constraint({{2, 1}, {0, -1}}, 0);
  lp.add_constraint({{0, 1}, {1, 1}, {2, 1}}, 3);
  const auto r = solve_simplex(lp);
  REQUIRE(r.optimal());
  CHECK(r.objective == doctest::Approx(3));
}

TEST_CASE("random packing LPs satisfy strong duality and feasibility") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(u(rng) * 12);
    const int m = 1 + static_cast<int>(u(rng) * 12);
    LinearProgram lp(n);
    for (int j = 0; j < n; ++j) lp.set_objective(j, u(rng) * 2 - 0.5);
    for (int i = 0; i < m; ++i) {
      std::vector<std::pair<int, double>> terms;
      for (int j = 0; j < n; ++j) {
        if (u(rng) < 0.6) terms.push_back({j, u(rng) * 2 - 0.3});
      }
      lp.add_constraint(terms, u(rng) * 3);
    }
    // Box every variable so the LP stays bounded.
    for (int j = 0; j < n; ++j) lp.add_constraint({{j, 1.0}}, 1.0 + u(rng));
    const auto r = solve_simplex(lp);
    REQUIRE(r.optimal());
    CHECK(r.duality_gap() <= 1e-9);
    CHECK(r.primal_infeasibility <= 1e-9);
    CHECK(r.dual_infeasibility <= 1e-9);
  }
}

TEST_CASE("revised simplex resumes after columns are appended") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 1 + static_cast<int>(u(rng) * 10);
    const int batches = 1 + static_cast<int>(u(rng) * 5);
    std::vector<double> rhs(m);
    for (double& b : rhs) b = 0.2 + u(rng) * 3;
    // The last row caps the sum of all columns, keeping the LP bounded.
    rhs.back() = 1.0 + u(rng);
    RevisedSimplex incremental(rhs);
    LinearProgram reference(0);
    std::vector<std::vector<std::pair<int, double>>> rows(m);
    for (int batch = 0; batch < batches; ++batch) {
      const int added = 1 + static_cast<int>(u(rng) * 8);
      for (int k = 0; k < added; ++k) {
        const double c = u(rng) * 2 - 0.3;
        std::vector<std::pair<int, double>> terms;
        for (int i = 0; i + 1 < m; ++i) {
          if (u(rng) < 0.6) terms.push_back({i, u(rng) * 2 - 0.3});
        }
        terms.push_back({m - 1, 1.0});
        incremental.add_column(c, terms);
        const int var = reference.add_variable(c);
        for (const auto& [row, coeff] : terms) rows[row].push_back({var, coeff});
      }
      LinearProgram lp(reference.num_vars());
      for (int j = 0; j < reference.num_vars(); ++j) lp.set_objective(j, reference.objective()[j]);
      for (int i = 0; i < m; ++i) lp.add_constraint(rows[i], rhs[i]);
      const auto want = solve_simplex(lp);
      const auto got = incremental.solve();
      CAPTURE(trial);
      REQUIRE(got.optimal());
      CHECK(got.objective == doctest::Approx(want.objective).epsilon(1e-9));
      CHECK(got.duality_gap() <= 1e-9);
      CHECK(got.primal_infeasibility <= 1e-9);
      CHECK(got.dual_infeasibility <= 1e-9);
    }
  }
}
