#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "pibound/errors.hpp"
#include "pibound/lp.hpp"
#include "pibound/rng.hpp"

using namespace pibound;
using namespace pibound::testing;

namespace {

LinearProgram box_lp(int n, std::vector<double> obj, double lo, double hi) {
  LinearProgram lp;
  lp.n_vars = n;
  lp.objective = std::move(obj);
  lp.var_lower.assign(n, lo);
  lp.var_upper.assign(n, hi);
  return lp;
}

void check_optimality_certificates(const LinearProgram& lp, const LpSolution& sol) {
  REQUIRE(sol.status == LpStatus::Optimal);
  double rhs_inf = 0.0;
  for (const auto& c : lp.constraints) rhs_inf = std::max(rhs_inf, std::abs(c.rhs));

  for (int i = 0; i < lp.n_vars; ++i) {
    CHECK(sol.primal[i] >= lp.var_lower[i] - 1e-9 * (1.0 + rhs_inf));
    CHECK(sol.primal[i] <= lp.var_upper[i] + 1e-9 * (1.0 + rhs_inf));
  }
  for (std::size_t j = 0; j < lp.constraints.size(); ++j) {
    if (lp.constraints[j].relation == Relation::Eq)
      CHECK(std::abs(sol.slacks[j]) <= 1e-7 * (1.0 + rhs_inf));
    else
      CHECK(sol.slacks[j] >= -1e-7 * (1.0 + rhs_inf));
  }
  // Strong duality.
  CHECK(std::abs(sol.value - dual_objective(lp, sol)) <= 1e-8 * (1.0 + std::abs(sol.value)));
  // Complementary slackness.
  for (std::size_t j = 0; j < lp.constraints.size(); ++j)
    CHECK(std::abs(sol.duals[j] * sol.slacks[j]) <= 1e-7 * (1.0 + rhs_inf));
  // Dual signs consistent with the problem sense.
  for (std::size_t j = 0; j < lp.constraints.size(); ++j) {
    if (lp.constraints[j].relation != Relation::Leq) continue;
    if (lp.sense == Sense::Minimize)
      CHECK(sol.duals[j] <= 1e-9);
    else
      CHECK(sol.duals[j] >= -1e-9);
  }
}

}  // namespace

TEST_CASE("box minimum with no moment constraints") {
  LinearProgram lp = box_lp(1, {1.0}, 0.0, 1.0);
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.value == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sol.primal[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(sol.active_set.empty());
  const UniquenessReport uniq = assess_solution_uniqueness(lp, sol);
  CHECK(uniq.primal_unique);
  CHECK(uniq.dual_unique);
}

TEST_CASE("contradictory half-lines are infeasible") {
  LinearProgram lp = box_lp(1, {1.0}, -5.0, 5.0);
  lp.constraints.push_back({{1.0}, 0.0, Relation::Leq});    // theta <= 0
  lp.constraints.push_back({{-1.0}, -1.0, Relation::Leq});  // theta >= 1
  CHECK(solve_lp(lp).status == LpStatus::Infeasible);
}

TEST_CASE("degenerate transport vertex: value, dual, alternative optima") {
  LinearProgram lp = box_lp(2, {-1.0, -1.0}, 0.0, 1.0);
  lp.constraints.push_back({{1.0, 1.0}, 1.0, Relation::Leq});

  // Oracle first: enumerate all vertices of the 2-D polytope.
  const VertexOracleResult oracle = enumerate_vertices(lp);
  REQUIRE(oracle.feasible);
  CHECK(oracle.min_value == doctest::Approx(-1.0).epsilon(1e-12));

  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.value == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(sol.duals[0] == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(sol.active_set == std::vector<int>{0});
  check_optimality_certificates(lp, sol);
  // The optimal face is the whole segment {x+y=1}; a zero reduced cost on a
  // nonbasic variable flags the alternative optima.
  CHECK_FALSE(assess_solution_uniqueness(lp, sol).primal_unique);
}

TEST_CASE("flat objective flags non-unique primal") {
  LinearProgram lp = box_lp(1, {0.0}, 0.0, 1.0);
  const LpSolution sol = solve_lp(lp);
  CHECK_FALSE(assess_solution_uniqueness(lp, sol).primal_unique);
}

TEST_CASE("duplicated constraint flags non-unique duals") {
  LinearProgram lp = box_lp(1, {-1.0}, 0.0, 1.0);
  lp.constraints.push_back({{1.0}, 0.5, Relation::Leq});
  lp.constraints.push_back({{1.0}, 0.5, Relation::Leq});
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.value == doctest::Approx(-0.5));
  CHECK_FALSE(assess_solution_uniqueness(lp, sol).dual_unique);

  // Two distinct dual vectors attain the optimal dual value: all multiplier
  // mass on either copy of the constraint.
  for (const std::vector<double>& y :
       {std::vector<double>{-1.0, 0.0}, std::vector<double>{0.0, -1.0}}) {
    LpSolution hand = sol;
    hand.duals = y;
    hand.reduced_costs = {0.0};
    CHECK(dual_objective(lp, hand) == doctest::Approx(-0.5));
  }
}

TEST_CASE("native equality rows carry free-signed duals") {
  LinearProgram lp = box_lp(2, {1.0, 2.0}, -4.0, 4.0);
  lp.constraints.push_back({{1.0, 1.0}, 1.0, Relation::Eq});
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  // min x + 2y s.t. x + y = 1: x = 4 forces y = -3, value 4 - 6 = -2.
  CHECK(sol.value == doctest::Approx(-2.0));
  CHECK(sol.duals[0] == doctest::Approx(2.0));  // raising the rhs raises the value via y
  check_optimality_certificates(lp, sol);
}

TEST_CASE("maximization sign convention") {
  LinearProgram lp = box_lp(2, {1.0, 1.0}, 0.0, 1.0);
  lp.sense = Sense::Maximize;
  lp.constraints.push_back({{1.0, 1.0}, 1.0, Relation::Leq});
  const LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.value == doctest::Approx(1.0));
  CHECK(sol.duals[0] == doctest::Approx(1.0));  // relaxing the cap raises the max
  check_optimality_certificates(lp, sol);
}

TEST_CASE("unbounded detection with an open box") {
  LinearProgram lp = box_lp(1, {-1.0}, 0.0, std::numeric_limits<double>::infinity());
  CHECK(solve_lp(lp).status == LpStatus::Unbounded);
}

TEST_CASE("iteration cap raises a solver error") {
  LinearProgram lp = box_lp(2, {-1.0, -1.0}, 0.0, 1.0);
  lp.constraints.push_back({{1.0, 1.0}, 1.0, Relation::Leq});
  SolverOptions opt;
  opt.max_iterations = 1;
  CHECK_THROWS_AS(solve_lp(lp, opt), SolverError);
}

TEST_CASE("validate_lp names the offending field") {
  LinearProgram lp = box_lp(2, {1.0}, 0.0, 1.0);  // objective too short
  CHECK_THROWS_WITH_AS(solve_lp(lp), doctest::Contains("objective"), ValidationError);
  LinearProgram lp2 = box_lp(1, {1.0}, 1.0, 0.0);  // crossed bounds
  CHECK_THROWS_WITH_AS(solve_lp(lp2), doctest::Contains("var_lower"), ValidationError);
}

TEST_CASE("dump_lp writes one constraint per line") {
  LinearProgram lp = box_lp(2, {1.0, -1.0}, 0.0, 1.0);
  lp.constraints.push_back({{1.0, 1.0}, 1.0, Relation::Leq});
  lp.constraints.push_back({{1.0, -1.0}, 0.0, Relation::Eq});
  const std::string text = dump_lp(lp);
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);  // header + 2 rows + bounds
  CHECK(text.find("<=") != std::string::npos);
  CHECK(text.find("==") != std::string::npos);
}

TEST_CASE("random LPs agree with vertex enumeration and satisfy certificates") {
  RngStream rng(2024, 0xabcdef, 0);
  int optimal = 0, infeasible = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const LinearProgram lp = random_small_lp(rng);
    const VertexOracleResult oracle = enumerate_vertices(lp);
    const LpSolution sol = solve_lp(lp);
    if (!oracle.feasible) {
      CHECK(sol.status == LpStatus::Infeasible);
      ++infeasible;
      continue;
    }
    REQUIRE(sol.status == LpStatus::Optimal);
    const double expected = lp.sense == Sense::Minimize ? oracle.min_value : oracle.max_value;
    CHECK(std::abs(sol.value - expected) <= 1e-8 * (1.0 + std::abs(expected)));
    check_optimality_certificates(lp, sol);
    ++optimal;
  }
  CHECK(optimal > 100);
  CHECK(infeasible > 10);
}

TEST_CASE("determinism: identical solves produce identical certificates") {
  RngStream rng(7, 0xabcdef, 1);
  for (int trial = 0; trial < 50; ++trial) {
    const LinearProgram lp = random_small_lp(rng);
    const LpSolution a = solve_lp(lp);
    const LpSolution b = solve_lp(lp);
    REQUIRE(a.status == b.status);
    if (a.status != LpStatus::Optimal) continue;
    CHECK(a.value == b.value);
    CHECK(a.primal == b.primal);
    CHECK(a.duals == b.duals);
    CHECK(a.active_set == b.active_set);
    CHECK(a.reduced_costs == b.reduced_costs);
  }
}

TEST_CASE("assignment polytope: degenerate vertices match the permutation oracle") {
  // min c.x over the 3x3 Birkhoff polytope; optima are permutation matrices,
  // and every vertex basis is degenerate. The oracle enumerates all 3!
  // permutations.
  RngStream rng(401, 0xabcdef, 3);
  for (int trial = 0; trial < 40; ++trial) {
    LinearProgram lp;
    lp.n_vars = 9;  // x[r*3+c]
    lp.var_lower.assign(9, 0.0);
    lp.var_upper.assign(9, 1.0);
    std::array<double, 9> cost{};
    for (int i = 0; i < 9; ++i) {
      cost[i] = static_cast<double>(rng.next_below(13)) - 6.0;
      lp.objective.push_back(cost[i]);
    }
    for (int r = 0; r < 3; ++r) {
      LpConstraint row;
      row.coeffs.assign(9, 0.0);
      for (int c = 0; c < 3; ++c) row.coeffs[r * 3 + c] = 1.0;
      row.rhs = 1.0;
      row.relation = Relation::Eq;
      lp.constraints.push_back(row);
      LpConstraint col;
      col.coeffs.assign(9, 0.0);
      for (int c = 0; c < 3; ++c) col.coeffs[c * 3 + r] = 1.0;
      col.rhs = 1.0;
      col.relation = Relation::Eq;
      lp.constraints.push_back(col);
    }
    double best = std::numeric_limits<double>::infinity();
    int perm[3] = {0, 1, 2};
    std::sort(perm, perm + 3);
    do {
      best = std::min(best, cost[0 * 3 + perm[0]] + cost[1 * 3 + perm[1]] + cost[2 * 3 + perm[2]]);
    } while (std::next_permutation(perm, perm + 3));

    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.value == doctest::Approx(best).epsilon(1e-10));
    check_optimality_certificates(lp, sol);
  }
}

TEST_CASE("larger degenerate LPs still certify optimality") {
  RngStream rng(83, 0xabcdef, 4);
  int solved = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 6 + static_cast<int>(rng.next_below(7));
    const int m = 8 + static_cast<int>(rng.next_below(18));
    LinearProgram lp;
    lp.n_vars = n;
    // A common point p on the boundary of many rows forces degeneracy.
    std::vector<double> p(n);
    for (int i = 0; i < n; ++i) {
      p[i] = 0.25 * (static_cast<double>(rng.next_below(9)) - 4.0);
      lp.var_lower.push_back(p[i] - 0.25 * static_cast<double>(rng.next_below(5)));
      lp.var_upper.push_back(p[i] + 0.25 * static_cast<double>(1 + rng.next_below(5)));
      lp.objective.push_back(0.5 * (static_cast<double>(rng.next_below(9)) - 4.0));
    }
    for (int r = 0; r < m; ++r) {
      LpConstraint c;
      double ap = 0.0;
      for (int i = 0; i < n; ++i) {
        c.coeffs.push_back(static_cast<double>(rng.next_below(5)) - 2.0);
        ap += c.coeffs[i] * p[i];
      }
      // Equality rows pass exactly through p; half the inequality rows do
      // too, the rest have slack there.
      c.relation = rng.next_double() < 0.2 ? Relation::Eq : Relation::Leq;
      const bool through_p = c.relation == Relation::Eq || rng.next_double() < 0.5;
      c.rhs = ap + (through_p ? 0.0 : 0.25 * static_cast<double>(rng.next_below(6)));
      lp.constraints.push_back(std::move(c));
    }
    const LpSolution sol = solve_lp(lp);  // p is feasible by construction
    REQUIRE(sol.status == LpStatus::Optimal);
    check_optimality_certificates(lp, sol);
    const LpSolution again = solve_lp(lp);
    CHECK(sol.value == again.value);
    CHECK(sol.primal == again.primal);
    ++solved;
  }
  CHECK(solved == 60);
}

TEST_CASE("scale equivariance: row scaling inverts the dual") {
  RngStream rng(11, 0xabcdef, 2);
  int checked = 0;
  while (checked < 40) {
    // Continuous data: degenerate/multi-optimal instances have measure zero.
    LinearProgram lp;
    lp.n_vars = 2 + static_cast<int>(rng.next_below(2));
    lp.sense = rng.next_double() < 0.5 ? Sense::Minimize : Sense::Maximize;
    for (int i = 0; i < lp.n_vars; ++i) {
      lp.var_lower.push_back(-1.0 - rng.next_double());
      lp.var_upper.push_back(1.0 + rng.next_double());
      lp.objective.push_back(2.0 * rng.next_double() - 1.0);
    }
    for (int r = 0; r < 3; ++r) {
      LpConstraint c;
      for (int i = 0; i < lp.n_vars; ++i) c.coeffs.push_back(2.0 * rng.next_double() - 1.0);
      c.rhs = rng.next_double();
      lp.constraints.push_back(std::move(c));
    }
    const LpSolution base = solve_lp(lp);
    if (base.status != LpStatus::Optimal) continue;
    for (const double s : {1e-3, 417.0, 1e3}) {
      LinearProgram scaled = lp;
      for (double& a : scaled.constraints[1].coeffs) a *= s;
      scaled.constraints[1].rhs *= s;
      const LpSolution sol = solve_lp(scaled);
      REQUIRE(sol.status == LpStatus::Optimal);
      CHECK(std::abs(sol.value - base.value) <= 1e-8 * (1.0 + std::abs(base.value)));
      for (int i = 0; i < lp.n_vars; ++i)
        CHECK(std::abs(sol.primal[i] - base.primal[i]) <= 1e-8 * (1.0 + std::abs(base.primal[i])));
      CHECK(std::abs(sol.duals[1] - base.duals[1] / s) <= 1e-8 * (1.0 + std::abs(base.duals[1] / s)));
    }
    ++checked;
  }
}
