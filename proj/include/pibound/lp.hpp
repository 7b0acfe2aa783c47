#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace pibound {

enum class Relation : std::uint8_t { Eq, Leq };
enum class Sense : std::uint8_t { Minimize, Maximize };
enum class LpStatus : std::uint8_t { Optimal, Infeasible, Unbounded };

struct LpConstraint {
  std::vector<double> coeffs;  // length n_vars
  double rhs = 0.0;
  Relation relation = Relation::Leq;
};

/// Dense LP over box-bounded variables:
///   optimize  objective . x + objective_constant
///   s.t.      coeffs_j . x  (= | <=)  rhs_j          for each constraint j
///             var_lower <= x <= var_upper
/// Bounds are expected to be finite (compact parameter space); the solver
/// tolerates infinite bounds and reports Unbounded when they bite.
struct LinearProgram {
  int n_vars = 0;
  std::vector<double> objective;
  double objective_constant = 0.0;
  Sense sense = Sense::Minimize;
  std::vector<LpConstraint> constraints;
  std::vector<double> var_lower;
  std::vector<double> var_upper;
};

enum class BasisState : std::uint8_t { Basic, AtLower, AtUpper };

/// Solution certificates. Sign conventions:
///  - duals[j] is the sensitivity d(value)/d(rhs_j) in the problem's own
///    sense: minimize => leq duals <= 0, maximize => leq duals >= 0,
///    equality duals free-signed.
///  - reduced_costs[i] is d(value)/d(x_i) when x_i is pushed off its bound,
///    again in the problem's own sense.
/// value includes objective_constant. For non-optimal statuses value is NaN
/// and the vectors are empty.
struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  double value = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> primal;
  std::vector<double> duals;
  std::vector<double> reduced_costs;
  std::vector<double> slacks;         // rhs_j - coeffs_j . x
  std::vector<int> active_set;        // |slack| <= tol_active
  std::vector<BasisState> var_state;  // per structural variable
  std::vector<BasisState> row_state;  // per row's logical variable
  int iterations = 0;
  // Basis certificates consumed by assess_solution_uniqueness.
  bool degenerate_basis = false;            // some basic variable sits at a bound
  bool zero_reduced_cost_nonbasic = false;  // movable nonbasic with zero reduced cost
};

struct SolverOptions {
  // Relative tolerances are scaled by (1 + ||rhs||_inf).
  double tol_feas_rel = 1e-9;
  double tol_active_rel = 1e-7;
  double tol_cs = 1e-7;
  double tol_gap = 1e-8;
  double tol_reduced_cost = 1e-9;
  double tol_pivot = 1e-11;
  int max_iterations = 0;  // 0 -> 50 * (n_vars + n_constraints)
  int refactor_interval = 64;
  // Consecutive degenerate pivots before pricing falls back to Bland's rule.
  int bland_trigger = 16;
};

struct UniquenessReport {
  bool primal_unique = true;
  bool dual_unique = true;
};

void validate_lp(const LinearProgram& lp);

/// Two-phase revised simplex over bounded variables. Deterministic: identical
/// inputs give bit-identical solutions. Throws SolverError if feasibility
/// cannot be certified within the iteration cap.
LpSolution solve_lp(const LinearProgram& lp, const SolverOptions& options = {});

/// LP-certificate uniqueness assessment (no re-solving): a nonbasic variable
/// with zero reduced cost flags alternative optima; a basic variable sitting
/// at one of its bounds flags a degenerate basis and hence non-unique duals.
UniquenessReport assess_solution_uniqueness(const LinearProgram& lp, const LpSolution& sol,
                                            const SolverOptions& options = {});

double primal_objective(const LinearProgram& lp, const std::vector<double>& x);

/// Dual objective implied by (duals, reduced_costs); equals the primal value
/// at an optimum (strong duality).
double dual_objective(const LinearProgram& lp, const LpSolution& sol);

/// Plain-text dump, one constraint per line, for bug reports.
std::string dump_lp(const LinearProgram& lp);

}  // namespace pibound
