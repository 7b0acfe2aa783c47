#include "pibound/lp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "pibound/errors.hpp"

namespace pibound {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_finite(double x) { return std::isfinite(x); }

// Bounded-variable revised simplex on the minimization form.
//
// Columns are laid out as [structural | logical | artificial]. Every row
// owns a logical variable (slack): [0, inf) for <= rows, fixed [0, 0] for
// equality rows, so A x + s = b throughout. Artificials are appended for
// rows whose initial residual cannot be absorbed by the logical, carry unit
// phase-1 cost, and are fixed to [0, 0] once phase 1 ends.
class Simplex {
 public:
  Simplex(const LinearProgram& lp, const SolverOptions& opt) : lp_(lp), opt_(opt) {
    n_ = lp.n_vars;
    m_ = static_cast<int>(lp.constraints.size());
    double rhs_inf = 0.0;
    for (const auto& c : lp.constraints) rhs_inf = std::max(rhs_inf, std::abs(c.rhs));
    scale_ = 1.0 + rhs_inf;
    tol_feas_ = opt.tol_feas_rel * scale_;
    tol_active_ = opt.tol_active_rel * scale_;
    double obj_inf = 0.0;
    for (double c : lp.objective) obj_inf = std::max(obj_inf, std::abs(c));
    tol_dj_ = opt.tol_reduced_cost * (1.0 + obj_inf);
    cap_ = opt.max_iterations > 0 ? opt.max_iterations : 50 * (n_ + m_);
  }

  LpSolution run() {
    setup();
    if (n_art_ > 0) {
      const LpStatus p1 = iterate(/*phase1=*/true);
      if (p1 == LpStatus::Unbounded)
        throw SolverError("phase 1 reported an unbounded ray; the artificial objective is bounded");
      refactor();
      refresh_basics();
      if (phase1_infeasibility() > tol_feas_) return infeasible_solution();
      for (int j = n_ + m_; j < ncols(); ++j) lo_[j] = up_[j] = 0.0;
    }
    const LpStatus p2 = iterate(/*phase1=*/false);
    if (p2 == LpStatus::Unbounded) {
      LpSolution sol;
      sol.status = LpStatus::Unbounded;
      sol.iterations = iters_;
      return sol;
    }
    refactor();
    refresh_basics();
    certify_feasibility();
    return extract();
  }

 private:
  int ncols() const { return n_ + m_ + n_art_; }

  double col_entry(int j, int row) const {
    if (j < n_) return lp_.constraints[row].coeffs[j];
    if (j < n_ + m_) return j - n_ == row ? 1.0 : 0.0;
    const auto& a = art_[j - n_ - m_];
    return a.first == row ? a.second : 0.0;
  }

  void setup() {
    lo_.assign(n_ + m_, 0.0);
    up_.assign(n_ + m_, 0.0);
    xval_.assign(n_ + m_, 0.0);
    state_.assign(n_ + m_, BasisState::AtLower);
    for (int j = 0; j < n_; ++j) {
      lo_[j] = lp_.var_lower[j];
      up_[j] = lp_.var_upper[j];
      if (is_finite(lo_[j])) {
        state_[j] = BasisState::AtLower;
        xval_[j] = lo_[j];
      } else if (is_finite(up_[j])) {
        state_[j] = BasisState::AtUpper;
        xval_[j] = up_[j];
      } else {
        state_[j] = BasisState::AtLower;  // free, parked at zero
        xval_[j] = 0.0;
      }
    }
    for (int r = 0; r < m_; ++r) {
      const int j = n_ + r;
      lo_[j] = 0.0;
      up_[j] = lp_.constraints[r].relation == Relation::Leq ? kInf : 0.0;
      xval_[j] = 0.0;
    }

    std::vector<double> resid(m_);
    for (int r = 0; r < m_; ++r) {
      double ax = 0.0;
      const auto& coef = lp_.constraints[r].coeffs;
      for (int j = 0; j < n_; ++j) ax += coef[j] * xval_[j];
      resid[r] = lp_.constraints[r].rhs - ax;
    }

    basis_.assign(m_, -1);
    in_basis_.assign(n_ + m_, false);
    for (int r = 0; r < m_; ++r) {
      if (lp_.constraints[r].relation == Relation::Leq && resid[r] >= 0.0) {
        basis_[r] = n_ + r;
        xval_[n_ + r] = resid[r];
        state_[n_ + r] = BasisState::Basic;
        in_basis_[n_ + r] = true;
      } else {
        const double sigma = resid[r] >= 0.0 ? 1.0 : -1.0;
        art_.emplace_back(r, sigma);
        basis_[r] = n_ + m_ + n_art_;
        ++n_art_;
        lo_.push_back(0.0);
        up_.push_back(kInf);
        xval_.push_back(std::abs(resid[r]));
        state_.push_back(BasisState::Basic);
        in_basis_.push_back(true);
      }
    }
    binv_ = Eigen::MatrixXd::Identity(m_, m_);
    // Initial basis columns are +-unit vectors; invert the signs directly.
    for (int r = 0; r < m_; ++r) {
      if (basis_[r] >= n_ + m_ && art_[basis_[r] - n_ - m_].second < 0.0) binv_(r, r) = -1.0;
    }
  }

  double cost_of(int j, bool phase1) const {
    if (phase1) return j >= n_ + m_ ? 1.0 : 0.0;
    return j < n_ ? lp_.objective[j] : 0.0;
  }

  void compute_duals(bool phase1) {
    y_.assign(m_, 0.0);
    for (int i = 0; i < m_; ++i) {
      const double cb = cost_of(basis_[i], phase1);
      if (cb == 0.0) continue;
      for (int r = 0; r < m_; ++r) y_[r] += cb * binv_(i, r);
    }
  }

  double reduced_cost(int j, bool phase1) const {
    double d = cost_of(j, phase1);
    if (j < n_) {
      for (int r = 0; r < m_; ++r) d -= y_[r] * lp_.constraints[r].coeffs[j];
    } else if (j < n_ + m_) {
      d -= y_[j - n_];
    } else {
      const auto& a = art_[j - n_ - m_];
      d -= y_[a.first] * a.second;
    }
    return d;
  }

  void ftran(int j, std::vector<double>& t) const {
    t.assign(m_, 0.0);
    if (j < n_) {
      for (int r = 0; r < m_; ++r) {
        const double a = lp_.constraints[r].coeffs[j];
        if (a == 0.0) continue;
        for (int i = 0; i < m_; ++i) t[i] += binv_(i, r) * a;
      }
    } else if (j < n_ + m_) {
      const int r = j - n_;
      for (int i = 0; i < m_; ++i) t[i] = binv_(i, r);
    } else {
      const auto& a = art_[j - n_ - m_];
      for (int i = 0; i < m_; ++i) t[i] = binv_(i, a.first) * a.second;
    }
  }

  void refactor() {
    if (m_ == 0) return;
    Eigen::MatrixXd B(m_, m_);
    for (int i = 0; i < m_; ++i)
      for (int r = 0; r < m_; ++r) B(r, i) = col_entry(basis_[i], r);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (!lu.isInvertible()) throw SolverError("simplex basis became singular during refactorization");
    binv_ = lu.inverse();
  }

  // Recompute basic values from the nonbasic assignment.
  void refresh_basics() {
    if (m_ == 0) return;
    std::vector<double> rhs(m_);
    for (int r = 0; r < m_; ++r) rhs[r] = lp_.constraints[r].rhs;
    for (int j = 0; j < ncols(); ++j) {
      if (in_basis_[j] || xval_[j] == 0.0) continue;
      if (j < n_) {
        for (int r = 0; r < m_; ++r) rhs[r] -= lp_.constraints[r].coeffs[j] * xval_[j];
      } else if (j < n_ + m_) {
        rhs[j - n_] -= xval_[j];
      } else {
        const auto& a = art_[j - n_ - m_];
        rhs[a.first] -= a.second * xval_[j];
      }
    }
    for (int i = 0; i < m_; ++i) {
      double v = 0.0;
      for (int r = 0; r < m_; ++r) v += binv_(i, r) * rhs[r];
      xval_[basis_[i]] = v;
    }
  }

  double phase1_infeasibility() const {
    double s = 0.0;
    for (int j = n_ + m_; j < ncols(); ++j) s += std::max(xval_[j], 0.0);
    return s;
  }

  LpStatus iterate(bool phase1) {
    int degenerate_run = 0;
    int since_refactor = 0;
    std::vector<double> t;
    while (true) {
      if (iters_ >= cap_)
        throw SolverError("simplex iteration cap exceeded (" + std::to_string(cap_) +
                          "); feasibility/optimality could not be certified");
      compute_duals(phase1);

      const bool bland = degenerate_run >= opt_.bland_trigger;
      int enter = -1;
      double enter_dir = 1.0;
      double best = tol_dj_;
      for (int j = 0; j < ncols(); ++j) {
        if (in_basis_[j] || lo_[j] == up_[j]) continue;
        const double d = reduced_cost(j, phase1);
        const bool free_var = !is_finite(lo_[j]) && !is_finite(up_[j]);
        double dir;
        if (free_var) {
          if (std::abs(d) <= tol_dj_) continue;
          dir = d < 0.0 ? 1.0 : -1.0;
        } else if (state_[j] == BasisState::AtLower) {
          if (d >= -tol_dj_) continue;
          dir = 1.0;
        } else {
          if (d <= tol_dj_) continue;
          dir = -1.0;
        }
        if (bland) {
          enter = j;
          enter_dir = dir;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          enter = j;
          enter_dir = dir;
        }
      }
      if (enter < 0) return LpStatus::Optimal;

      ftran(enter, t);

      double alpha = kInf;
      int leave = -1;
      BasisState leave_to = BasisState::AtLower;
      if (is_finite(lo_[enter]) && is_finite(up_[enter])) alpha = up_[enter] - lo_[enter];
      for (int i = 0; i < m_; ++i) {
        const double rho = -enter_dir * t[i];
        const int bj = basis_[i];
        double lim;
        BasisState to;
        if (rho < -opt_.tol_pivot) {
          if (!is_finite(lo_[bj])) continue;
          lim = (xval_[bj] - lo_[bj]) / (-rho);
          to = BasisState::AtLower;
        } else if (rho > opt_.tol_pivot) {
          if (!is_finite(up_[bj])) continue;
          lim = (up_[bj] - xval_[bj]) / rho;
          to = BasisState::AtUpper;
        } else {
          continue;
        }
        lim = std::max(lim, 0.0);
        const double tie = 1e-12 * (1.0 + std::abs(alpha));
        if (lim < alpha - tie || (lim < alpha + tie && (leave < 0 || bj < basis_[leave]))) {
          alpha = std::min(alpha, lim);
          leave = i;
          leave_to = to;
        }
      }
      if (!is_finite(alpha)) return LpStatus::Unbounded;

      for (int i = 0; i < m_; ++i) xval_[basis_[i]] -= enter_dir * t[i] * alpha;
      if (leave < 0) {
        // Bound-to-bound flip, basis unchanged.
        state_[enter] = state_[enter] == BasisState::AtLower ? BasisState::AtUpper : BasisState::AtLower;
        xval_[enter] = state_[enter] == BasisState::AtLower ? lo_[enter] : up_[enter];
      } else {
        const int out = basis_[leave];
        state_[out] = leave_to;
        xval_[out] = leave_to == BasisState::AtLower ? lo_[out] : up_[out];
        in_basis_[out] = false;
        xval_[enter] = xval_[enter] + enter_dir * alpha;
        state_[enter] = BasisState::Basic;
        in_basis_[enter] = true;
        basis_[leave] = enter;
        pivot_update(leave, t);
        if (++since_refactor >= opt_.refactor_interval) {
          refactor();
          refresh_basics();
          since_refactor = 0;
        }
      }
      degenerate_run = alpha <= 1e-10 ? degenerate_run + 1 : 0;
      ++iters_;
    }
  }

  void pivot_update(int r, const std::vector<double>& t) {
    const double piv = t[r];
    if (std::abs(piv) < opt_.tol_pivot)
      throw SolverError("numerically zero pivot element in simplex update");
    binv_.row(r) /= piv;
    for (int i = 0; i < m_; ++i) {
      if (i == r || t[i] == 0.0) continue;
      binv_.row(i) -= t[i] * binv_.row(r);
    }
  }

  void certify_feasibility() const {
    for (int j = 0; j < ncols(); ++j) {
      const double lo_viol = is_finite(lo_[j]) ? lo_[j] - xval_[j] : 0.0;
      const double up_viol = is_finite(up_[j]) ? xval_[j] - up_[j] : 0.0;
      if (std::max(lo_viol, up_viol) > 1e3 * tol_feas_)
        throw SolverError("optimal basis violates variable bounds beyond tolerance");
    }
    for (int r = 0; r < m_; ++r) {
      double ax = 0.0;
      for (int j = 0; j < n_; ++j) ax += lp_.constraints[r].coeffs[j] * xval_[j];
      const double s = xval_[n_ + r];
      double art = 0.0;
      for (int a = 0; a < n_art_; ++a)
        if (art_[a].first == r) art += art_[a].second * xval_[n_ + m_ + a];
      if (std::abs(ax + s + art - lp_.constraints[r].rhs) > 1e3 * tol_feas_)
        throw SolverError("optimal basis violates a constraint beyond tolerance");
    }
  }

  LpSolution infeasible_solution() const {
    LpSolution sol;
    sol.status = LpStatus::Infeasible;
    sol.iterations = iters_;
    return sol;
  }

  LpSolution extract() {
    LpSolution sol;
    sol.status = LpStatus::Optimal;
    sol.iterations = iters_;
    sol.primal.assign(xval_.begin(), xval_.begin() + n_);
    for (int j = 0; j < n_; ++j) {
      // Snap basic values marginally outside the box back onto it.
      if (is_finite(lo_[j])) sol.primal[j] = std::max(sol.primal[j], lo_[j]);
      if (is_finite(up_[j])) sol.primal[j] = std::min(sol.primal[j], up_[j]);
    }

    double obj = lp_.objective_constant;
    for (int j = 0; j < n_; ++j) obj += lp_.objective[j] * sol.primal[j];
    sol.value = obj;

    compute_duals(/*phase1=*/false);
    sol.duals = y_;
    sol.reduced_costs.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j)
      sol.reduced_costs[j] = in_basis_[j] ? 0.0 : reduced_cost(j, /*phase1=*/false);

    sol.slacks.assign(m_, 0.0);
    for (int r = 0; r < m_; ++r) {
      double ax = 0.0;
      for (int j = 0; j < n_; ++j) ax += lp_.constraints[r].coeffs[j] * sol.primal[j];
      sol.slacks[r] = lp_.constraints[r].rhs - ax;
      if (std::abs(sol.slacks[r]) <= tol_active_) sol.active_set.push_back(r);
    }

    sol.var_state.assign(state_.begin(), state_.begin() + n_);
    sol.row_state.assign(state_.begin() + n_, state_.begin() + n_ + m_);

    for (int i = 0; i < m_; ++i) {
      const int bj = basis_[i];
      const double near_lo = is_finite(lo_[bj]) ? std::abs(xval_[bj] - lo_[bj]) : kInf;
      const double near_up = is_finite(up_[bj]) ? std::abs(up_[bj] - xval_[bj]) : kInf;
      if (std::min(near_lo, near_up) <= tol_active_) sol.degenerate_basis = true;
    }
    for (int j = 0; j < n_ + m_; ++j) {
      if (in_basis_[j] || lo_[j] == up_[j]) continue;
      if (std::abs(reduced_cost(j, /*phase1=*/false)) <= tol_dj_) sol.zero_reduced_cost_nonbasic = true;
    }
    return sol;
  }

 private:
  const LinearProgram& lp_;
  const SolverOptions& opt_;
  int n_ = 0;
  int m_ = 0;
  int n_art_ = 0;
  double scale_ = 1.0;
  double tol_feas_ = 0.0;
  double tol_active_ = 0.0;
  double tol_dj_ = 0.0;
  int cap_ = 0;
  int iters_ = 0;
  std::vector<double> lo_, up_, xval_;
  std::vector<BasisState> state_;
  std::vector<int> basis_;
  std::vector<bool> in_basis_;
  std::vector<std::pair<int, double>> art_;  // (row, sign)
  std::vector<double> y_;
  Eigen::MatrixXd binv_;
};

}  // namespace

void validate_lp(const LinearProgram& lp) {
  if (lp.n_vars <= 0) throw ValidationError("LinearProgram.n_vars must be positive");
  if (static_cast<int>(lp.objective.size()) != lp.n_vars)
    throw ValidationError("LinearProgram.objective: length " + std::to_string(lp.objective.size()) +
                          " != n_vars " + std::to_string(lp.n_vars));
  if (static_cast<int>(lp.var_lower.size()) != lp.n_vars ||
      static_cast<int>(lp.var_upper.size()) != lp.n_vars)
    throw ValidationError("LinearProgram.var_lower/var_upper: length must equal n_vars");
  for (double c : lp.objective)
    if (std::isnan(c)) throw ValidationError("LinearProgram.objective: NaN coefficient");
  for (int i = 0; i < lp.n_vars; ++i) {
    if (std::isnan(lp.var_lower[i]) || std::isnan(lp.var_upper[i]))
      throw ValidationError("LinearProgram bounds: NaN at variable " + std::to_string(i));
    if (lp.var_lower[i] > lp.var_upper[i])
      throw ValidationError("LinearProgram bounds: var_lower > var_upper at variable " +
                            std::to_string(i));
  }
  for (std::size_t j = 0; j < lp.constraints.size(); ++j) {
    const auto& c = lp.constraints[j];
    if (static_cast<int>(c.coeffs.size()) != lp.n_vars)
      throw ValidationError("constraint " + std::to_string(j) + ": coefficient length " +
                            std::to_string(c.coeffs.size()) + " != n_vars");
    if (std::isnan(c.rhs)) throw ValidationError("constraint " + std::to_string(j) + ": NaN rhs");
    for (double a : c.coeffs)
      if (std::isnan(a))
        throw ValidationError("constraint " + std::to_string(j) + ": NaN coefficient");
  }
}

LpSolution solve_lp(const LinearProgram& lp, const SolverOptions& options) {
  validate_lp(lp);
  if (lp.sense == Sense::Maximize) {
    LinearProgram neg = lp;
    neg.sense = Sense::Minimize;
    for (double& c : neg.objective) c = -c;
    neg.objective_constant = -neg.objective_constant;
    LpSolution sol = solve_lp(neg, options);
    if (sol.status == LpStatus::Optimal) {
      sol.value = -sol.value;
      for (double& d : sol.duals) d = -d;
      for (double& d : sol.reduced_costs) d = -d;
    }
    return sol;
  }
  Simplex simplex(lp, options);
  return simplex.run();
}

UniquenessReport assess_solution_uniqueness(const LinearProgram& lp, const LpSolution& sol,
                                            const SolverOptions& options) {
  (void)lp;
  (void)options;
  if (sol.status != LpStatus::Optimal)
    throw ValidationError("assess_solution_uniqueness requires an optimal solution");
  UniquenessReport rep;
  rep.primal_unique = !sol.zero_reduced_cost_nonbasic;
  rep.dual_unique = !sol.degenerate_basis;
  return rep;
}

double primal_objective(const LinearProgram& lp, const std::vector<double>& x) {
  double v = lp.objective_constant;
  for (int j = 0; j < lp.n_vars; ++j) v += lp.objective[j] * x[j];
  return v;
}

double dual_objective(const LinearProgram& lp, const LpSolution& sol) {
  const double flip = lp.sense == Sense::Maximize ? -1.0 : 1.0;
  double d = flip * lp.objective_constant;
  for (std::size_t r = 0; r < lp.constraints.size(); ++r)
    d += flip * sol.duals[r] * lp.constraints[r].rhs;
  for (int j = 0; j < lp.n_vars; ++j) {
    const double rc = flip * sol.reduced_costs[j];
    if (rc > 0.0 && std::isfinite(lp.var_lower[j])) d += rc * lp.var_lower[j];
    if (rc < 0.0 && std::isfinite(lp.var_upper[j])) d += rc * lp.var_upper[j];
  }
  return flip * d;
}

std::string dump_lp(const LinearProgram& lp) {
  std::ostringstream os;
  os.precision(17);
  os << (lp.sense == Sense::Minimize ? "minimize" : "maximize");
  for (double c : lp.objective) os << ' ' << c;
  os << " + " << lp.objective_constant << '\n';
  for (const auto& c : lp.constraints) {
    for (double a : c.coeffs) os << a << ' ';
    os << (c.relation == Relation::Eq ? "== " : "<= ") << c.rhs << '\n';
  }
  os << "bounds";
  for (int j = 0; j < lp.n_vars; ++j)
    os << ' ' << '[' << lp.var_lower[j] << ',' << lp.var_upper[j] << ']';
  os << '\n';
  return os.str();
}

}  // namespace pibound
