#include "pibound/inference.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "pibound/errors.hpp"
#include "pibound/parallel.hpp"
#include "pibound/rng.hpp"

namespace pibound {

namespace {

double rhs_inf_norm(const LinearProgram& lp) {
  double v = 0.0;
  for (const auto& c : lp.constraints) v = std::max(v, std::abs(c.rhs));
  return v;
}

std::vector<double> net_moment_duals(const EmpiricalLp& assembled, const LpSolution& sol,
                                     int n_moments) {
  std::vector<double> net(n_moments, 0.0);
  for (std::size_t r = 0; r < assembled.rows.size(); ++r)
    net[assembled.rows[r].moment] += assembled.rows[r].sign * sol.duals[r];
  return net;
}

struct BoundSolve {
  EmpiricalLp lower;
  LpSolution sol_lb;
  LpSolution sol_ub;
};

// Assemble once, solve both directions (the upper problem is the same LP
// with the sense flipped).
BoundSolve solve_both(const BoundModel& model, const Weights& weights, double relaxation,
                      const SolverOptions& solver) {
  BoundSolve out;
  AssemblyPolicy policy;
  policy.relaxation = relaxation;
  out.lower = model.build(weights, Direction::Lower, policy);
  out.sol_lb = solve_lp(out.lower.lp, solver);
  if (out.sol_lb.status == LpStatus::Optimal) {
    LinearProgram upper = out.lower.lp;
    upper.sense = Sense::Maximize;
    out.sol_ub = solve_lp(upper, solver);
  }
  return out;
}

}  // namespace

int BootstrapDraws::n_ok() const {
  int k = 0;
  for (auto f : flags)
    if (f != DrawFlag::Failed) ++k;
  return k;
}

int BootstrapDraws::n_failed() const { return B - n_ok(); }

double BootstrapDraws::failure_rate() const {
  return B > 0 ? static_cast<double>(n_failed()) / B : 0.0;
}

double compute_relaxation(const BoundModel& model, const Weights& weights,
                          const SolverOptions& solver) {
  const int d = model.d_theta();
  LinearProgram aux;
  aux.n_vars = d + 1;  // (theta, t)
  aux.objective.assign(d + 1, 0.0);
  aux.objective[d] = 1.0;
  aux.var_lower = model.spec().theta_lower;
  aux.var_upper = model.spec().theta_upper;

  // Any feasible theta bounds t from above by its worst violation; the box
  // midpoint provides such a theta.
  std::vector<double> theta_mid(d);
  for (int i = 0; i < d; ++i) theta_mid[i] = 0.5 * (aux.var_lower[i] + aux.var_upper[i]);
  const std::vector<double> mid_moments = model.evaluate_moments(weights, theta_mid);
  double t_hi = 0.0;
  for (std::size_t j = 0; j < mid_moments.size(); ++j) {
    const double v = std::abs(mid_moments[j]);
    t_hi = std::max(t_hi, v);
  }
  aux.var_lower.push_back(-1.0);
  aux.var_upper.push_back(t_hi + 1.0);

  const std::vector<double> consts = model.evaluate_moments(weights, std::vector<double>(d, 0.0));
  for (int j = 0; j < model.n_moments(); ++j) {
    const std::vector<double> g = model.moment_gradient(weights, j);
    const double k = consts[j];
    std::vector<double> row(d + 1);
    for (int i = 0; i < d; ++i) row[i] = g[i];
    row[d] = -1.0;
    aux.constraints.push_back({row, -k, Relation::Leq});
    if (model.spec().moments[j].sense == MomentSense::Eq) {
      for (int i = 0; i < d; ++i) row[i] = -g[i];
      row[d] = -1.0;
      aux.constraints.push_back({row, k, Relation::Leq});
    }
  }
  const LpSolution sol = solve_lp(aux, solver);
  if (sol.status != LpStatus::Optimal)
    throw SolverError("auxiliary relaxation LP did not solve; check theta bounds");
  return std::max(0.0, sol.value);
}

IdentifiedSetEstimate estimate_identified_set(const BoundModel& model, const Weights& weights,
                                              const InferenceOptions& options) {
  double relaxation = 0.0;
  BoundSolve bs = solve_both(model, weights, relaxation, options.solver);
  if (bs.sol_lb.status == LpStatus::Infeasible) {
    if (!options.auto_relax)
      throw SolverError("empirical moment system is infeasible and auto-relaxation is disabled");
    const double c_star = compute_relaxation(model, weights, options.solver);
    const double eps = options.relax_epsilon_rel * (1.0 + rhs_inf_norm(bs.lower.lp));
    relaxation = c_star + eps;
    bs = solve_both(model, weights, relaxation, options.solver);
    if (bs.sol_lb.status == LpStatus::Infeasible)
      throw SolverError("empirical LP infeasible after relaxation; this signals a solver bug");
  }
  if (bs.sol_lb.status == LpStatus::Unbounded || bs.sol_ub.status == LpStatus::Unbounded)
    throw SolverError("bounding LP is unbounded; theta bounds are missing or too wide");
  if (bs.sol_lb.status != LpStatus::Optimal || bs.sol_ub.status != LpStatus::Optimal)
    throw SolverError("bounding LP did not reach an optimum");

  IdentifiedSetEstimate est;
  est.lb = bs.sol_lb.value;
  est.ub = bs.sol_ub.value;
  est.delta = est.ub - est.lb;
  est.relaxation_used = relaxation;
  est.moment_duals_lb = net_moment_duals(bs.lower, bs.sol_lb, model.n_moments());
  est.moment_duals_ub = net_moment_duals(bs.lower, bs.sol_ub, model.n_moments());
  est.sol_lb = std::move(bs.sol_lb);
  est.sol_ub = std::move(bs.sol_ub);
  return est;
}

BootstrapDraws bootstrap_value_functions(const BoundModel& model,
                                         const IdentifiedSetEstimate& estimate, int B,
                                         std::uint64_t seed, const InferenceOptions& options) {
  if (B < 1) throw ValidationError("bootstrap: B must be >= 1");
  const std::size_t n = model.n_obs();
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  BootstrapDraws draws;
  draws.B = B;
  draws.n = n;
  draws.seed = seed;
  draws.L.assign(B, std::numeric_limits<double>::quiet_NaN());
  draws.U.assign(B, std::numeric_limits<double>::quiet_NaN());
  draws.flags.assign(B, DrawFlag::Failed);

  parallel_for_index(static_cast<std::size_t>(B), options.threads, [&](std::size_t b) {
    RngStream rng(seed, rng_stream::kBootstrapDraw, b);
    Weights w{multinomial_counts(n, rng)};
    try {
      double relaxation = estimate.relaxation_used;
      BoundSolve bs = solve_both(model, w, relaxation, options.solver);
      bool relaxed = false;
      if (bs.sol_lb.status == LpStatus::Infeasible) {
        const double c_star = compute_relaxation(model, w, options.solver);
        const double eps = options.relax_epsilon_rel * (1.0 + rhs_inf_norm(bs.lower.lp));
        relaxation = std::max(relaxation, c_star + eps);
        relaxed = true;
        bs = solve_both(model, w, relaxation, options.solver);
      }
      if (bs.sol_lb.status != LpStatus::Optimal || bs.sol_ub.status != LpStatus::Optimal) return;
      draws.L[b] = sqrt_n * (bs.sol_lb.value - estimate.lb);
      draws.U[b] = sqrt_n * (bs.sol_ub.value - estimate.ub);
      draws.flags[b] = relaxed ? DrawFlag::Relaxed : DrawFlag::Ok;
    } catch (const SolverError&) {
      // flag stays Failed; counted in the failure rate
    }
  });
  return draws;
}

ThresholdResult threshold_delta(double delta_hat, std::size_t n, ThresholdMode mode) {
  if (n < 2) throw ValidationError("threshold_delta: n must be >= 2");
  ThresholdResult r;
  r.b_n = 1.0 / std::sqrt(std::log(static_cast<double>(n)));
  if (delta_hat > r.b_n)
    r.delta_star = mode == ThresholdMode::Length ? delta_hat : 1.0;
  else
    r.delta_star = 0.0;
  return r;
}

QuantilePair calibrate_quantiles(const BootstrapDraws& draws, double delta_star, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("calibrate_quantiles: alpha must be in (0,1)");
  if (delta_star < 0.0) throw ValidationError("calibrate_quantiles: delta_star must be >= 0");

  std::vector<std::pair<double, double>> lu;  // (L, U), non-failed draws, sorted by L
  lu.reserve(draws.L.size());
  for (int b = 0; b < draws.B; ++b)
    if (draws.flags[b] != DrawFlag::Failed) lu.emplace_back(draws.L[b], draws.U[b]);
  const int b_ok = static_cast<int>(lu.size());
  if (b_ok == 0) throw CalibrationError("calibration: no usable bootstrap draws");
  std::sort(lu.begin(), lu.end());

  const int m = std::max(1, static_cast<int>(std::ceil((1.0 - alpha) * b_ok - 1e-12)));
  const double big_d = std::sqrt(static_cast<double>(draws.n)) * delta_star;

  std::vector<double> candidates;
  candidates.reserve(2 * lu.size());
  for (const auto& [l, u] : lu) {
    candidates.push_back(l);
    candidates.push_back(l - big_d);
  }
  std::sort(candidates.begin(), candidates.end());

  // Min-heaps holding the m largest U + D over {L <= q} and U over
  // {L <= q + D}; both threshold sets only grow as q increases.
  using MinHeap = std::priority_queue<double, std::vector<double>, std::greater<double>>;
  MinHeap top1, top2;
  std::size_t p1 = 0, p2 = 0;
  auto push_top = [m](MinHeap& h, double v) {
    h.push(v);
    if (static_cast<int>(h.size()) > m) h.pop();
  };

  bool found = false;
  double best_sum = 0.0, best_q = 0.0, best_qub = 0.0;
  for (const double q : candidates) {
    while (p1 < lu.size() && lu[p1].first <= q) push_top(top1, lu[p1++].second + big_d);
    while (p2 < lu.size() && lu[p2].first <= q + big_d) push_top(top2, lu[p2++].second);
    if (static_cast<int>(top1.size()) < m || static_cast<int>(top2.size()) < m) continue;
    const double q_ub = std::max(-top1.top(), -top2.top());
    const double total = q + q_ub;
    if (!found || total < best_sum) {
      found = true;
      best_sum = total;
      best_q = q;
      best_qub = q_ub;
    }
  }
  if (!found) throw CalibrationError("calibration: no quantile pair satisfies the joint constraints");
  return {best_q, best_qub};
}

ConfidenceResult construct_confidence_set(const BoundModel& model, const InferenceOptions& options) {
  const std::size_t n = model.n_obs();
  const Weights uniform = Weights::uniform(n);

  ConfidenceResult result;
  result.estimate = estimate_identified_set(model, uniform, options);
  result.draws = bootstrap_value_functions(model, result.estimate, options.bootstrap_draws,
                                           options.seed, options);
  const ThresholdResult thr = threshold_delta(result.estimate.delta, n, options.threshold_mode);
  QuantilePair q = calibrate_quantiles(result.draws, thr.delta_star, options.alpha);
  if (options.clamp_nonnegative) {
    q.q_lb = std::max(q.q_lb, 0.0);
    q.q_ub = std::max(q.q_ub, 0.0);
  }
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  result.set.lower = result.estimate.lb - q.q_lb / sqrt_n;
  result.set.upper = result.estimate.ub + q.q_ub / sqrt_n;
  result.set.alpha = options.alpha;
  result.set.q_lb = q.q_lb;
  result.set.q_ub = q.q_ub;
  result.set.delta_hat = result.estimate.delta;
  result.set.delta_star = thr.delta_star;
  result.set.b_n = thr.b_n;
  return result;
}

DeltaMethodOracle delta_method_oracle(const BoundModel& model, const Weights& weights,
                                      const IdentifiedSetEstimate& estimate) {
  if (estimate.sol_lb.status != LpStatus::Optimal || estimate.sol_ub.status != LpStatus::Optimal)
    throw ValidationError("delta_method_oracle: estimate must carry optimal solutions");
  const std::size_t n = model.n_obs();
  const int k = model.n_moments();

  DeltaMethodOracle oracle;
  oracle.influence_lb.resize(n);
  oracle.influence_ub.resize(n);

  auto fill = [&](const std::vector<double>& theta, const std::vector<double>& duals,
                  std::vector<double>& infl) {
    for (std::size_t i = 0; i < n; ++i) {
      double v = model.objective_at(i, theta);
      for (int j = 0; j < k; ++j) {
        if (duals[j] == 0.0) continue;
        v -= duals[j] * model.moment_at(i, j, theta);
      }
      infl[i] = v;
    }
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += weights.w[i] * infl[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      infl[i] -= mean;
      var += weights.w[i] * infl[i] * infl[i];
    }
    return std::sqrt(var / static_cast<double>(n));
  };

  oracle.sd_lb = fill(estimate.sol_lb.primal, estimate.moment_duals_lb, oracle.influence_lb);
  oracle.sd_ub = fill(estimate.sol_ub.primal, estimate.moment_duals_ub, oracle.influence_ub);
  return oracle;
}

}  // namespace pibound
