#include "pibound/diagnostics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pibound/errors.hpp"
#include "pibound/parallel.hpp"
#include "pibound/rng.hpp"

namespace pibound {

namespace {

double min_eigenvalue(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return 0.0;
  const int r = static_cast<int>(rows.size());
  Eigen::MatrixXd gram(r, r);
  for (int a = 0; a < r; ++a) {
    for (int b = a; b < r; ++b) {
      double dot = 0.0;
      for (std::size_t i = 0; i < rows[a].size(); ++i) dot += rows[a][i] * rows[b][i];
      gram(a, b) = dot;
      gram(b, a) = dot;
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  double v = es.eigenvalues()(0);
  if (v < 0.0 && v > -1e-10) v = 0.0;  // PSD up to roundoff
  return v;
}

std::vector<std::vector<double>> normalize_rows(std::vector<std::vector<double>> rows) {
  for (auto& row : rows) {
    double norm = 0.0;
    for (double v : row) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 1e-300)
      for (double& v : row) v /= norm;
  }
  return rows;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

LicqResult check_licq(const BoundModel& model, const Weights& weights, const LpSolution& sol,
                      double relaxation, const DiagnosticsOptions& options) {
  if (sol.status != LpStatus::Optimal)
    throw ValidationError("check_licq requires an optimal solution");

  const std::vector<double> values = model.evaluate_moments(weights, sol.primal);
  const std::vector<double> consts =
      model.evaluate_moments(weights, std::vector<double>(model.d_theta(), 0.0));
  double scale = 1.0;
  for (double c : consts) scale = std::max(scale, 1.0 + std::abs(c));
  const double tol_active = options.inference.solver.tol_active_rel * scale;

  LicqResult result;
  std::vector<std::vector<double>> rows;
  for (int j = 0; j < model.n_moments(); ++j) {
    const bool eq = model.spec().moments[j].sense == MomentSense::Eq;
    const bool active = eq || std::abs(values[j] - relaxation) <= tol_active;
    if (!active) continue;
    rows.push_back(model.moment_gradient(weights, j));
    result.active_labels.push_back(model.spec().moments[j].label);
  }
  result.min_eig = min_eigenvalue(rows);
  result.min_eig_normalized = min_eigenvalue(normalize_rows(std::move(rows)));
  return result;
}

ProbeResult perturbation_licq_probe(const BoundModel& model, const Weights& weights,
                                    double epsilon_scale, int trials, std::uint64_t seed,
                                    const DiagnosticsOptions& options) {
  if (trials < 1) throw ValidationError("perturbation_licq_probe: trials must be >= 1");
  if (!(epsilon_scale > 0.0)) throw ValidationError("perturbation_licq_probe: epsilon_scale must be > 0");

  const int n_rows = model.n_rows(/*split_eq=*/true);
  std::atomic<int> passes{0};
  std::atomic<int> infeasible{0};

  // Active rows of the perturbed split system, read off the solved LP.
  auto direction_passes = [&](const EmpiricalLp& assembled, const LpSolution& sol) {
    if (sol.status != LpStatus::Optimal) return false;
    std::vector<std::vector<double>> rows;
    for (std::size_t r = 0; r < assembled.lp.constraints.size(); ++r)
      if (std::find(sol.active_set.begin(), sol.active_set.end(), static_cast<int>(r)) !=
          sol.active_set.end())
        rows.push_back(assembled.lp.constraints[r].coeffs);
    if (rows.empty()) return true;  // vacuous LICQ
    return min_eigenvalue(normalize_rows(std::move(rows))) > options.eig_warn;
  };

  parallel_for_index(static_cast<std::size_t>(trials), options.inference.threads, [&](std::size_t t) {
    RngStream rng(seed, rng_stream::kProbeTrial, t);
    std::vector<double> shifts(n_rows);
    for (double& s : shifts) s = (2.0 * rng.next_double() - 1.0) * epsilon_scale;
    AssemblyPolicy policy;
    policy.force_split = true;
    policy.row_shifts = &shifts;
    bool ok = false;
    try {
      const EmpiricalLp lower = model.build(weights, Direction::Lower, policy);
      const LpSolution sol_lb = solve_lp(lower.lp, options.inference.solver);
      if (sol_lb.status == LpStatus::Infeasible) {
        infeasible.fetch_add(1, std::memory_order_relaxed);
      } else if (sol_lb.status == LpStatus::Optimal) {
        LinearProgram upper = lower.lp;
        upper.sense = Sense::Maximize;
        const LpSolution sol_ub = solve_lp(upper, options.inference.solver);
        ok = direction_passes(lower, sol_lb) &&
             sol_ub.status == LpStatus::Optimal && direction_passes(lower, sol_ub);
      }
    } catch (const SolverError&) {
      // counted as non-pass
    }
    if (ok) passes.fetch_add(1, std::memory_order_relaxed);
  });

  ProbeResult result;
  result.trials = trials;
  result.infeasible_trials = infeasible.load();
  result.pass_fraction = static_cast<double>(passes.load()) / trials;
  return result;
}

DiagnosticsReport full_report(const BoundModel& model, double alpha, std::uint64_t seed,
                              const DiagnosticsOptions& options) {
  const Weights uniform = Weights::uniform(model.n_obs());
  const IdentifiedSetEstimate est = estimate_identified_set(model, uniform, options.inference);

  DiagnosticsReport rep;
  rep.lb = est.lb;
  rep.ub = est.ub;
  rep.delta_hat = est.delta;
  rep.relaxation_used = est.relaxation_used;
  rep.alpha = alpha;
  rep.seed = seed;
  rep.b_n = threshold_delta(est.delta, model.n_obs(), ThresholdMode::Length).b_n;

  const LicqResult licq_lb = check_licq(model, uniform, est.sol_lb, est.relaxation_used, options);
  const LicqResult licq_ub = check_licq(model, uniform, est.sol_ub, est.relaxation_used, options);
  rep.licq_min_eig_lb = licq_lb.min_eig;
  rep.licq_min_eig_ub = licq_ub.min_eig;
  rep.licq_min_eig_norm_lb = licq_lb.min_eig_normalized;
  rep.licq_min_eig_norm_ub = licq_ub.min_eig_normalized;
  rep.active_labels_lb = licq_lb.active_labels;
  rep.active_labels_ub = licq_ub.active_labels;

  AssemblyPolicy policy;
  policy.relaxation = est.relaxation_used;
  LinearProgram lower_lp = model.build(uniform, Direction::Lower, policy).lp;
  LinearProgram upper_lp = lower_lp;
  upper_lp.sense = Sense::Maximize;
  const UniquenessReport uniq_lb = assess_solution_uniqueness(lower_lp, est.sol_lb);
  const UniquenessReport uniq_ub = assess_solution_uniqueness(upper_lp, est.sol_ub);
  rep.primal_unique_lb = uniq_lb.primal_unique;
  rep.primal_unique_ub = uniq_ub.primal_unique;
  rep.dual_unique_lb = uniq_lb.dual_unique;
  rep.dual_unique_ub = uniq_ub.dual_unique;

  for (int j = 0; j < model.n_moments(); ++j) {
    rep.multipliers_lb.emplace_back(model.spec().moments[j].label, est.moment_duals_lb[j]);
    rep.multipliers_ub.emplace_back(model.spec().moments[j].label, est.moment_duals_ub[j]);
  }

  auto warn = [&rep](const std::string& msg) { rep.warnings.push_back(msg); };
  if (rep.licq_min_eig_norm_lb < options.eig_warn)
    warn("LICQ near-failure at the lower optimum: min normalized eigenvalue " +
         format_double(rep.licq_min_eig_norm_lb) + " < " + format_double(options.eig_warn));
  if (rep.licq_min_eig_norm_ub < options.eig_warn)
    warn("LICQ near-failure at the upper optimum: min normalized eigenvalue " +
         format_double(rep.licq_min_eig_norm_ub) + " < " + format_double(options.eig_warn));
  if (!rep.primal_unique_lb) warn("lower-bound optimal solution is not unique");
  if (!rep.primal_unique_ub) warn("upper-bound optimal solution is not unique");
  if (!rep.dual_unique_lb) warn("lower-bound Lagrange multipliers are not unique (degenerate basis)");
  if (!rep.dual_unique_ub) warn("upper-bound Lagrange multipliers are not unique (degenerate basis)");
  if (rep.delta_hat <= rep.b_n)
    warn("estimated set length " + format_double(rep.delta_hat) + " <= b_n " +
         format_double(rep.b_n) + "; model is at or near point identification");
  if (rep.relaxation_used > 0.0)
    warn("moment system was infeasible; relaxation c* + eps = " +
         format_double(rep.relaxation_used) + " applied");

  rep.caveats = {
      "This report checks sample analogues at the realized data only. Uniform (over the class of "
      "data-generating processes) versions of the constraint qualification, solution uniqueness, "
      "and the Donsker-type conditions cannot be verified from a single sample and are assumed.",
      "Measurability and envelope conditions on the moment function class are assumed, not "
      "checked."};
  return rep;
}

std::string report_to_json(const DiagnosticsReport& rep) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["lb"] = rep.lb;
  j["ub"] = rep.ub;
  j["delta_hat"] = rep.delta_hat;
  j["b_n"] = rep.b_n;
  j["relaxation_used"] = rep.relaxation_used;
  j["licq"] = {
      {"min_eig_lb", rep.licq_min_eig_lb},
      {"min_eig_ub", rep.licq_min_eig_ub},
      {"min_eig_normalized_lb", rep.licq_min_eig_norm_lb},
      {"min_eig_normalized_ub", rep.licq_min_eig_norm_ub},
      {"active_labels_lb", rep.active_labels_lb},
      {"active_labels_ub", rep.active_labels_ub},
  };
  j["uniqueness"] = {
      {"primal_unique_lb", rep.primal_unique_lb},
      {"primal_unique_ub", rep.primal_unique_ub},
      {"dual_unique_lb", rep.dual_unique_lb},
      {"dual_unique_ub", rep.dual_unique_ub},
  };
  nlohmann::json mults_lb = nlohmann::json::object();
  for (const auto& [label, v] : rep.multipliers_lb) mults_lb[label] = v;
  nlohmann::json mults_ub = nlohmann::json::object();
  for (const auto& [label, v] : rep.multipliers_ub) mults_ub[label] = v;
  j["multipliers_lb"] = mults_lb;
  j["multipliers_ub"] = mults_ub;
  j["alpha"] = rep.alpha;
  j["seed"] = rep.seed;
  j["warnings"] = rep.warnings;
  j["caveats"] = rep.caveats;
  return j.dump(2);
}

}  // namespace pibound
