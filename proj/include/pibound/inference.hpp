#pragma once

#include <cstdint>
#include <vector>

#include "pibound/lp.hpp"
#include "pibound/model.hpp"

namespace pibound {

enum class ThresholdMode : std::uint8_t { Length, Indicator };
enum class DrawFlag : std::uint8_t { Ok, Relaxed, Failed };

struct InferenceOptions {
  double alpha = 0.10;
  int bootstrap_draws = 1000;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 -> hardware / PIBOUND_THREADS
  ThresholdMode threshold_mode = ThresholdMode::Length;
  bool auto_relax = true;
  bool clamp_nonnegative = false;
  // Feasibility slack on top of c*: eps = relax_epsilon_rel * (1 + ||rhs||inf).
  double relax_epsilon_rel = 1e-6;
  SolverOptions solver;
};

/// Estimated identified set [lb, ub] for the functional, with both LP
/// solutions and the net per-moment duals (sensitivity convention; a split
/// equality's pair collapses to one free-signed dual).
struct IdentifiedSetEstimate {
  double lb = 0.0;
  double ub = 0.0;
  double delta = 0.0;
  double relaxation_used = 0.0;
  LpSolution sol_lb;
  LpSolution sol_ub;
  std::vector<double> moment_duals_lb;
  std::vector<double> moment_duals_ub;
};

/// Paired, sqrt(n)-scaled recentered bootstrap value functions:
///   L[b] = sqrt(n) * (lb_b - lb_hat),  U[b] = sqrt(n) * (ub_b - ub_hat),
/// with L[b] and U[b] computed from the same resample. Failed draws carry
/// NaN and are excluded from calibration.
struct BootstrapDraws {
  int B = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<double> L;
  std::vector<double> U;
  std::vector<DrawFlag> flags;

  int n_ok() const;
  int n_failed() const;
  double failure_rate() const;
};

struct ThresholdResult {
  double delta_star = 0.0;
  double b_n = 0.0;
};

/// b_n = (ln n)^{-1/2}; delta_star = delta_hat (Length mode) or 1 (Indicator
/// mode) when delta_hat > b_n, else 0.
ThresholdResult threshold_delta(double delta_hat, std::size_t n,
                                ThresholdMode mode = ThresholdMode::Length);

struct QuantilePair {
  double q_lb = 0.0;
  double q_ub = 0.0;
};

/// Shortest-length quantile pair subject to the two joint bootstrap coverage
/// constraints at level 1 - alpha (D = sqrt(n) * delta_star):
///   C1: #{b : L[b] <= q_lb      and U[b] >= -q_ub - D} >= ceil((1-alpha) B_ok)
///   C2: #{b : L[b] <= q_lb + D  and U[b] >= -q_ub    } >= ceil((1-alpha) B_ok)
/// The optimum is attained on the candidate grid {L[b]} u {L[b] - D}; ties
/// break toward smaller q_lb. Throws CalibrationError when no pair works.
QuantilePair calibrate_quantiles(const BootstrapDraws& draws, double delta_star, double alpha);

struct ConfidenceSet {
  double lower = 0.0;
  double upper = 0.0;
  double alpha = 0.0;
  double q_lb = 0.0;
  double q_ub = 0.0;
  double delta_hat = 0.0;
  double delta_star = 0.0;
  double b_n = 0.0;
};

struct ConfidenceResult {
  ConfidenceSet set;
  IdentifiedSetEstimate estimate;
  BootstrapDraws draws;
};

/// Smallest uniform slack c* >= 0 making the weighted moment system feasible
/// over the theta box (value of the auxiliary min-max LP; equalities enter as
/// +- pairs). The model relaxed by c* + eps is feasible for any eps > 0.
double compute_relaxation(const BoundModel& model, const Weights& weights,
                          const SolverOptions& solver = {});

IdentifiedSetEstimate estimate_identified_set(const BoundModel& model, const Weights& weights,
                                              const InferenceOptions& options = {});

/// Multinomial bootstrap of both value functions. Draw b uses an independent
/// generator keyed by (seed, b); output is identical for any thread count.
/// The original-sample relaxation is the floor for every draw; draws that are
/// still infeasible re-relax locally and are flagged Relaxed.
BootstrapDraws bootstrap_value_functions(const BoundModel& model,
                                         const IdentifiedSetEstimate& estimate, int B,
                                         std::uint64_t seed, const InferenceOptions& options = {});

/// estimate -> bootstrap -> threshold -> calibrate -> confidence set.
ConfidenceResult construct_confidence_set(const BoundModel& model,
                                          const InferenceOptions& options = {});

/// Analytic delta-method approximation to the laws of L and U: influence
/// values psi(W_i, theta*) - sum_j dual_j m_j(W_i, theta*) for each bound,
/// centered; sd_* are the weighted sample standard deviations.
struct DeltaMethodOracle {
  double sd_lb = 0.0;
  double sd_ub = 0.0;
  std::vector<double> influence_lb;
  std::vector<double> influence_ub;
};

DeltaMethodOracle delta_method_oracle(const BoundModel& model, const Weights& weights,
                                      const IdentifiedSetEstimate& estimate);

}  // namespace pibound
