#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pibound/inference.hpp"
#include "pibound/model.hpp"

namespace pibound {

struct DiagnosticsOptions {
  // Warning floor for the minimum eigenvalue of G G^T on unit-normalized
  // gradient rows; a scale-free sample analogue of the uniform LICQ constant.
  double eig_warn = 1e-6;
  InferenceOptions inference;
};

struct LicqResult {
  double min_eig = 0.0;             // raw gradient rows
  double min_eig_normalized = 0.0;  // rows scaled to unit euclidean length
  std::vector<std::string> active_labels;
};

/// Minimum eigenvalue of G G^T where G stacks the weighted-mean theta
/// gradients of every equality moment and of each inequality moment binding
/// at sol.primal (within tol_active of the applied relaxation). Empty G
/// yields 0.
LicqResult check_licq(const BoundModel& model, const Weights& weights, const LpSolution& sol,
                      double relaxation = 0.0, const DiagnosticsOptions& options = {});

struct ProbeResult {
  double pass_fraction = 0.0;
  int trials = 0;
  int infeasible_trials = 0;
};

/// Genericity probe: independently perturbs every (split) moment row's rhs
/// uniformly on [-epsilon_scale, epsilon_scale], re-solves both bounding LPs
/// and checks the LICQ on the rows active in the perturbed system. A trial
/// passes when both directions pass; an empty active set passes vacuously;
/// infeasible trials count as non-pass.
ProbeResult perturbation_licq_probe(const BoundModel& model, const Weights& weights,
                                    double epsilon_scale, int trials, std::uint64_t seed,
                                    const DiagnosticsOptions& options = {});

struct DiagnosticsReport {
  double lb = 0.0;
  double ub = 0.0;
  double delta_hat = 0.0;
  double b_n = 0.0;
  double relaxation_used = 0.0;
  double licq_min_eig_lb = 0.0;
  double licq_min_eig_ub = 0.0;
  double licq_min_eig_norm_lb = 0.0;
  double licq_min_eig_norm_ub = 0.0;
  std::vector<std::string> active_labels_lb;
  std::vector<std::string> active_labels_ub;
  bool primal_unique_lb = true;
  bool primal_unique_ub = true;
  bool dual_unique_lb = true;
  bool dual_unique_ub = true;
  std::vector<std::pair<std::string, double>> multipliers_lb;
  std::vector<std::pair<std::string, double>> multipliers_ub;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
  std::vector<std::string> caveats;
};

DiagnosticsReport full_report(const BoundModel& model, double alpha, std::uint64_t seed,
                              const DiagnosticsOptions& options = {});

std::string report_to_json(const DiagnosticsReport& report);

}  // namespace pibound
