#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pibound/inference.hpp"

namespace pibound {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitCalibration = 4;
inline constexpr int kExitLicqViolation = 5;

struct RunConfig {
  std::string command;  // estimate | infer | diagnose | simulate
  std::string model_path;
  std::string data_path;
  double alpha = 0.10;
  int boot = 1000;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 -> hardware / PIBOUND_THREADS
  ThresholdMode threshold_mode = ThresholdMode::Length;
  bool relax_auto = true;
  bool clamp_nonnegative = false;
  std::string output_path;  // empty -> stdout

  // simulate-only
  std::string example;  // missing-data | interval-regression
  std::vector<int> n_list;
  std::vector<double> c_list;
  std::vector<double> alpha_list;
  int reps = 1000;
  bool pretty = false;
  std::string emit_dir;  // when set, write each cell's first generated model/data pair
};

struct SimulationRow {
  int n = 0;
  double c = 0.0;
  double alpha = 0.0;
  int reps = 0;
  int boot = 0;
  double coverage = 0.0;
  double avg_lb = 0.0;
  double avg_ub = 0.0;
  double avg_ci_lower = 0.0;
  double avg_ci_upper = 0.0;
  int failures = 0;
  double wall_seconds = 0.0;
};

/// One Monte Carlo cell: reps experiments of generate -> confidence set ->
/// score psi_true membership, parallel across reps with per-rep seed streams.
SimulationRow run_simulation_cell(const std::string& example, int n, double c, double alpha,
                                  int reps, int boot, std::uint64_t seed, int threads,
                                  ThresholdMode mode = ThresholdMode::Length);

int cmd_estimate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_infer(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_diagnose(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Parse argv and dispatch; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace pibound
