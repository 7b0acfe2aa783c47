#include "pibound/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pibound/diagnostics.hpp"
#include "pibound/dgp.hpp"
#include "pibound/errors.hpp"
#include "pibound/parallel.hpp"
#include "pibound/rng.hpp"

namespace pibound {

namespace {

using nlohmann::json;

InferenceOptions options_from(const RunConfig& cfg) {
  InferenceOptions opt;
  opt.alpha = cfg.alpha;
  opt.bootstrap_draws = cfg.boot;
  opt.seed = cfg.seed;
  opt.threads = cfg.threads;
  opt.threshold_mode = cfg.threshold_mode;
  opt.auto_relax = cfg.relax_auto;
  opt.clamp_nonnegative = cfg.clamp_nonnegative;
  return opt;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct LoadedProblem {
  ModelSpec spec;
  Dataset data;
  std::unique_ptr<BoundModel> model;
};

LoadedProblem load_problem(const RunConfig& cfg) {
  LoadedProblem p;
  p.spec = parse_model(read_text_file(cfg.model_path));
  p.data = read_csv_file(cfg.data_path);
  p.model = std::make_unique<BoundModel>(p.spec, p.data);
  return p;
}

void emit(const RunConfig& cfg, std::ostream& out, const std::string& text) {
  if (cfg.output_path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(cfg.output_path);
  if (!f) throw ValidationError("cannot open output file '" + cfg.output_path + "'");
  f << text;
}

json multipliers_json(const ModelSpec& spec, const std::vector<double>& duals) {
  json j = json::object();
  for (std::size_t i = 0; i < duals.size(); ++i) j[spec.moments[i].label] = duals[i];
  return j;
}

json estimate_json(const ModelSpec& spec, const IdentifiedSetEstimate& est) {
  json j;
  j["lb"] = est.lb;
  j["ub"] = est.ub;
  j["delta"] = est.delta;
  j["relaxation_used"] = est.relaxation_used;
  j["theta_lb"] = est.sol_lb.primal;
  j["theta_ub"] = est.sol_ub.primal;
  j["multipliers_lb"] = multipliers_json(spec, est.moment_duals_lb);
  j["multipliers_ub"] = multipliers_json(spec, est.moment_duals_ub);
  return j;
}

json quantile_summary(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  auto at = [&](double p) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    const std::size_t idx =
        std::min(values.size() - 1, static_cast<std::size_t>(p * static_cast<double>(values.size())));
    return values[idx];
  };
  return json{{"p05", at(0.05)}, {"p25", at(0.25)}, {"p50", at(0.50)},
              {"p75", at(0.75)}, {"p95", at(0.95)}};
}

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const CalibrationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitCalibration;
  } catch (const SolverError& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  }
}

GeneratedExample generate_example(const std::string& example, int n, double c, std::uint64_t seed) {
  if (example == "missing-data") {
    MissingDataConfig cfg;
    cfg.n = n;
    cfg.c = c;
    cfg.seed = seed;
    return generate_missing_data(cfg);
  }
  if (example == "interval-regression") {
    IntervalRegressionConfig cfg;
    cfg.n = n;
    cfg.c = c;
    cfg.seed = seed;
    return generate_interval_regression(cfg);
  }
  throw ValidationError("unknown example '" + example +
                        "' (expected missing-data or interval-regression)");
}

std::string simulation_csv(const std::vector<SimulationRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "n,c,alpha,reps,boot,coverage,avg_lb,avg_ub,avg_ci_lower,avg_ci_upper,failures,"
        "wall_seconds\n";
  for (const auto& r : rows)
    os << r.n << ',' << r.c << ',' << r.alpha << ',' << r.reps << ',' << r.boot << ','
       << r.coverage << ',' << r.avg_lb << ',' << r.avg_ub << ',' << r.avg_ci_lower << ','
       << r.avg_ci_upper << ',' << r.failures << ',' << r.wall_seconds << '\n';
  return os.str();
}

// Write the dataset/model document pair that rep 0 of a cell would see, so a
// simulate run can be replayed through estimate/infer/diagnose.
void emit_cell_files(const std::string& dir, const std::string& example, int n, double c,
                     std::uint64_t cell_seed) {
  RngStream key(cell_seed, rng_stream::kMonteCarloRep, 0);
  const std::uint64_t data_seed = key.next_u64();
  const GeneratedExample ex = generate_example(example, n, c, data_seed);
  std::ostringstream stem;
  stem << example << "_n" << n << "_c" << c;
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path base = fs::path(dir) / stem.str();
  std::ofstream model_out(base.string() + "_model.json");
  if (!model_out)
    throw ValidationError("cannot write to emit directory '" + dir + "'");
  model_out << serialize_model(ex.spec) << '\n';
  write_csv_file(ex.data, base.string() + "_data.csv");
}

std::string simulation_pretty(const std::vector<SimulationRow>& rows) {
  std::ostringstream os;
  os << std::setw(7) << "n" << std::setw(8) << "c" << std::setw(8) << "alpha" << std::setw(10)
     << "coverage" << std::setw(10) << "avg_lb" << std::setw(10) << "avg_ub" << std::setw(12)
     << "ci_lower" << std::setw(12) << "ci_upper" << std::setw(10) << "failures" << std::setw(10)
     << "seconds" << '\n';
  os << std::fixed << std::setprecision(3);
  for (const auto& r : rows)
    os << std::setw(7) << r.n << std::setw(8) << r.c << std::setw(8) << r.alpha << std::setw(10)
       << r.coverage << std::setw(10) << r.avg_lb << std::setw(10) << r.avg_ub << std::setw(12)
       << r.avg_ci_lower << std::setw(12) << r.avg_ci_upper << std::setw(10) << r.failures
       << std::setw(10) << std::setprecision(1) << r.wall_seconds << std::setprecision(3) << '\n';
  return os.str();
}

}  // namespace

SimulationRow run_simulation_cell(const std::string& example, int n, double c, double alpha,
                                  int reps, int boot, std::uint64_t seed, int threads,
                                  ThresholdMode mode) {
  if (reps < 1) throw ValidationError("simulate: reps must be >= 1");
  if (boot < 1) throw ValidationError("simulate: boot must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("simulate: alpha must be in (0,1)");
  // Validate the example name before spawning workers.
  (void)generate_example(example, 2, c, 0);

  struct RepResult {
    bool failed = true;
    bool covered = false;
    double lb = 0, ub = 0, ci_lower = 0, ci_upper = 0;
  };
  std::vector<RepResult> results(reps);
  const auto t0 = std::chrono::steady_clock::now();

  parallel_for_index(static_cast<std::size_t>(reps), threads, [&](std::size_t rep) {
    RngStream key(seed, rng_stream::kMonteCarloRep, rep);
    const std::uint64_t data_seed = key.next_u64();
    const std::uint64_t boot_seed = key.next_u64();
    try {
      const GeneratedExample ex = generate_example(example, n, c, data_seed);
      BoundModel model(ex.spec, ex.data);
      InferenceOptions opt;
      opt.alpha = alpha;
      opt.bootstrap_draws = boot;
      opt.seed = boot_seed;
      opt.threads = 1;  // reps are the parallel unit
      opt.threshold_mode = mode;
      const ConfidenceResult res = construct_confidence_set(model, opt);
      RepResult& r = results[rep];
      r.failed = false;
      r.covered = ex.psi_true >= res.set.lower && ex.psi_true <= res.set.upper;
      r.lb = res.estimate.lb;
      r.ub = res.estimate.ub;
      r.ci_lower = res.set.lower;
      r.ci_upper = res.set.upper;
    } catch (const std::runtime_error&) {
      // recorded as a failure
    }
  });

  SimulationRow row;
  row.n = n;
  row.c = c;
  row.alpha = alpha;
  row.reps = reps;
  row.boot = boot;
  int ok = 0, covered = 0;
  for (const auto& r : results) {
    if (r.failed) {
      ++row.failures;
      continue;
    }
    ++ok;
    covered += r.covered ? 1 : 0;
    row.avg_lb += r.lb;
    row.avg_ub += r.ub;
    row.avg_ci_lower += r.ci_lower;
    row.avg_ci_upper += r.ci_upper;
  }
  if (ok > 0) {
    row.coverage = static_cast<double>(covered) / ok;
    row.avg_lb /= ok;
    row.avg_ub /= ok;
    row.avg_ci_lower /= ok;
    row.avg_ci_upper /= ok;
  }
  row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

int cmd_estimate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    LoadedProblem p = load_problem(cfg);
    const IdentifiedSetEstimate est =
        estimate_identified_set(*p.model, Weights::uniform(p.data.n), options_from(cfg));
    json j = estimate_json(p.spec, est);
    j["schema_version"] = 1;
    emit(cfg, out, j.dump(2) + "\n");
    return kExitOk;
  });
}

int cmd_infer(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    if (cfg.boot < 1) throw ValidationError("infer: --boot must be >= 1");
    LoadedProblem p = load_problem(cfg);
    const ConfidenceResult res = construct_confidence_set(*p.model, options_from(cfg));

    json j;
    j["schema_version"] = 1;
    j["confidence_set"] = {
        {"lower", res.set.lower},       {"upper", res.set.upper},
        {"alpha", res.set.alpha},       {"q_lb", res.set.q_lb},
        {"q_ub", res.set.q_ub},         {"delta_hat", res.set.delta_hat},
        {"delta_star", res.set.delta_star}, {"b_n", res.set.b_n},
    };
    j["estimate"] = estimate_json(p.spec, res.estimate);
    std::vector<double> oks_l, oks_u;
    int relaxed = 0;
    for (int b = 0; b < res.draws.B; ++b) {
      if (res.draws.flags[b] == DrawFlag::Failed) continue;
      if (res.draws.flags[b] == DrawFlag::Relaxed) ++relaxed;
      oks_l.push_back(res.draws.L[b]);
      oks_u.push_back(res.draws.U[b]);
    }
    j["draws"] = {
        {"B", res.draws.B},
        {"n", res.draws.n},
        {"seed", res.draws.seed},
        {"failure_rate", res.draws.failure_rate()},
        {"relaxed_draws", relaxed},
        {"L_quantiles", quantile_summary(std::move(oks_l))},
        {"U_quantiles", quantile_summary(std::move(oks_u))},
    };
    json warnings = json::array();
    if (cfg.boot == 1)
      warnings.push_back("boot=1: bootstrap quantiles are degenerate; the confidence set "
                         "collapses onto the estimated bounds");
    j["warnings"] = warnings;
    emit(cfg, out, j.dump(2) + "\n");
    return kExitOk;
  });
}

int cmd_diagnose(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    LoadedProblem p = load_problem(cfg);
    DiagnosticsOptions opt;
    opt.inference = options_from(cfg);
    const DiagnosticsReport rep = full_report(*p.model, cfg.alpha, cfg.seed, opt);
    emit(cfg, out, report_to_json(rep) + "\n");
    // Exactly-zero minimum eigenvalue with a nonempty active gradient set is
    // a hard LICQ violation.
    const bool hard_lb = !rep.active_labels_lb.empty() && rep.licq_min_eig_norm_lb <= 1e-12;
    const bool hard_ub = !rep.active_labels_ub.empty() && rep.licq_min_eig_norm_ub <= 1e-12;
    return (hard_lb || hard_ub) ? kExitLicqViolation : kExitOk;
  });
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    std::vector<int> ns = cfg.n_list.empty() ? std::vector<int>{1000} : cfg.n_list;
    std::vector<double> cs = cfg.c_list.empty() ? std::vector<double>{1.0} : cfg.c_list;
    std::vector<double> alphas =
        cfg.alpha_list.empty() ? std::vector<double>{cfg.alpha} : cfg.alpha_list;

    std::vector<SimulationRow> rows;
    std::uint64_t cell = 0;
    for (const int n : ns)
      for (const double c : cs)
        for (const double a : alphas) {
          const std::uint64_t cell_seed = mix64(cfg.seed ^ mix64(cell + 1));
          if (!cfg.emit_dir.empty() && a == alphas.front())
            emit_cell_files(cfg.emit_dir, cfg.example, n, c, cell_seed);
          rows.push_back(run_simulation_cell(cfg.example, n, c, a, cfg.reps, cfg.boot, cell_seed,
                                             cfg.threads, cfg.threshold_mode));
          ++cell;
        }
    emit(cfg, out, cfg.pretty ? simulation_pretty(rows) : simulation_csv(rows));
    return kExitOk;
  });
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Identified-set estimation and naive-bootstrap confidence sets for linear "
               "functionals of partially identified parameters"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string threshold_mode = "length";
  std::string relax = "auto";

  auto add_common = [&](CLI::App* sub, bool needs_files) {
    if (needs_files) {
      sub->add_option("--model", cfg.model_path, "model spec JSON")->required();
      sub->add_option("--data", cfg.data_path, "dataset CSV")->required();
    }
    sub->add_option("--alpha", cfg.alpha, "significance level (default 0.10)");
    sub->add_option("--boot", cfg.boot, "bootstrap replications (default 1000)");
    sub->add_option("--seed", cfg.seed, "master seed (default 0)");
    sub->add_option("--threads", cfg.threads, "worker threads (default: hardware)");
    sub->add_option("--threshold-mode", threshold_mode, "length|indicator (default length)");
    sub->add_option("--relax", relax, "auto|off: empty-set relaxation policy (default auto)");
    sub->add_flag("--clamp-nonnegative", cfg.clamp_nonnegative,
                  "clamp calibrated quantiles at zero");
    sub->add_option("--out", cfg.output_path, "output file (default stdout)");
  };

  CLI::App* estimate = app.add_subcommand("estimate", "estimate the identified set");
  add_common(estimate, true);
  CLI::App* infer = app.add_subcommand("infer", "construct a bootstrap confidence set");
  add_common(infer, true);
  CLI::App* diagnose = app.add_subcommand("diagnose", "regularity diagnostics report");
  add_common(diagnose, true);
  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo coverage study");
  add_common(simulate, false);
  simulate->add_option("--example", cfg.example, "missing-data|interval-regression")->required();
  simulate->add_option("--n", cfg.n_list, "sample sizes (repeat or comma-separate)")
      ->delimiter(',');
  simulate->add_option("--c", cfg.c_list, "DGP c values")->delimiter(',');
  simulate->add_option("--alphas", cfg.alpha_list, "significance levels")->delimiter(',');
  simulate->add_option("--reps", cfg.reps, "Monte Carlo repetitions (default 1000)");
  simulate->add_flag("--pretty", cfg.pretty, "aligned table instead of CSV");
  simulate->add_option("--emit-dir", cfg.emit_dir,
                       "also write each cell's first generated model/data pair here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitValidation;
  }

  if (threshold_mode == "length")
    cfg.threshold_mode = ThresholdMode::Length;
  else if (threshold_mode == "indicator")
    cfg.threshold_mode = ThresholdMode::Indicator;
  else {
    err << "error: --threshold-mode: expected length or indicator, got '" << threshold_mode
        << "'\n";
    return kExitValidation;
  }
  if (relax == "auto")
    cfg.relax_auto = true;
  else if (relax == "off")
    cfg.relax_auto = false;
  else {
    err << "error: --relax: expected auto or off, got '" << relax << "'\n";
    return kExitValidation;
  }
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    err << "error: --alpha must be in (0,1)\n";
    return kExitValidation;
  }

  if (estimate->parsed()) return cmd_estimate(cfg, out, err);
  if (infer->parsed()) return cmd_infer(cfg, out, err);
  if (diagnose->parsed()) return cmd_diagnose(cfg, out, err);
  return cmd_simulate(cfg, out, err);
}

}  // namespace pibound
