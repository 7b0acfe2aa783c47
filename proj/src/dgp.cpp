#include "pibound/dgp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pibound/errors.hpp"
#include "pibound/rng.hpp"

namespace pibound {

namespace {

double clamp01(double q) { return std::min(1.0, std::max(0.0, q)); }

}  // namespace

GeneratedExample generate_missing_data(const MissingDataConfig& cfg) {
  if (cfg.n < 1) throw ValidationError("MissingDataConfig.n must be >= 1");
  if (cfg.c < 0.0 || cfg.delta < 0.0)
    throw ValidationError("MissingDataConfig: c and delta must be nonnegative");
  const double q = clamp01(std::max(cfg.c / std::sqrt(static_cast<double>(cfg.n)), cfg.delta));

  RngStream rng(cfg.seed, rng_stream::kDgp, 0x6d697373ULL);
  const std::size_t n = static_cast<std::size_t>(cfg.n);
  std::vector<double> yd(n), d(n), c_d0(n);
  std::vector<std::vector<double>> c_yd1(5, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const int y = 1 + static_cast<int>(rng.next_below(5));
    const bool observed = rng.next_double() >= q;
    d[i] = observed ? 1.0 : 0.0;
    yd[i] = observed ? y : 0.0;
    c_d0[i] = observed ? 0.0 : -1.0;
    if (observed) c_yd1[y - 1][i] = -1.0;
  }

  GeneratedExample out;
  out.data.add_column("yd", std::move(yd));
  out.data.add_column("d", std::move(d));
  out.data.add_column("c_d0", std::move(c_d0));
  for (int y = 1; y <= 5; ++y)
    out.data.add_column("c_y" + std::to_string(y) + "d1", std::move(c_yd1[y - 1]));

  // theta = (theta_{1,0},...,theta_{5,0}, theta_{1,1},...,theta_{5,1}).
  ModelSpec& spec = out.spec;
  spec.d_theta = 10;
  spec.theta_lower.assign(10, 0.0);
  spec.theta_upper.assign(10, 1.0);
  spec.objective.coeffs.resize(10);
  for (int y = 1; y <= 5; ++y) {
    spec.objective.coeffs[y - 1] = ValueSource::lit(y);      // theta_{y,0}
    spec.objective.coeffs[4 + y] = ValueSource::lit(y);      // theta_{y,1}
  }
  spec.objective.constant = ValueSource::lit(0.0);

  MomentSpec mass;
  mass.label = "mass_d0";
  mass.sense = MomentSense::Eq;
  mass.form.coeffs.assign(10, ValueSource::lit(0.0));
  for (int y = 0; y < 5; ++y) mass.form.coeffs[y] = ValueSource::lit(1.0);
  mass.form.constant = ValueSource::col("c_d0");
  spec.moments.push_back(std::move(mass));
  for (int y = 1; y <= 5; ++y) {
    MomentSpec m;
    m.label = "match_y" + std::to_string(y) + "d1";
    m.sense = MomentSense::Eq;
    m.form.coeffs.assign(10, ValueSource::lit(0.0));
    m.form.coeffs[4 + y] = ValueSource::lit(1.0);
    m.form.constant = ValueSource::col("c_y" + std::to_string(y) + "d1");
    spec.moments.push_back(std::move(m));
  }

  out.psi_true = 3.0;
  return out;
}

GeneratedExample generate_interval_regression(const IntervalRegressionConfig& cfg) {
  if (cfg.n < 1) throw ValidationError("IntervalRegressionConfig.n must be >= 1");
  if (cfg.c < 0.0 || cfg.delta < 0.0)
    throw ValidationError("IntervalRegressionConfig: c and delta must be nonnegative");
  const double h = std::max(cfg.c / std::sqrt(static_cast<double>(cfg.n)), cfg.delta);
  if (!(h > 0.0))
    throw ValidationError("IntervalRegressionConfig: interval half-width max{c/sqrt(n), delta} must be > 0");

  RngStream rng(cfg.seed, rng_stream::kDgp, 0x696e7476ULL);
  const std::size_t n = static_cast<std::size_t>(cfg.n);
  constexpr int kSupport = 16;

  std::vector<std::vector<double>> x(4, std::vector<double>(n));
  std::vector<double> ylo(n), yhi(n);
  std::vector<int> cell(n);
  for (std::size_t i = 0; i < n; ++i) {
    int r = 0;
    for (int comp = 0; comp < 4; ++comp) {
      const int bit = rng.next_double() < 0.5 ? 0 : 1;
      x[comp][i] = bit;
      r |= bit << comp;
    }
    cell[i] = r;
    double y = rng.next_normal();
    for (int comp = 0; comp < 4; ++comp) y += x[comp][i] * cfg.theta_true[comp];
    ylo[i] = y - h;
    yhi[i] = y + h;
  }

  GeneratedExample out;
  for (int comp = 0; comp < 4; ++comp)
    out.data.add_column("x" + std::to_string(comp + 1), std::move(x[comp]));
  out.data.add_column("ylo", ylo);
  out.data.add_column("yhi", yhi);
  for (int r = 0; r < kSupport; ++r) {
    std::vector<double> ind_neg(n, 0.0), ind_pos(n, 0.0), c_lo(n, 0.0), c_hi(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (cell[i] != r) continue;
      ind_neg[i] = -1.0;
      ind_pos[i] = 1.0;
      c_lo[i] = ylo[i];
      c_hi[i] = -yhi[i];
    }
    const std::string tag = std::to_string(r);
    out.data.add_column("gneg_" + tag, std::move(ind_neg));
    out.data.add_column("gpos_" + tag, std::move(ind_pos));
    out.data.add_column("c_lo_" + tag, std::move(c_lo));
    out.data.add_column("c_hi_" + tag, std::move(c_hi));
  }

  ModelSpec& spec = out.spec;
  spec.d_theta = 4;
  spec.theta_lower.assign(4, -10.0);
  spec.theta_upper.assign(4, 10.0);
  spec.objective.coeffs = {ValueSource::lit(1.0), ValueSource::lit(0.0), ValueSource::lit(0.0),
                           ValueSource::lit(0.0)};
  spec.objective.constant = ValueSource::lit(0.0);

  for (int r = 0; r < kSupport; ++r) {
    const std::string tag = std::to_string(r);
    // E[Y_* 1{X=x_r}] - x_r.theta P(X=x_r) <= 0
    MomentSpec lo;
    lo.label = "lo_" + tag;
    lo.sense = MomentSense::Leq;
    lo.form.coeffs.assign(4, ValueSource::lit(0.0));
    for (int comp = 0; comp < 4; ++comp)
      if (r & (1 << comp)) lo.form.coeffs[comp] = ValueSource::col("gneg_" + tag);
    lo.form.constant = ValueSource::col("c_lo_" + tag);
    spec.moments.push_back(std::move(lo));
    // x_r.theta P(X=x_r) - E[Y^* 1{X=x_r}] <= 0
    MomentSpec hi;
    hi.label = "hi_" + tag;
    hi.sense = MomentSense::Leq;
    hi.form.coeffs.assign(4, ValueSource::lit(0.0));
    for (int comp = 0; comp < 4; ++comp)
      if (r & (1 << comp)) hi.form.coeffs[comp] = ValueSource::col("gpos_" + tag);
    hi.form.constant = ValueSource::col("c_hi_" + tag);
    spec.moments.push_back(std::move(hi));
  }

  out.psi_true = cfg.theta_true[0];
  return out;
}

}  // namespace pibound
