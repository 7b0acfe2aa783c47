#pragma once

#include <array>
#include <cstdint>

#include "pibound/model.hpp"

namespace pibound {

/// Missing-data design: Y in {1..5} observed only when D = 1, with
/// P(Y=y, D=1) = (1-q)/5 and P(Y=y, D=0) = q/5 for q = max(c/sqrt(n), delta).
/// The target is the unconditional mean of Y; its population value is 3 for
/// every q.
struct MissingDataConfig {
  int n = 1000;
  double c = 1.0;
  double delta = 1e-6;
  std::uint64_t seed = 0;
};

/// Interval-regression design: Y = X.theta_true + eps with X in {0,1}^4
/// (16 support points), eps ~ N(0,1), and the outcome observed only as the
/// interval [Y - h, Y + h] with h = max(c/sqrt(n), delta). The target is the
/// first regression coefficient.
struct IntervalRegressionConfig {
  int n = 1000;
  double c = 1.0;
  double delta = 1e-6;
  std::array<double, 4> theta_true = {1.15, 1.0, 1.0, 1.0};
  std::uint64_t seed = 0;
};

struct GeneratedExample {
  Dataset data;
  ModelSpec spec;
  double psi_true = 0.0;
};

GeneratedExample generate_missing_data(const MissingDataConfig& cfg);
GeneratedExample generate_interval_regression(const IntervalRegressionConfig& cfg);

}  // namespace pibound
