#pragma once

#include <stdexcept>
#include <string>

namespace pibound {

/// Malformed inputs: bad model documents, dimension mismatches, unknown
/// columns, invalid configuration. CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Numerical breakdown inside the LP solver (feasibility could not be
/// certified within the iteration cap). CLI maps these to exit code 3.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// No quantile pair satisfies the joint bootstrap constraints (pathological
/// draws, e.g. a mass of failed replications). CLI maps these to exit code 4.
class CalibrationError : public std::runtime_error {
 public:
  explicit CalibrationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pibound
