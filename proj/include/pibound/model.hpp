#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pibound/lp.hpp"

namespace pibound {

/// One coefficient/constant of an observation-level affine form: either a
/// fixed literal or a named dataset column.
struct ValueSource {
  enum class Kind : std::uint8_t { Literal, Column } kind = Kind::Literal;
  double literal = 0.0;
  std::string column;

  static ValueSource lit(double v) { return {Kind::Literal, v, {}}; }
  static ValueSource col(std::string name) { return {Kind::Column, 0.0, std::move(name)}; }
  bool operator==(const ValueSource&) const = default;
};

/// Observation-level affine map w -> coeffs(w) . theta + constant(w).
struct AffineForm {
  std::vector<ValueSource> coeffs;  // length d_theta
  ValueSource constant;
  bool operator==(const AffineForm&) const = default;
};

enum class MomentSense : std::uint8_t { Eq, Leq };

struct MomentSpec {
  std::string label;
  MomentSense sense = MomentSense::Leq;
  AffineForm form;
  bool operator==(const MomentSpec&) const = default;
};

/// Declarative moment model: objective functional and moment functions as
/// observation-level affine forms in theta over a compact box.
struct ModelSpec {
  int d_theta = 0;
  std::vector<double> theta_lower;
  std::vector<double> theta_upper;
  AffineForm objective;
  std::vector<MomentSpec> moments;
  bool operator==(const ModelSpec&) const = default;
};

struct Dataset {
  std::size_t n = 0;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;  // column-major, each of length n

  int column_index(const std::string& name) const;  // -1 if absent
  void add_column(std::string name, std::vector<double> values);
};

/// Observation weights: w == 1 for the empirical measure, or nonnegative
/// counts summing to n for a multinomial bootstrap resample.
struct Weights {
  std::vector<double> w;
  static Weights uniform(std::size_t n) { return {std::vector<double>(n, 1.0)}; }
};

enum class Direction : std::uint8_t { Lower, Upper };

/// Structural validation of a model-spec JSON document (schema, dimensions,
/// label uniqueness, finite bounds). Column references are resolved when the
/// spec is bound to a dataset. Errors name the offending field.
ModelSpec parse_model(const std::string& json_text);
std::string serialize_model(const ModelSpec& spec);

Dataset read_csv(std::istream& in);
Dataset read_csv_file(const std::string& path);
void write_csv(const Dataset& data, std::ostream& out);
void write_csv_file(const Dataset& data, const std::string& path);

/// Identifies, for each empirical-LP row, the moment it encodes. A split
/// equality contributes two rows with signs +1 and -1; the net free-signed
/// moment dual is dual(+row) - dual(-row).
struct RowOrigin {
  int moment = -1;
  double sign = 1.0;
};

struct EmpiricalLp {
  LinearProgram lp;
  std::vector<RowOrigin> rows;
};

struct AssemblyPolicy {
  double relaxation = 0.0;
  // Equalities are split into +- pairs whenever relaxation > 0; force_split
  // requests the split regardless (used by the genericity probe).
  bool force_split = false;
  // Optional extra per-row rhs shifts, indexed in split-row order.
  const std::vector<double>* row_shifts = nullptr;
};

/// A ModelSpec bound to a Dataset: every column reference resolved, ready for
/// repeated reweighted assembly. Immutable after construction; const methods
/// are safe to call concurrently.
class BoundModel {
 public:
  BoundModel(ModelSpec spec, const Dataset& data);

  const ModelSpec& spec() const { return spec_; }
  const Dataset& data() const { return *data_; }
  std::size_t n_obs() const { return data_->n; }
  int d_theta() const { return spec_.d_theta; }
  int n_moments() const { return static_cast<int>(spec_.moments.size()); }

  EmpiricalLp build(const Weights& weights, Direction direction,
                    const AssemblyPolicy& policy = {}) const;

  /// Weighted-mean moment values at theta (never relaxed, never split).
  std::vector<double> evaluate_moments(const Weights& weights,
                                       const std::vector<double>& theta) const;

  /// Weighted-mean theta-gradient of moment j (the row of G in the LICQ check).
  std::vector<double> moment_gradient(const Weights& weights, int j) const;

  /// Per-observation values of the objective / moment j at theta.
  double objective_at(std::size_t i, const std::vector<double>& theta) const;
  double moment_at(std::size_t i, int j, const std::vector<double>& theta) const;

  /// Number of LP rows produced under a policy (moments, with equalities
  /// doubled when split).
  int n_rows(bool split_eq) const;

 private:
  struct ResolvedSource {
    int column = -1;  // -1 -> literal
    double literal = 0.0;
  };
  struct ResolvedForm {
    std::vector<ResolvedSource> coeffs;
    ResolvedSource constant;
  };

  ResolvedSource resolve(const ValueSource& vs, const std::string& where) const;
  double source_mean(const ResolvedSource& s, const Weights& w) const;
  double source_at(const ResolvedSource& s, std::size_t i) const;

  ModelSpec spec_;
  const Dataset* data_;
  ResolvedForm objective_;
  std::vector<ResolvedForm> moments_;
};

/// Spec-level conveniences (bind + assemble in one call).
LinearProgram build_empirical_lp(const ModelSpec& spec, const Dataset& data,
                                 const Weights& weights, Direction direction,
                                 double relaxation = 0.0);
std::vector<double> evaluate_moments(const ModelSpec& spec, const Dataset& data,
                                     const Weights& weights, const std::vector<double>& theta);

}  // namespace pibound
