#include "pibound/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "pibound/errors.hpp"

namespace pibound {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ValidationError(field + ": " + why);
}

ValueSource parse_source(const json& j, const std::string& field) {
  if (!j.is_object()) fail(field, "expected an object with \"lit\" or \"col\"");
  const bool has_lit = j.contains("lit");
  const bool has_col = j.contains("col");
  if (has_lit == has_col) fail(field, "exactly one of \"lit\" or \"col\" is required");
  if (has_lit) {
    if (!j["lit"].is_number()) fail(field + ".lit", "expected a number");
    const double v = j["lit"].get<double>();
    if (!std::isfinite(v)) fail(field + ".lit", "must be finite");
    return ValueSource::lit(v);
  }
  if (!j["col"].is_string() || j["col"].get<std::string>().empty())
    fail(field + ".col", "expected a non-empty column name");
  return ValueSource::col(j["col"].get<std::string>());
}

AffineForm parse_form(const json& j, const std::string& field, int d_theta) {
  if (!j.is_object()) fail(field, "expected an object");
  if (!j.contains("coeffs") || !j["coeffs"].is_array()) fail(field + ".coeffs", "expected an array");
  if (!j.contains("const")) fail(field + ".const", "missing");
  AffineForm form;
  const auto& coeffs = j["coeffs"];
  if (static_cast<int>(coeffs.size()) != d_theta)
    fail(field + ".coeffs",
         "length " + std::to_string(coeffs.size()) + " != d_theta " + std::to_string(d_theta));
  form.coeffs.reserve(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i)
    form.coeffs.push_back(parse_source(coeffs[i], field + ".coeffs[" + std::to_string(i) + "]"));
  form.constant = parse_source(j["const"], field + ".const");
  return form;
}

json source_to_json(const ValueSource& s) {
  if (s.kind == ValueSource::Kind::Literal) return json{{"lit", s.literal}};
  return json{{"col", s.column}};
}

json form_to_json(const AffineForm& f) {
  json coeffs = json::array();
  for (const auto& c : f.coeffs) coeffs.push_back(source_to_json(c));
  return json{{"coeffs", coeffs}, {"const", source_to_json(f.constant)}};
}

double parse_cell(const std::string& cell, std::size_t line, std::size_t col) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (*(end - 1) == ' ' || *(end - 1) == '\t' || *(end - 1) == '\r')) --end;
  double v = 0.0;
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end || !std::isfinite(v))
    throw ValidationError("csv row " + std::to_string(line) + ", column " + std::to_string(col + 1) +
                          ": cell '" + cell + "' is not a finite decimal real");
  return v;
}

void split_line(const std::string& line, std::vector<std::string>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

void validate_weights(const Weights& weights, std::size_t n) {
  if (weights.w.size() != n)
    throw ValidationError("Weights: length " + std::to_string(weights.w.size()) +
                          " != dataset n " + std::to_string(n));
  double sum = 0.0;
  for (double v : weights.w) {
    if (!(v >= 0.0)) throw ValidationError("Weights: entries must be nonnegative");
    sum += v;
  }
  if (std::abs(sum - static_cast<double>(n)) > 1e-6 * (1.0 + static_cast<double>(n)))
    throw ValidationError("Weights: sum " + std::to_string(sum) + " != n " + std::to_string(n));
}

}  // namespace

int Dataset::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

void Dataset::add_column(std::string name, std::vector<double> values) {
  if (column_index(name) >= 0) throw ValidationError("Dataset: duplicate column '" + name + "'");
  if (n == 0 && columns.empty()) n = values.size();
  if (values.size() != n)
    throw ValidationError("Dataset: column '" + name + "' has length " +
                          std::to_string(values.size()) + " != n " + std::to_string(n));
  names.push_back(std::move(name));
  columns.push_back(std::move(values));
}

ModelSpec parse_model(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("model spec: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail("model spec", "top level must be an object");
  if (!doc.contains("d_theta") || !doc["d_theta"].is_number_integer())
    fail("d_theta", "expected an integer");
  ModelSpec spec;
  spec.d_theta = doc["d_theta"].get<int>();
  if (spec.d_theta <= 0) fail("d_theta", "must be positive");

  for (const char* key : {"theta_lower", "theta_upper"}) {
    if (!doc.contains(key) || !doc[key].is_array())
      fail(key, "expected an array of length d_theta");
    const auto& arr = doc[key];
    if (static_cast<int>(arr.size()) != spec.d_theta)
      fail(key, "length " + std::to_string(arr.size()) + " != d_theta");
    auto& dst = std::string(key) == "theta_lower" ? spec.theta_lower : spec.theta_upper;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_number()) fail(std::string(key) + "[" + std::to_string(i) + "]", "expected a number");
      const double v = arr[i].get<double>();
      if (!std::isfinite(v))
        fail(std::string(key) + "[" + std::to_string(i) + "]", "must be finite (compact parameter box)");
      dst.push_back(v);
    }
  }
  for (int i = 0; i < spec.d_theta; ++i)
    if (!(spec.theta_lower[i] < spec.theta_upper[i]))
      fail("theta_lower[" + std::to_string(i) + "]", "must be strictly below theta_upper");

  if (!doc.contains("objective")) fail("objective", "missing");
  spec.objective = parse_form(doc["objective"], "objective", spec.d_theta);

  if (!doc.contains("moments") || !doc["moments"].is_array()) fail("moments", "expected an array");
  std::set<std::string> labels;
  for (std::size_t j = 0; j < doc["moments"].size(); ++j) {
    const std::string field = "moments[" + std::to_string(j) + "]";
    const auto& mj = doc["moments"][j];
    if (!mj.is_object()) fail(field, "expected an object");
    MomentSpec m;
    if (!mj.contains("label") || !mj["label"].is_string() || mj["label"].get<std::string>().empty())
      fail(field + ".label", "expected a non-empty string");
    m.label = mj["label"].get<std::string>();
    if (!labels.insert(m.label).second) fail(field + ".label", "duplicate label '" + m.label + "'");
    if (!mj.contains("sense") || !mj["sense"].is_string()) fail(field + ".sense", "expected \"eq\" or \"leq\"");
    const std::string sense = mj["sense"].get<std::string>();
    if (sense == "eq")
      m.sense = MomentSense::Eq;
    else if (sense == "leq")
      m.sense = MomentSense::Leq;
    else
      fail(field + ".sense", "expected \"eq\" or \"leq\", got '" + sense + "'");
    m.form = parse_form(mj, field, spec.d_theta);
    spec.moments.push_back(std::move(m));
  }
  return spec;
}

std::string serialize_model(const ModelSpec& spec) {
  json doc;
  doc["schema_version"] = 1;
  doc["d_theta"] = spec.d_theta;
  doc["theta_lower"] = spec.theta_lower;
  doc["theta_upper"] = spec.theta_upper;
  doc["objective"] = form_to_json(spec.objective);
  json moments = json::array();
  for (const auto& m : spec.moments) {
    json mj = form_to_json(m.form);
    mj["label"] = m.label;
    mj["sense"] = m.sense == MomentSense::Eq ? "eq" : "leq";
    moments.push_back(mj);
  }
  doc["moments"] = moments;
  return doc.dump(2);
}

Dataset read_csv(std::istream& in) {
  Dataset data;
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("csv: missing header row");
  std::vector<std::string> cells;
  split_line(line, cells);
  for (auto& name : cells) {
    while (!name.empty() && (name.back() == '\r' || name.back() == ' ')) name.pop_back();
    if (name.empty()) throw ValidationError("csv: empty column name in header");
    if (data.column_index(name) >= 0) throw ValidationError("csv: duplicate column '" + name + "'");
    data.names.push_back(name);
    data.columns.emplace_back();
  }
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    split_line(line, cells);
    if (cells.size() != data.names.size())
      throw ValidationError("csv row " + std::to_string(row + 2) + ": expected " +
                            std::to_string(data.names.size()) + " cells, got " +
                            std::to_string(cells.size()));
    for (std::size_t c = 0; c < cells.size(); ++c)
      data.columns[c].push_back(parse_cell(cells[c], row + 2, c));
    ++row;
  }
  if (row == 0) throw ValidationError("csv: no data rows");
  data.n = row;
  return data;
}

Dataset read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset file '" + path + "'");
  return read_csv(in);
}

void write_csv(const Dataset& data, std::ostream& out) {
  out.precision(17);
  for (std::size_t c = 0; c < data.names.size(); ++c)
    out << (c ? "," : "") << data.names[c];
  out << '\n';
  for (std::size_t i = 0; i < data.n; ++i) {
    for (std::size_t c = 0; c < data.columns.size(); ++c)
      out << (c ? "," : "") << data.columns[c][i];
    out << '\n';
  }
}

void write_csv_file(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open output file '" + path + "'");
  write_csv(data, out);
}

BoundModel::BoundModel(ModelSpec spec, const Dataset& data) : spec_(std::move(spec)), data_(&data) {
  if (spec_.d_theta <= 0) throw ValidationError("ModelSpec.d_theta must be positive");
  if (static_cast<int>(spec_.theta_lower.size()) != spec_.d_theta ||
      static_cast<int>(spec_.theta_upper.size()) != spec_.d_theta)
    throw ValidationError("ModelSpec.theta_lower/theta_upper must have length d_theta");
  if (static_cast<int>(spec_.objective.coeffs.size()) != spec_.d_theta)
    throw ValidationError("objective.coeffs: length must equal d_theta");
  if (data.n == 0) throw ValidationError("Dataset: n must be positive");
  for (const auto& col : data.columns)
    if (col.size() != data.n) throw ValidationError("Dataset: ragged columns");

  auto resolve_form = [this](const AffineForm& f, const std::string& where) {
    ResolvedForm rf;
    rf.coeffs.reserve(f.coeffs.size());
    for (std::size_t i = 0; i < f.coeffs.size(); ++i)
      rf.coeffs.push_back(resolve(f.coeffs[i], where + ".coeffs[" + std::to_string(i) + "]"));
    rf.constant = resolve(f.constant, where + ".const");
    return rf;
  };
  objective_ = resolve_form(spec_.objective, "objective");
  moments_.reserve(spec_.moments.size());
  for (std::size_t j = 0; j < spec_.moments.size(); ++j) {
    if (static_cast<int>(spec_.moments[j].form.coeffs.size()) != spec_.d_theta)
      throw ValidationError("moments[" + std::to_string(j) + "].coeffs: length must equal d_theta");
    moments_.push_back(resolve_form(spec_.moments[j].form, "moments[" + std::to_string(j) + "]"));
  }
}

BoundModel::ResolvedSource BoundModel::resolve(const ValueSource& vs, const std::string& where) const {
  ResolvedSource r;
  if (vs.kind == ValueSource::Kind::Literal) {
    r.literal = vs.literal;
    return r;
  }
  r.column = data_->column_index(vs.column);
  if (r.column < 0) fail(where + ".col", "unknown column '" + vs.column + "'");
  return r;
}

double BoundModel::source_mean(const ResolvedSource& s, const Weights& w) const {
  if (s.column < 0) return s.literal;
  const auto& col = data_->columns[s.column];
  double acc = 0.0;
  for (std::size_t i = 0; i < col.size(); ++i) acc += w.w[i] * col[i];
  return acc / static_cast<double>(data_->n);
}

double BoundModel::source_at(const ResolvedSource& s, std::size_t i) const {
  return s.column < 0 ? s.literal : data_->columns[s.column][i];
}

int BoundModel::n_rows(bool split_eq) const {
  int rows = 0;
  for (const auto& m : spec_.moments)
    rows += (split_eq && m.sense == MomentSense::Eq) ? 2 : 1;
  return rows;
}

EmpiricalLp BoundModel::build(const Weights& weights, Direction direction,
                              const AssemblyPolicy& policy) const {
  validate_weights(weights, data_->n);
  if (policy.relaxation < 0.0) throw ValidationError("relaxation must be nonnegative");
  const bool split = policy.relaxation > 0.0 || policy.force_split;
  if (policy.row_shifts && static_cast<int>(policy.row_shifts->size()) != n_rows(split))
    throw ValidationError("row_shifts: length must equal the number of assembled rows");

  EmpiricalLp out;
  LinearProgram& lp = out.lp;
  lp.n_vars = spec_.d_theta;
  lp.var_lower = spec_.theta_lower;
  lp.var_upper = spec_.theta_upper;
  lp.sense = direction == Direction::Lower ? Sense::Minimize : Sense::Maximize;
  lp.objective.resize(spec_.d_theta);
  for (int i = 0; i < spec_.d_theta; ++i) lp.objective[i] = source_mean(objective_.coeffs[i], weights);
  lp.objective_constant = source_mean(objective_.constant, weights);

  int row = 0;
  auto shift = [&](int r) { return policy.row_shifts ? (*policy.row_shifts)[r] : 0.0; };
  for (std::size_t j = 0; j < moments_.size(); ++j) {
    std::vector<double> g(spec_.d_theta);
    for (int i = 0; i < spec_.d_theta; ++i) g[i] = source_mean(moments_[j].coeffs[i], weights);
    const double k = source_mean(moments_[j].constant, weights);
    const bool eq = spec_.moments[j].sense == MomentSense::Eq;
    if (eq && !split) {
      lp.constraints.push_back({g, -k, Relation::Eq});
      out.rows.push_back({static_cast<int>(j), 1.0});
      ++row;
    } else if (eq) {
      lp.constraints.push_back({g, -k + policy.relaxation + shift(row), Relation::Leq});
      out.rows.push_back({static_cast<int>(j), 1.0});
      ++row;
      std::vector<double> gneg(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) gneg[i] = -g[i];
      lp.constraints.push_back({std::move(gneg), k + policy.relaxation + shift(row), Relation::Leq});
      out.rows.push_back({static_cast<int>(j), -1.0});
      ++row;
    } else {
      lp.constraints.push_back({std::move(g), -k + policy.relaxation + shift(row), Relation::Leq});
      out.rows.push_back({static_cast<int>(j), 1.0});
      ++row;
    }
  }
  return out;
}

std::vector<double> BoundModel::evaluate_moments(const Weights& weights,
                                                 const std::vector<double>& theta) const {
  validate_weights(weights, data_->n);
  if (static_cast<int>(theta.size()) != spec_.d_theta)
    throw ValidationError("theta: length " + std::to_string(theta.size()) + " != d_theta " +
                          std::to_string(spec_.d_theta));
  std::vector<double> values(moments_.size());
  for (std::size_t j = 0; j < moments_.size(); ++j) {
    double v = source_mean(moments_[j].constant, weights);
    for (int i = 0; i < spec_.d_theta; ++i)
      v += source_mean(moments_[j].coeffs[i], weights) * theta[i];
    values[j] = v;
  }
  return values;
}

std::vector<double> BoundModel::moment_gradient(const Weights& weights, int j) const {
  std::vector<double> g(spec_.d_theta);
  for (int i = 0; i < spec_.d_theta; ++i) g[i] = source_mean(moments_[j].coeffs[i], weights);
  return g;
}

double BoundModel::objective_at(std::size_t i, const std::vector<double>& theta) const {
  double v = source_at(objective_.constant, i);
  for (int d = 0; d < spec_.d_theta; ++d) v += source_at(objective_.coeffs[d], i) * theta[d];
  return v;
}

double BoundModel::moment_at(std::size_t i, int j, const std::vector<double>& theta) const {
  double v = source_at(moments_[j].constant, i);
  for (int d = 0; d < spec_.d_theta; ++d) v += source_at(moments_[j].coeffs[d], i) * theta[d];
  return v;
}

LinearProgram build_empirical_lp(const ModelSpec& spec, const Dataset& data, const Weights& weights,
                                 Direction direction, double relaxation) {
  BoundModel bound(spec, data);
  AssemblyPolicy policy;
  policy.relaxation = relaxation;
  return bound.build(weights, direction, policy).lp;
}

std::vector<double> evaluate_moments(const ModelSpec& spec, const Dataset& data,
                                     const Weights& weights, const std::vector<double>& theta) {
  return BoundModel(spec, data).evaluate_moments(weights, theta);
}

}  // namespace pibound
