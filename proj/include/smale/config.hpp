#pragma once

// Run configuration: flat `section.key = value` assignments, one per line,
// `#` starts a comment. Unknown keys are rejected.

#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "smale/errors.hpp"
#include "smale/expression.hpp"
#include "smale/metric.hpp"
#include "smale/problem.hpp"

namespace smale {

struct RunConfig {
  std::string metric_kind = "euclidean";
  int metric_dim = 0;  // 0: follow mesh.dim
  double kappa = 0.0;

  std::string f_text = "0";
  std::string nonlinearity = "linear";
  double cubic_b = 0.0;

  int mesh_dim = 1;
  int mesh_resolution = 200;

  double r_min = 1e-3;
  int scan_points = 200;
  int scan_k = 6;

  int branch_steps = 100;
  double branch_step_size = 1e-3;

  std::string output_dir = "out";

  MetricModel metric() const {
    const int dim = metric_dim > 0 ? metric_dim : mesh_dim;
    if (metric_kind == "euclidean") return MetricModel::euclidean(dim);
    return MetricModel::constant_curvature(dim, kappa);
  }

  ProblemSpec problem() const {
    auto f = Expression::parse(f_text);
    if (nonlinearity == "cubic") return ProblemSpec::cubic(std::move(f), cubic_b);
    return ProblemSpec::linear(std::move(f));
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string unquote(const std::string& s) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
    return s.substr(1, s.size() - 2);
  return s;
}

inline double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    // allow constant expressions such as -(2.3*pi)^2
    try {
      const auto e = Expression::parse(v);
      const double none[1] = {0.0};
      return e(std::span<const double>(none, 0));
    } catch (const ConfigError&) {
      throw ConfigError("config key '" + key + "': expected a real number, got '" + v + "'");
    }
  }
}

inline int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
}

}  // namespace detail

inline RunConfig parse_config(std::istream& in) {
  static const std::set<std::string> known{
      "metric.kind", "metric.dim",  "metric.kappa", "problem.f",     "problem.nonlinearity", "problem.cubic_b",
      "mesh.dim",    "mesh.resolution", "scan.r_min", "scan.points", "scan.k",               "branch.steps",
      "branch.step_size", "output.dir"};
  std::map<std::string, std::string> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected 'section.key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::unquote(detail::trim(line.substr(eq + 1)));
    if (!known.contains(key)) throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    if (values.contains(key)) throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError("config key '" + key + "' has an empty value");
    values[key] = value;
  }

  for (const char* required : {"metric.kind", "problem.f", "mesh.dim", "mesh.resolution"}) {
    if (!values.contains(required)) throw ConfigError(std::string("config key '") + required + "' is required");
  }

  RunConfig c;
  auto get = [&](const char* key) -> const std::string* {
    const auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  };
  c.metric_kind = *get("metric.kind");
  if (c.metric_kind != "euclidean" && c.metric_kind != "constant_curvature")
    throw ConfigError("config key 'metric.kind' must be 'euclidean' or 'constant_curvature'");
  if (auto v = get("metric.dim")) c.metric_dim = detail::to_int("metric.dim", *v);
  if (auto v = get("metric.kappa")) {
    if (c.metric_kind != "constant_curvature") throw ConfigError("config key 'metric.kappa' requires metric.kind = constant_curvature");
    c.kappa = detail::to_real("metric.kappa", *v);
  }
  c.f_text = *get("problem.f");
  if (auto v = get("problem.nonlinearity")) c.nonlinearity = *v;
  if (c.nonlinearity != "linear" && c.nonlinearity != "cubic")
    throw ConfigError("config key 'problem.nonlinearity' must be 'linear' or 'cubic'");
  if (auto v = get("problem.cubic_b")) {
    if (c.nonlinearity != "cubic") throw ConfigError("config key 'problem.cubic_b' requires problem.nonlinearity = cubic");
    c.cubic_b = detail::to_real("problem.cubic_b", *v);
  }
  c.mesh_dim = detail::to_int("mesh.dim", *get("mesh.dim"));
  c.mesh_resolution = detail::to_int("mesh.resolution", *get("mesh.resolution"));
  if (auto v = get("scan.r_min")) c.r_min = detail::to_real("scan.r_min", *v);
  if (auto v = get("scan.points")) c.scan_points = detail::to_int("scan.points", *v);
  if (auto v = get("scan.k")) c.scan_k = detail::to_int("scan.k", *v);
  if (auto v = get("branch.steps")) c.branch_steps = detail::to_int("branch.steps", *v);
  if (auto v = get("branch.step_size")) c.branch_step_size = detail::to_real("branch.step_size", *v);
  if (auto v = get("output.dir")) c.output_dir = *v;

  if (c.mesh_dim != 1 && c.mesh_dim != 2) throw ConfigError("config key 'mesh.dim' must be 1 or 2");
  if (c.mesh_resolution < (c.mesh_dim == 1 ? 2 : 1)) throw ConfigError("config key 'mesh.resolution' is too small");
  if (c.metric_dim != 0 && c.metric_dim != c.mesh_dim) throw ConfigError("config key 'metric.dim' must equal mesh.dim");
  if (c.r_min < 1e-3 || c.r_min >= 1.0) throw ConfigError("config key 'scan.r_min' must lie in [1e-3, 1)");
  if (c.scan_points < 2) throw ConfigError("config key 'scan.points' must be >= 2");
  if (c.scan_k < 1) throw ConfigError("config key 'scan.k' must be >= 1");
  if (c.branch_steps < 1) throw ConfigError("config key 'branch.steps' must be >= 1");
  if (!(c.branch_step_size > 0.0)) throw ConfigError("config key 'branch.step_size' must be positive");
  if (c.metric_kind == "constant_curvature" && c.kappa > 0.0 && std::sqrt(c.kappa) >= std::numbers::pi)
    throw ConfigError("config key 'metric.kappa': sqrt(kappa) must be < pi");
  try {
    (void)Expression::parse(c.f_text);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("config key 'problem.f': ") + e.what());
  }
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  return parse_config(in);
}

}  // namespace smale
