#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>

#include "mcflab/flow.hpp"
#include "mcflab/io.hpp"

namespace mcflab {

// Run-wide numerical knobs, read from a `key = value` text file.  Fixed
// config + fixed inputs must reproduce byte-identical JSON outputs, so
// nothing here may depend on wall clock, environment, or address layout.
struct RunConfig {
  int quad_order = 3;
  int starts = 32;
  int max_iters = 200;
  double rel_tol = 1e-13;
  FlowScheme scheme = FlowScheme::explicit_euler;
  double dt = 1e-3;
  double window_a = 0.25;
  double window_b = kInf;  // "inf" in files
  std::vector<double> eps_ladder = {0.2, 0.1, 0.05};
  std::vector<double> r_ladder = {0.4, 0.2, 0.1};
  std::uint64_t seed = 0;
  // fixture shaping for the multiplicity pipeline
  double sheet_gap = 0.05;
  // concentration trigger, in multiples of the homogeneous background ball
  // mass (ratio 1 = a featureless stack); the module-level detector keeps
  // its absolute eps0^2 semantics
  double concentration_threshold = 3.0;

  void validate() const {
    if (quad_order < 1 || quad_order > 6)
      throw invariant_error(cat("quad_order must be in [1,6], got ", quad_order));
    if (starts < 1) throw invariant_error(cat("starts must be >= 1, got ", starts));
    if (max_iters < 1) throw invariant_error(cat("max_iters must be >= 1, got ", max_iters));
    if (!(rel_tol > 0.0)) throw invariant_error(cat("rel_tol must be > 0, got ", rel_tol));
    if (!(dt > 0.0)) throw invariant_error(cat("dt must be > 0, got ", dt));
    if (!(window_a > 0.0) || !(window_b > window_a))
      throw invariant_error(cat("window needs 0 < a < b, got [", window_a, ", ", window_b, "]"));
    if (eps_ladder.empty()) throw invariant_error("eps_ladder must not be empty");
    for (double e : eps_ladder)
      if (!(e > 0.0)) throw invariant_error(cat("eps_ladder entries must be > 0, got ", e));
    if (r_ladder.empty()) throw invariant_error("r_ladder must not be empty");
    for (double r : r_ladder)
      if (!(r > 0.0)) throw invariant_error(cat("r_ladder entries must be > 0, got ", r));
    if (!(sheet_gap > 0.0)) throw invariant_error(cat("sheet_gap must be > 0, got ", sheet_gap));
    if (!(concentration_threshold > 0.0))
      throw invariant_error(cat("concentration_threshold must be > 0, got ",
                                concentration_threshold));
  }

  OptimizerOptions optimizer() const {
    OptimizerOptions opt;
    opt.starts = starts;
    opt.max_iters = max_iters;
    opt.quad_order = quad_order;
    opt.rel_tol = rel_tol;
    return opt;
  }

  json to_json() const {
    json j;
    j["quad_order"] = quad_order;
    j["starts"] = starts;
    j["max_iters"] = max_iters;
    j["rel_tol"] = rel_tol;
    j["scheme"] = scheme == FlowScheme::explicit_euler ? "explicit" : "semi_implicit";
    j["dt"] = dt;
    j["window_a"] = window_a;
    j["window_b"] = std::isfinite(window_b) ? json(window_b) : json("inf");
    j["eps_ladder"] = eps_ladder;
    j["r_ladder"] = r_ladder;
    j["seed"] = seed;
    j["sheet_gap"] = sheet_gap;
    j["concentration_threshold"] = concentration_threshold;
    return j;
  }
};

namespace detail {

inline std::string config_trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  size_t e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

inline double parse_config_double(const std::string& v, const std::string& where) {
  if (v == "inf") return kInf;
  try {
    size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw parse_error(cat(where, ": expected a number, got '", v, "'"));
  }
}

inline long long parse_config_int(const std::string& v, const std::string& where) {
  try {
    size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw parse_error(cat(where, ": expected an integer, got '", v, "'"));
  }
}

inline std::vector<double> parse_config_list(const std::string& v, const std::string& where) {
  std::vector<double> out;
  std::string item;
  std::istringstream ss(v);
  while (std::getline(ss, item, ',')) {
    item = config_trim(item);
    if (item.empty()) throw parse_error(cat(where, ": empty list entry"));
    out.push_back(parse_config_double(item, where));
  }
  if (out.empty()) throw parse_error(cat(where, ": expected a comma-separated list"));
  return out;
}

}  // namespace detail

inline RunConfig parse_config(std::istream& in, const std::string& name = "<config>") {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::config_trim(line);
    if (line.empty()) continue;
    const std::string where = cat(name, ":", lineno);
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw parse_error(cat(where, ": expected 'key = value', got '", line, "'"));
    const std::string key = detail::config_trim(line.substr(0, eq));
    const std::string val = detail::config_trim(line.substr(eq + 1));
    if (key.empty()) throw parse_error(cat(where, ": missing key"));
    if (val.empty()) throw parse_error(cat(where, ": missing value for '", key, "'"));

    if (key == "quad_order") cfg.quad_order = (int)detail::parse_config_int(val, where);
    else if (key == "starts") cfg.starts = (int)detail::parse_config_int(val, where);
    else if (key == "max_iters") cfg.max_iters = (int)detail::parse_config_int(val, where);
    else if (key == "rel_tol") cfg.rel_tol = detail::parse_config_double(val, where);
    else if (key == "scheme") {
      if (val == "explicit") cfg.scheme = FlowScheme::explicit_euler;
      else if (val == "semi_implicit") cfg.scheme = FlowScheme::semi_implicit;
      else throw parse_error(cat(where, ": scheme must be 'explicit' or 'semi_implicit', got '",
                                 val, "'"));
    } else if (key == "dt") cfg.dt = detail::parse_config_double(val, where);
    else if (key == "window_a") cfg.window_a = detail::parse_config_double(val, where);
    else if (key == "window_b") cfg.window_b = detail::parse_config_double(val, where);
    else if (key == "eps_ladder") cfg.eps_ladder = detail::parse_config_list(val, where);
    else if (key == "r_ladder") cfg.r_ladder = detail::parse_config_list(val, where);
    else if (key == "seed") cfg.seed = (std::uint64_t)detail::parse_config_int(val, where);
    else if (key == "sheet_gap") cfg.sheet_gap = detail::parse_config_double(val, where);
    else if (key == "concentration_threshold")
      cfg.concentration_threshold = detail::parse_config_double(val, where);
    else throw parse_error(cat(where, ": unknown configuration key '", key, "'"));
  }
  cfg.validate();
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error(cat("cannot open config file ", path));
  return parse_config(in, path);
}

}  // namespace mcflab
