#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "preq/dynamics.hpp"
#include "preq/errors.hpp"
#include "preq/json_io.hpp"
#include "preq/matrix.hpp"
#include "preq/operators.hpp"
#include "preq/sde.hpp"
#include "preq/superop.hpp"

namespace preq {

/// Strict key policy: every present key must be known, every required key
/// present. Typos in config files must fail loudly, not silently default.
inline void require_keys(const Json& j, const std::vector<std::string>& required,
                         const std::vector<std::string>& optional, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + ": expected a JSON object");
  for (const auto& item : j.items()) {
    const std::string& key = item.key();
    bool known = false;
    for (const std::string& k : required)
      if (k == key) known = true;
    for (const std::string& k : optional)
      if (k == key) known = true;
    if (!known) throw ConfigError(what + ": unknown key \"" + key + "\"");
  }
  for (const std::string& k : required)
    if (!j.contains(k)) throw ConfigError(what + ": missing required key \"" + k + "\"");
}

/// A generator plus the kind tag it was built from. For similarity and
/// affine kinds the raw drift matrix is kept so closed-form oracles can use
/// it directly.
struct ParsedGenerator {
  std::string kind;
  std::variant<Superoperator, AffineGenerator> op;
  std::optional<ComplexMatrix> a_raw;

  bool is_affine() const { return std::holds_alternative<AffineGenerator>(op); }
  const Superoperator& linear() const {
    if (is_affine()) return std::get<AffineGenerator>(op).linear();
    return std::get<Superoperator>(op);
  }
  Eigen::Index dim() const {
    return is_affine() ? std::get<AffineGenerator>(op).dim().value()
                       : std::get<Superoperator>(op).dim().value();
  }
};

inline ParsedGenerator parse_generator(const Json& j, Eigen::Index expected_dim) {
  require_keys(j, {"kind"}, {"h", "a", "sigma", "jumps"}, "generator");
  const std::string kind = j.at("kind").get<std::string>();
  auto check_dim = [&](const ComplexMatrix& m, const std::string& what) {
    if (m.rows() != expected_dim || m.cols() != expected_dim)
      throw ConfigError("generator: " + what + " must be " + std::to_string(expected_dim) + "x" +
                        std::to_string(expected_dim));
  };
  if (kind == "commutator") {
    require_keys(j, {"kind", "h"}, {}, "commutator generator");
    const ComplexMatrix h = matrix_from_json(j.at("h"), "generator h");
    check_dim(h, "h");
    return {kind, build_commutator(HermitianOperator(h))};
  }
  if (kind == "gksl") {
    require_keys(j, {"kind", "h", "jumps"}, {}, "gksl generator");
    const ComplexMatrix h = matrix_from_json(j.at("h"), "generator h");
    check_dim(h, "h");
    const Json& jumps = j.at("jumps");
    if (!jumps.is_array() || jumps.empty())
      throw ConfigError("gksl generator: jumps must be a non-empty array");
    std::vector<GKSLJump> ops;
    for (std::size_t i = 0; i < jumps.size(); ++i) {
      require_keys(jumps[i], {"op", "rate"}, {}, "gksl jump " + std::to_string(i));
      GKSLJump jump;
      jump.op = matrix_from_json(jumps[i].at("op"), "jump op");
      check_dim(jump.op, "jump op");
      if (!jumps[i].at("rate").is_number())
        throw ConfigError("gksl jump " + std::to_string(i) + ": rate must be a number");
      jump.rate = jumps[i].at("rate").get<double>();
      ops.push_back(std::move(jump));
    }
    return {kind, build_gksl(GKSLSpec(HermitianOperator(h), std::move(ops)))};
  }
  if (kind == "similarity") {
    require_keys(j, {"kind", "a"}, {}, "similarity generator");
    const ComplexMatrix a = matrix_from_json(j.at("a"), "generator a");
    check_dim(a, "a");
    return {kind, build_similarity(a), a};
  }
  if (kind == "affine") {
    require_keys(j, {"kind", "a", "sigma"}, {}, "affine generator");
    const ComplexMatrix a = matrix_from_json(j.at("a"), "generator a");
    const ComplexMatrix sigma = matrix_from_json(j.at("sigma"), "generator sigma");
    check_dim(a, "a");
    check_dim(sigma, "sigma");
    return {kind, build_affine(build_similarity(a), HermitianOperator(sigma)), a};
  }
  throw ConfigError("generator: unknown kind \"" + kind +
                    "\" (expected commutator | gksl | similarity | affine)");
}

inline TimeGrid parse_grid(const Json& j) {
  require_keys(j, {"t0", "t1", "steps"}, {}, "grid");
  if (!j.at("t0").is_number() || !j.at("t1").is_number() ||
      !j.at("steps").is_number_integer())
    throw ConfigError("grid: t0/t1 must be numbers and steps an integer");
  return TimeGrid(j.at("t0").get<double>(), j.at("t1").get<double>(), j.at("steps").get<int>());
}

inline SDESpec parse_sde(const Json& j, Eigen::Index expected_dim) {
  require_keys(j, {"b0", "sigma"}, {"drift"}, "sde");
  const ComplexMatrix b0 = matrix_from_json(j.at("b0"), "sde b0");
  const ComplexMatrix sigma = matrix_from_json(j.at("sigma"), "sde sigma");
  if (b0.rows() != expected_dim || sigma.rows() != expected_dim)
    throw ConfigError("sde: b0 and sigma must match dim");
  std::vector<DriftSegment> drift;
  if (j.contains("drift")) {
    const Json& segs = j.at("drift");
    if (!segs.is_array()) throw ConfigError("sde: drift must be an array of segments");
    for (std::size_t i = 0; i < segs.size(); ++i) {
      require_keys(segs[i], {"until", "a"}, {}, "drift segment " + std::to_string(i));
      if (!segs[i].at("until").is_number())
        throw ConfigError("drift segment " + std::to_string(i) + ": until must be a number");
      DriftSegment seg;
      seg.until = segs[i].at("until").get<double>();
      seg.a = matrix_from_json(segs[i].at("a"), "drift a");
      if (seg.a.rows() != expected_dim)
        throw ConfigError("drift segment " + std::to_string(i) + ": a must match dim");
      drift.push_back(std::move(seg));
    }
  }
  return SDESpec(PositiveOperator(b0), PositiveOperator(sigma), std::move(drift));
}

/// Parsed scenario for one CLI command. Everything optional stays optional so
/// each command can enforce exactly what it needs.
struct ScenarioConfig {
  std::string command;
  Eigen::Index dim = 0;
  std::optional<ParsedGenerator> generator;
  std::optional<ComplexMatrix> initial;
  std::optional<TimeGrid> grid;
  Eigen::Index samples = 0;
  std::optional<std::uint64_t> seed;
  std::string format = "csv";
  std::string flow = "covariance";
  std::string method = "exact";
  std::vector<std::string> checks;
  double pde_rate = 0.5;
  double pde_b0 = 1.0;
  double pde_t = 1.0;
  std::optional<SDESpec> sde;
  std::vector<double> record_times;
  Json raw;
};

inline ScenarioConfig parse_scenario(const Json& j, const std::string& command) {
  ScenarioConfig cfg;
  cfg.command = command;
  cfg.raw = j;

  if (command == "propagate") {
    require_keys(j, {"dim", "generator", "initial", "grid"}, {"seed", "format", "flow", "method"},
                 "propagate scenario");
  } else if (command == "verify") {
    require_keys(j, {"dim", "checks"},
                 {"N", "seed", "format", "generator", "initial", "grid", "pde1d"},
                 "verify scenario");
  } else if (command == "paths") {
    require_keys(j, {"dim", "sde", "grid", "N"}, {"seed", "format", "record_times"},
                 "paths scenario");
  } else if (command == "coeffs") {
    require_keys(j, {"dim", "generator"}, {"seed"}, "coeffs scenario");
  } else {
    throw ConfigError("unknown command \"" + command + "\"");
  }

  if (!j.at("dim").is_number_integer() || j.at("dim").get<long long>() < 1)
    throw ConfigError("dim must be a positive integer");
  cfg.dim = j.at("dim").get<Eigen::Index>();

  if (j.contains("generator")) cfg.generator = parse_generator(j.at("generator"), cfg.dim);
  if (j.contains("initial")) {
    cfg.initial = matrix_from_json(j.at("initial"), "initial");
    if (cfg.initial->rows() != cfg.dim || cfg.initial->cols() != cfg.dim)
      throw ConfigError("initial must be dim x dim");
  }
  if (j.contains("grid")) cfg.grid = parse_grid(j.at("grid"));
  if (j.contains("N")) {
    if (!j.at("N").is_number_integer() || j.at("N").get<long long>() < 1)
      throw ConfigError("N must be a positive integer");
    cfg.samples = j.at("N").get<Eigen::Index>();
  }
  if (j.contains("seed")) {
    const Json& s = j.at("seed");
    if (!s.is_number_integer() || (!s.is_number_unsigned() && s.get<std::int64_t>() < 0))
      throw ConfigError("seed must be a non-negative integer");
    cfg.seed = s.get<std::uint64_t>();
  }
  if (j.contains("format")) {
    cfg.format = j.at("format").get<std::string>();
    if (cfg.format != "csv" && cfg.format != "json")
      throw ConfigError("format must be \"csv\" or \"json\"");
  }
  if (j.contains("flow")) {
    cfg.flow = j.at("flow").get<std::string>();
    if (cfg.flow != "covariance" && cfg.flow != "density" && cfg.flow != "both")
      throw ConfigError("flow must be \"covariance\", \"density\", or \"both\"");
  }
  if (j.contains("method")) {
    cfg.method = j.at("method").get<std::string>();
    if (cfg.method != "exact" && cfg.method != "rk4")
      throw ConfigError("method must be \"exact\" or \"rk4\"");
  }
  if (j.contains("checks")) {
    const Json& names = j.at("checks");
    if (!names.is_array() || names.empty())
      throw ConfigError("checks must be a non-empty array of names");
    std::set<std::string> seen;
    for (const Json& name : names) {
      if (!name.is_string()) throw ConfigError("checks entries must be strings");
      if (!seen.insert(name.get<std::string>()).second)
        throw ConfigError("duplicate check \"" + name.get<std::string>() + "\"");
      cfg.checks.push_back(name.get<std::string>());
    }
  }
  if (j.contains("pde1d")) {
    const Json& p = j.at("pde1d");
    require_keys(p, {"a", "b0", "t"}, {}, "pde1d");
    cfg.pde_rate = p.at("a").get<double>();
    cfg.pde_b0 = p.at("b0").get<double>();
    cfg.pde_t = p.at("t").get<double>();
  }
  if (j.contains("sde")) cfg.sde = parse_sde(j.at("sde"), cfg.dim);
  if (j.contains("record_times")) {
    const Json& rts = j.at("record_times");
    if (!rts.is_array() || rts.empty())
      throw ConfigError("record_times must be a non-empty array of numbers");
    for (const Json& t : rts) {
      if (!t.is_number()) throw ConfigError("record_times entries must be numbers");
      cfg.record_times.push_back(t.get<double>());
    }
  }

  if (cfg.generator && cfg.initial && cfg.generator->dim() != cfg.initial->rows())
    throw ConfigError("generator and initial operator dims differ");
  return cfg;
}

/// Map recorded times onto grid indices; every time must sit on a grid point.
inline std::vector<Eigen::Index> record_indices(const TimeGrid& grid,
                                                const std::vector<double>& times) {
  std::vector<Eigen::Index> indices;
  if (times.empty()) {
    indices.resize(static_cast<std::size_t>(grid.points()));
    for (Eigen::Index k = 0; k < grid.points(); ++k) indices[static_cast<std::size_t>(k)] = k;
    return indices;
  }
  const double atol = 1e-9 * std::max({1.0, std::abs(grid.t0), std::abs(grid.t1)});
  Eigen::Index prev = -1;
  for (double t : times) {
    const auto k = static_cast<Eigen::Index>(std::llround((t - grid.t0) / grid.dt()));
    if (k < 0 || k >= grid.points() || std::abs(t - grid.time(k)) > atol)
      throw ConfigError("record time " + std::to_string(t) + " does not sit on a grid point");
    if (k <= prev) throw ConfigError("record_times must be strictly increasing");
    indices.push_back(k);
    prev = k;
  }
  return indices;
}

}  // namespace preq
