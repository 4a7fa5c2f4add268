#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <preq/preq.hpp>

namespace {

using preq::CheckResult;
using preq::ComplexMatrix;
using preq::Json;
using preq::RunReport;
using preq::ScenarioConfig;
using preq::TimeGrid;

constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitConfigError = 2;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string format;
  int workers = 1;
};

std::uint64_t resolve_seed(const Options& opts, const ScenarioConfig& cfg) {
  if (opts.seed) return *opts.seed;
  if (cfg.seed) return *cfg.seed;
  if (const char* env = std::getenv("PREQ_DEFAULT_SEED")) {
    const std::string text(env);
    std::size_t used = 0;
    try {
      const unsigned long long v = std::stoull(text, &used);
      if (used == text.size()) return static_cast<std::uint64_t>(v);
    } catch (const std::exception&) {
    }
    throw preq::ConfigError("PREQ_DEFAULT_SEED is not a valid unsigned integer: " + text);
  }
  return 0;
}

std::string resolve_format(const Options& opts, const ScenarioConfig& cfg) {
  return opts.format.empty() ? cfg.format : opts.format;
}

std::string out_path(const Options& opts, const std::string& name) {
  return (std::filesystem::path(opts.out_dir) / name).string();
}

void write_json_file(const Options& opts, const std::string& name, const Json& j) {
  preq::write_text_file(out_path(opts, name), j.dump(2) + "\n");
}

Json trajectory_extrema(const preq::OperatorTrajectory& traj) {
  double trace_min = std::numeric_limits<double>::infinity();
  double trace_max = -trace_min;
  double eig_min = trace_min;
  for (Eigen::Index k = 0; k < traj.grid().points(); ++k) {
    const double tr = traj.at(k).trace().real();
    trace_min = std::min(trace_min, tr);
    trace_max = std::max(trace_max, tr);
    eig_min = std::min(eig_min, preq::min_eigenvalue(traj.at(k)));
  }
  return Json{{"trace_min", trace_min}, {"trace_max", trace_max}, {"min_eigenvalue", eig_min}};
}

void collect_warnings(const preq::OperatorTrajectory& traj, const std::string& label,
                      RunReport& report) {
  for (const preq::PositivityWarning& w : traj.warnings())
    report.warnings.push_back(label + ": eigenvalue " + preq::format_float(w.min_eigenvalue) +
                              " below tolerance at t = " + preq::format_float(w.t));
}

void write_trajectory(const Options& opts, const std::string& format, const std::string& stem,
                      const preq::OperatorTrajectory& traj) {
  if (format == "csv")
    preq::write_text_file(out_path(opts, stem + ".csv"), preq::trajectory_csv(traj));
  else
    write_json_file(opts, stem + ".json", preq::trajectory_json(traj));
}

int run_propagate(const ScenarioConfig& cfg, const Options& opts, RunReport& report) {
  const std::uint64_t seed = resolve_seed(opts, cfg);
  const std::string format = resolve_format(opts, cfg);
  const TimeGrid& grid = *cfg.grid;
  const auto method =
      cfg.method == "rk4" ? preq::PropagationMethod::rk4 : preq::PropagationMethod::exact;
  Json details;

  if (cfg.flow == "covariance" || cfg.flow == "both") {
    const preq::PositiveOperator b0(*cfg.initial);
    const preq::OperatorTrajectory traj =
        cfg.generator->is_affine()
            ? preq::propagate_covariance(std::get<preq::AffineGenerator>(cfg.generator->op), b0,
                                         grid, method)
            : preq::propagate_covariance(std::get<preq::Superoperator>(cfg.generator->op), b0,
                                         grid, method);
    write_trajectory(opts, format, "trajectory_covariance", traj);
    details["covariance"] = trajectory_extrema(traj);
    collect_warnings(traj, "covariance", report);
  }
  if (cfg.flow == "density" || cfg.flow == "both") {
    if (cfg.generator->is_affine())
      throw preq::ConfigError("density flow needs a linear generator, not an affine one");
    const preq::DensityOperator rho0(*cfg.initial);
    const preq::OperatorTrajectory traj = preq::propagate_density_nonlinear(
        std::get<preq::Superoperator>(cfg.generator->op), rho0, grid);
    write_trajectory(opts, format, "trajectory_density", traj);
    details["density"] = trajectory_extrema(traj);
    collect_warnings(traj, "density", report);
  }

  report.details = std::move(details);
  (void)seed;
  return kExitPass;
}

const std::vector<std::string> kVerifyChecks = {
    "bridge",  "dispersion", "scaling",
    "covariance", "moment",  "pde1d",
    "nonlinear-vs-normalized", "reduction"};

void verify_one(const std::string& name, const ScenarioConfig& cfg, std::uint64_t seed,
                int workers, RunReport& report) {
  const Eigen::Index n = cfg.dim;
  auto need_samples = [&]() {
    if (cfg.samples < 1)
      throw preq::ConfigError("check \"" + name + "\" needs a sample count N in the scenario");
    return cfg.samples;
  };

  if (name == "bridge") {
    report.checks.push_back(preq::check_bridge(n, need_samples(), seed, workers));
  } else if (name == "dispersion") {
    report.checks.push_back(preq::check_dispersion(n, need_samples(), seed, workers));
  } else if (name == "scaling") {
    report.checks.push_back(preq::check_scaling(n, need_samples(), seed, workers));
  } else if (name == "covariance") {
    report.checks.push_back(preq::check_covariance_recovery(n, need_samples(), seed, workers));
  } else if (name == "moment") {
    const preq::HermitianOperator b(preq::random_psd(n, seed).matrix());
    if (cfg.generator) {
      if (cfg.generator->is_affine())
        report.checks.push_back(
            preq::check_moment(std::get<preq::AffineGenerator>(cfg.generator->op), b, seed));
      else
        report.checks.push_back(preq::check_moment(
            std::get<preq::Superoperator>(cfg.generator->op), cfg.generator->kind, b, seed));
    } else {
      CheckResult c = preq::check_moment(preq::build_commutator(preq::random_hermitian(n, seed)),
                                         "commutator", b, seed);
      c.check = "moment@commutator";
      report.checks.push_back(std::move(c));
      c = preq::check_moment(preq::build_gksl(preq::random_gksl(n, 2, seed)), "gksl", b, seed);
      c.check = "moment@gksl";
      report.checks.push_back(std::move(c));
      c = preq::check_moment(preq::build_similarity(preq::random_matrix(n, seed)), "similarity",
                             b, seed);
      c.check = "moment@similarity";
      report.checks.push_back(std::move(c));
      c = preq::check_moment(
          preq::build_affine(preq::build_similarity(preq::random_matrix(n, seed)),
                             preq::HermitianOperator(preq::random_psd(n, seed + 1).matrix())),
          b, seed);
      c.check = "moment@affine";
      report.checks.push_back(std::move(c));
    }
  } else if (name == "pde1d") {
    report.checks.push_back(preq::check_pde1d(cfg.pde_rate, cfg.pde_b0, cfg.pde_t, seed));
  } else if (name == "nonlinear-vs-normalized") {
    ComplexMatrix a;
    preq::PositiveOperator b0 = cfg.initial ? preq::PositiveOperator(*cfg.initial)
                                            : preq::random_psd(n, seed);
    if (cfg.generator) {
      if (cfg.generator->kind != "similarity" || !cfg.generator->a_raw)
        throw preq::ConfigError("nonlinear-vs-normalized needs a similarity generator");
      a = *cfg.generator->a_raw;
    } else {
      a = preq::random_matrix(n, seed);
    }
    const TimeGrid grid = cfg.grid ? *cfg.grid : TimeGrid(0.0, 5.0, 5000);
    report.checks.push_back(preq::check_nonlinear_vs_normalized(a, b0, grid, seed));
  } else if (name == "reduction") {
    preq::Superoperator l = cfg.generator && !cfg.generator->is_affine()
                                ? std::get<preq::Superoperator>(cfg.generator->op)
                                : preq::build_gksl(preq::random_gksl(n, 2, seed));
    const std::string kind =
        cfg.generator && !cfg.generator->is_affine() ? cfg.generator->kind : "gksl";
    const preq::DensityOperator rho0 = cfg.initial
                                           ? preq::DensityOperator(*cfg.initial)
                                           : preq::random_density(n, seed);
    const TimeGrid grid = cfg.grid ? *cfg.grid : TimeGrid(0.0, 2.0, 2000);
    report.checks.push_back(preq::check_trace_preservation(l, kind, seed));
    report.checks.push_back(preq::check_reduction(l, kind, rho0, grid, seed));
  } else {
    std::string names;
    for (const std::string& k : kVerifyChecks) names += (names.empty() ? "" : ", ") + k;
    throw preq::ConfigError("unknown check \"" + name + "\" (available: " + names + ")");
  }
}

int run_verify(const ScenarioConfig& cfg, const Options& opts, RunReport& report) {
  const std::uint64_t seed = resolve_seed(opts, cfg);
  for (const std::string& name : cfg.checks) verify_one(name, cfg, seed, opts.workers, report);
  return report.pass() ? kExitPass : kExitCheckFailure;
}

int run_paths(const ScenarioConfig& cfg, const Options& opts, RunReport& report) {
  const std::uint64_t seed = resolve_seed(opts, cfg);
  const std::string format = resolve_format(opts, cfg);
  const TimeGrid& grid = *cfg.grid;
  const std::vector<Eigen::Index> indices = preq::record_indices(grid, cfg.record_times);
  const preq::PathComparison cmp =
      preq::compare_paths_to_ode(*cfg.sde, grid, cfg.samples, seed, indices, opts.workers);

  if (format == "csv") {
    preq::write_text_file(out_path(opts, "paths_summary.csv"),
                          preq::covariance_table_csv(cmp.times, cmp.empirical));
  } else {
    Json out;
    Json t = Json::array(), covs = Json::array(), traces = Json::array();
    for (std::size_t k = 0; k < cmp.times.size(); ++k) {
      t.push_back(cmp.times[k]);
      covs.push_back(preq::matrix_to_json(cmp.empirical[k]));
      traces.push_back(cmp.empirical[k].trace().real());
    }
    out["t"] = std::move(t);
    out["covariances"] = std::move(covs);
    out["trace"] = std::move(traces);
    write_json_file(opts, "paths_summary.json", out);
  }

  report.checks = cmp.checks;
  Json drift_diag = Json::array();
  for (std::size_t k = 0; k < cmp.times.size(); ++k)
    drift_diag.push_back(
        Json{{"t", cmp.times[k]}, {"effective_trace_drift", cmp.effective_trace_drift[k]}});
  report.details = Json{{"effective_trace_drift", std::move(drift_diag)}};
  return report.pass() ? kExitPass : kExitCheckFailure;
}

int run_coeffs(const ScenarioConfig& cfg, const Options& opts, RunReport& report) {
  const preq::CoefficientTensor tensor = preq::coefficient_tensor(cfg.generator->linear());
  write_json_file(opts, "coefficients.json", preq::coefficient_tensor_json(tensor));
  report.details = Json{{"generator_kind", cfg.generator->kind}, {"n", cfg.generator->dim()}};
  return kExitPass;
}

int run_command(const std::string& command, const Options& opts) {
  Json config;
  try {
    config = Json::parse(preq::read_text_file(opts.config_path));
  } catch (const Json::parse_error& e) {
    throw preq::ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  const ScenarioConfig cfg = preq::parse_scenario(config, command);
  if (!opts.format.empty() && opts.format != "csv" && opts.format != "json")
    throw preq::ConfigError("--format must be csv or json");
  if (opts.workers < 1) throw preq::ConfigError("--workers must be >= 1");
  std::filesystem::create_directories(opts.out_dir);

  RunReport report;
  report.command = command;
  report.digest = preq::config_digest(config);

  int code = kExitPass;
  if (command == "propagate") code = run_propagate(cfg, opts, report);
  else if (command == "verify") code = run_verify(cfg, opts, report);
  else if (command == "paths") code = run_paths(cfg, opts, report);
  else code = run_coeffs(cfg, opts, report);

  write_json_file(opts, "report.json", report.to_json());
  for (const CheckResult& c : report.checks)
    std::cout << (c.pass ? "pass " : "FAIL ") << c.check << " value=" << preq::format_float(c.value)
              << " reference=" << preq::format_float(c.reference)
              << " tolerance=" << preq::format_float(c.tolerance) << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariance and density flows with a classical Gaussian-field correspondence"};
  app.require_subcommand(1);

  Options opts;
  std::string command;
  const std::map<std::string, std::string> blurbs = {
      {"propagate", "integrate covariance and/or normalized density flows"},
      {"verify", "run statistical and closed-form consistency checks"},
      {"paths", "sample field trajectories and compare with the covariance ODE"},
      {"coeffs", "emit the generator's coefficient tensor"}};
  for (const char* name : {"propagate", "verify", "paths", "coeffs"}) {
    CLI::App* sub = app.add_subcommand(name, blurbs.at(name));
    sub->add_option("--config", opts.config_path, "scenario JSON path")->required();
    sub->add_option("--seed", opts.seed, "seed override (wins over config and environment)");
    sub->add_option("--out", opts.out_dir, "output directory (default: current)");
    sub->add_option("--format", opts.format, "csv or json (overrides config)");
    sub->add_option("--workers", opts.workers, "worker threads; never affects results");
    sub->callback([&command, name]() { command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfigError;
  }

  const auto start = std::chrono::steady_clock::now();
  int code = kExitPass;
  try {
    code = run_command(command, opts);
  } catch (const preq::StepSizeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailure;
  } catch (const preq::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  const auto elapsed =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  std::cerr << command << " finished in " << elapsed.count() << " ms\n";
  return code;
}
