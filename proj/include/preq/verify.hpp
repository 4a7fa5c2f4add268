#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "preq/dynamics.hpp"
#include "preq/ensemble.hpp"
#include "preq/errors.hpp"
#include "preq/instances.hpp"
#include "preq/json_io.hpp"
#include "preq/matrix.hpp"
#include "preq/moments.hpp"
#include "preq/operators.hpp"
#include "preq/sde.hpp"
#include "preq/superop.hpp"

namespace preq {

// Pinned acceptance tolerances.
inline constexpr double kMomentResidualTol = 1e-10;
inline constexpr double kPdeResidualTol = 1e-12;
inline constexpr double kNonlinearMatchTol = 1e-6;
inline constexpr double kReductionMatchTol = 1e-8;
inline constexpr double kTracePreservingTol = 1e-12;
inline constexpr double kStatSigmas = 4.0;
inline constexpr double kCovarianceBandFactor = 5.0;
inline constexpr double kItoStepFactor = 10.0;

/// One verification outcome, serialized per the report contract.
struct CheckResult {
  std::string check;
  std::string generator_kind = "none";
  Eigen::Index n = 0;
  Eigen::Index samples = 0;
  std::uint64_t seed = 0;
  double value = 0.0;
  double reference = 0.0;
  double std_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

inline Json check_result_json(const CheckResult& r) {
  return Json{{"check", r.check},   {"generator_kind", r.generator_kind},
              {"n", r.n},           {"N", r.samples},
              {"seed", r.seed},     {"value", r.value},
              {"reference", r.reference}, {"std_error", r.std_error},
              {"tolerance", r.tolerance}, {"pass", r.pass}};
}

/// |MC classical average - Tr(B A)| <= 4 standard errors, on a seeded random
/// (B, A) pair.
inline CheckResult check_bridge(Eigen::Index n, Eigen::Index count, std::uint64_t seed,
                                int workers = 1) {
  const PositiveOperator b = random_psd(n, seed);
  const HermitianOperator a = random_hermitian(n, seed);
  const GaussianEnsemble ens = sample_gaussian(b, count, seed, workers);
  const EstimateWithError est = classical_average(ens, QuadraticObservable(a), workers);
  CheckResult r{"bridge",      "none",
                n,             count,
                seed,          est.value,
                (b.matrix() * a.matrix()).trace().real(),
                est.std_error, kStatSigmas * est.std_error,
                false};
  r.pass = std::abs(r.value - r.reference) <= r.tolerance;
  return r;
}

/// Dispersion estimate against Tr B.
inline CheckResult check_dispersion(Eigen::Index n, Eigen::Index count, std::uint64_t seed,
                                    int workers = 1) {
  const PositiveOperator b = random_psd(n, seed);
  const GaussianEnsemble ens = sample_gaussian(b, count, seed, workers);
  const EstimateWithError est = dispersion(ens, workers);
  CheckResult r{"dispersion", "none", n,         count,
                seed,         est.value,         b.matrix().trace().real(),
                est.std_error, kStatSigmas * est.std_error, false};
  r.pass = std::abs(r.value - r.reference) <= r.tolerance;
  return r;
}

/// Scaled classical mean against Tr(rho A) with rho = B / Tr B.
inline CheckResult check_scaling(Eigen::Index n, Eigen::Index count, std::uint64_t seed,
                                 int workers = 1) {
  const PositiveOperator b = random_psd(n, seed);
  const HermitianOperator a = random_hermitian(n, seed);
  const GaussianEnsemble ens = sample_gaussian(b, count, seed, workers);
  const ScalingBridge bridge = scaling_bridge(ens, QuadraticObservable(a), workers);
  CheckResult r{"scaling",
                "none",
                n,
                count,
                seed,
                bridge.ratio.value,
                bridge.quantum_reference,
                bridge.ratio.std_error,
                kStatSigmas * bridge.ratio.std_error,
                false};
  r.pass = std::abs(r.value - r.reference) <= r.tolerance;
  return r;
}

/// Entrywise recovery of B from samples within 5 ||B||_max / sqrt(N).
inline CheckResult check_covariance_recovery(Eigen::Index n, Eigen::Index count,
                                             std::uint64_t seed, int workers = 1) {
  const PositiveOperator b = random_psd(n, seed);
  const GaussianEnsemble ens = sample_gaussian(b, count, seed, workers);
  const HermitianOperator emp = empirical_covariance(ens, workers);
  const double err = max_norm(ComplexMatrix(emp.matrix() - b.matrix()));
  const double bound =
      kCovarianceBandFactor * max_norm(b.matrix()) / std::sqrt(static_cast<double>(count));
  return {"covariance", "none", n, count, seed, err, 0.0, 0.0, bound, err <= bound};
}

inline CheckResult check_moment(const Superoperator& l, const std::string& kind,
                                const HermitianOperator& b, std::uint64_t seed) {
  const double residual = moment_evolution_residual(l, b);
  return {"moment", kind,     l.dim().value(),    0, seed, residual, 0.0, 0.0,
          kMomentResidualTol, residual <= kMomentResidualTol};
}

inline CheckResult check_moment(const AffineGenerator& gen, const HermitianOperator& b,
                                std::uint64_t seed) {
  const double residual = moment_evolution_residual(gen, b);
  return {"moment", "affine", gen.dim().value(),  0, seed, residual, 0.0, 0.0,
          kMomentResidualTol, residual <= kMomentResidualTol};
}

/// 1-D field-density identity on x in [-5, 5], step 0.1.
inline CheckResult check_pde1d(double rate, double b0, double t, std::uint64_t seed) {
  std::vector<double> xs;
  for (int i = -50; i <= 50; ++i) xs.push_back(0.1 * i);
  const double residual = density_pde_residual_1d(rate, b0, t, xs);
  return {"pde1d", "none", 1,        0, seed, residual, 0.0, 0.0,
          kPdeResidualTol, residual <= kPdeResidualTol};
}

/// Nonlinear density flow against the trace-normalized similarity closed form,
/// sup over the grid.
inline CheckResult check_nonlinear_vs_normalized(const ComplexMatrix& a,
                                                 const PositiveOperator& b0, const TimeGrid& grid,
                                                 std::uint64_t seed) {
  require_square_finite(a, "check_nonlinear_vs_normalized");
  const Eigen::Index n = b0.dim();
  const Superoperator l = build_similarity(a);
  const DensityOperator rho0 = normalize_trace(b0).density;
  const OperatorTrajectory flow = propagate_density_nonlinear(l, rho0, grid);
  const ComplexMatrix step = ComplexMatrix(grid.dt() * a).exp();
  ComplexMatrix propagator = ComplexMatrix::Identity(n, n);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < grid.points(); ++k) {
    if (k > 0) propagator = ComplexMatrix(propagator * step);
    ComplexMatrix closed = propagator * b0.matrix() * propagator.adjoint();
    closed = 0.5 * (closed + closed.adjoint());
    const Complex tr = closed.trace();
    if (std::abs(tr) < kTraceFloor) throw DegenerateTrace("check_nonlinear_vs_normalized");
    closed /= tr;
    worst = std::max(worst, max_norm(ComplexMatrix(flow.at(k) - closed)));
  }
  return {"nonlinear-vs-normalized", "similarity", n,     0, seed, worst, 0.0, 0.0,
          kNonlinearMatchTol,        worst <= kNonlinearMatchTol};
}

/// Max |Tr(L E_ab)| over the matrix-unit basis.
inline CheckResult check_trace_preservation(const Superoperator& l, const std::string& kind,
                                            std::uint64_t seed) {
  const Eigen::Index n = l.dim().value();
  double worst = 0.0;
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      worst = std::max(worst, std::abs(l.apply(matrix_unit(n, a, b)).trace()));
  return {"trace-preserving", kind, n,     0, seed, worst, 0.0, 0.0,
          kTracePreservingTol, worst <= kTracePreservingTol};
}

/// For a trace-preserving generator the nonlinear flow collapses to the
/// linear one; sup difference over the grid.
inline CheckResult check_reduction(const Superoperator& l, const std::string& kind,
                                   const DensityOperator& rho0, const TimeGrid& grid,
                                   std::uint64_t seed) {
  const OperatorTrajectory nonlinear = propagate_density_nonlinear(l, rho0, grid);
  const OperatorTrajectory linear =
      propagate_covariance(l, PositiveOperator(rho0.matrix()), grid, PropagationMethod::exact);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < grid.points(); ++k)
    worst = std::max(worst, max_norm(ComplexMatrix(nonlinear.at(k) - linear.at(k))));
  return {"reduction", kind,    rho0.dim(),         0, seed, worst, 0.0, 0.0,
          kReductionMatchTol, worst <= kReductionMatchTol};
}

/// Empirical path covariances against the covariance ODE at selected grid
/// indices, plus the trace-normalized drift diagnostic of the effective
/// (generally time-dependent) density generator.
struct PathComparison {
  std::vector<double> times;
  std::vector<ComplexMatrix> empirical;
  std::vector<ComplexMatrix> ode;
  std::vector<double> effective_trace_drift;
  std::vector<CheckResult> checks;
};

namespace detail {

inline ComplexMatrix drift_for_diagnostic(const SDESpec& spec, double t) {
  if (spec.drift().empty()) return ComplexMatrix::Zero(spec.dim(), spec.dim());
  for (const DriftSegment& seg : spec.drift())
    if (t < seg.until) return seg.a;
  return spec.drift().back().a;
}

}  // namespace detail

inline PathComparison compare_paths_to_ode(const SDESpec& spec, const TimeGrid& grid,
                                           Eigen::Index count, std::uint64_t seed,
                                           const std::vector<Eigen::Index>& indices,
                                           int workers = 1) {
  const CovarianceSummary summary =
      sde_covariance_summary(spec, grid, count, seed, indices, workers);
  const OperatorTrajectory ode = ou_covariance_ode(spec, grid, PropagationMethod::exact);
  const double root_n = std::sqrt(static_cast<double>(count));
  const bool has_drift = !spec.drift().empty();

  PathComparison out;
  for (std::size_t s = 0; s < indices.size(); ++s) {
    const Eigen::Index k = indices[s];
    const double t = grid.time(k);
    const ComplexMatrix& emp = summary.covariances[s];
    const ComplexMatrix& ref = ode.at(k);
    const double err = max_norm(ComplexMatrix(emp - ref));
    const double bound = kCovarianceBandFactor * max_norm(ref) / root_n +
                         (has_drift ? kItoStepFactor * grid.dt() : 0.0);
    CheckResult r{has_drift ? "ito" : "brownian",
                  has_drift ? "sde" : "brownian",
                  spec.dim(),
                  count,
                  seed,
                  err,
                  0.0,
                  0.0,
                  bound,
                  err <= bound};
    r.check += "@t=" + format_float(t);
    const ComplexMatrix a = detail::drift_for_diagnostic(spec, t);
    const double trace_b = ref.trace().real();
    const double trace_flow =
        2.0 * (a * ref).trace().real() + spec.diffusion().matrix().trace().real();
    out.times.push_back(t);
    out.empirical.push_back(emp);
    out.ode.push_back(ref);
    out.effective_trace_drift.push_back(std::abs(trace_b) < kTraceFloor ? 0.0
                                                                        : trace_flow / trace_b);
    out.checks.push_back(std::move(r));
  }
  return out;
}

}  // namespace preq
