#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "preq/errors.hpp"
#include "preq/matrix.hpp"
#include "preq/operators.hpp"
#include "preq/superop.hpp"

namespace preq {

// Trajectory monitoring bounds.
inline constexpr double kTrajectoryPsdTol = 1e-8;
inline constexpr double kDensityDriftError = 1e-6;

/// Uniform grid on [t0, t1] with steps subintervals (steps+1 points).
struct TimeGrid {
  TimeGrid(double t0_, double t1_, int steps_) : t0(t0_), t1(t1_), steps(steps_) {
    if (!(t1 > t0)) throw Error("TimeGrid: t1 must exceed t0");
    if (steps < 1) throw Error("TimeGrid: steps must be >= 1");
    if (!std::isfinite(t0) || !std::isfinite(t1)) throw Error("TimeGrid: non-finite endpoint");
  }

  double dt() const { return (t1 - t0) / steps; }
  double time(Eigen::Index k) const { return t0 + dt() * static_cast<double>(k); }
  Eigen::Index points() const { return static_cast<Eigen::Index>(steps) + 1; }

  double t0;
  double t1;
  int steps;
};

enum class TrajectoryKind { covariance, density };
enum class PropagationMethod { exact, rk4 };

/// A grid time at which the propagated operator dipped below the PSD
/// tolerance. Positive-but-not-CP semigroups may graze; the data is the
/// diagnostic, so propagation records and continues.
struct PositivityWarning {
  double t = 0.0;
  double min_eigenvalue = 0.0;
};

/// One operator per grid point, plus positivity diagnostics.
class OperatorTrajectory {
 public:
  OperatorTrajectory(TimeGrid grid, TrajectoryKind kind, std::vector<ComplexMatrix> values,
                     std::vector<PositivityWarning> warnings)
      : grid_(grid), kind_(kind), values_(std::move(values)), warnings_(std::move(warnings)) {
    if (static_cast<Eigen::Index>(values_.size()) != grid_.points())
      throw Error("OperatorTrajectory: expected " + std::to_string(grid_.points()) +
                  " values, got " + std::to_string(values_.size()));
  }

  const ComplexMatrix& at(Eigen::Index k) const {
    if (k < 0 || k >= static_cast<Eigen::Index>(values_.size()))
      throw IndexError("OperatorTrajectory::at: index " + std::to_string(k));
    return values_[static_cast<std::size_t>(k)];
  }

  const TimeGrid& grid() const { return grid_; }
  TrajectoryKind kind() const { return kind_; }
  const std::vector<ComplexMatrix>& values() const { return values_; }
  const std::vector<PositivityWarning>& warnings() const { return warnings_; }
  const ComplexMatrix& back() const { return values_.back(); }

 private:
  TimeGrid grid_;
  TrajectoryKind kind_;
  std::vector<ComplexMatrix> values_;
  std::vector<PositivityWarning> warnings_;
};

/// Classical fixed-step RK4 on a matrix-valued autonomous field.
template <typename Field>
ComplexMatrix rk4_step(const Field& f, const ComplexMatrix& x, double dt) {
  const ComplexMatrix k1 = f(x);
  const ComplexMatrix k2 = f(ComplexMatrix(x + (0.5 * dt) * k1));
  const ComplexMatrix k3 = f(ComplexMatrix(x + (0.5 * dt) * k2));
  const ComplexMatrix k4 = f(ComplexMatrix(x + dt * k3));
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace detail {

inline void record_positivity(std::vector<PositivityWarning>& warnings, const ComplexMatrix& b,
                              double t) {
  const double lo = min_eigenvalue(b);
  if (lo < -kTrajectoryPsdTol * (1.0 + max_norm(b))) warnings.push_back({t, lo});
}

template <typename Step>
OperatorTrajectory walk_covariance(const ComplexMatrix& b0, const TimeGrid& grid, Step&& step) {
  std::vector<ComplexMatrix> values;
  values.reserve(static_cast<std::size_t>(grid.points()));
  std::vector<PositivityWarning> warnings;
  ComplexMatrix b = b0;
  values.push_back(b);
  record_positivity(warnings, b, grid.t0);
  for (int k = 0; k < grid.steps; ++k) {
    b = step(b);
    values.push_back(b);
    record_positivity(warnings, b, grid.time(k + 1));
  }
  return OperatorTrajectory(grid, TrajectoryKind::covariance, std::move(values),
                            std::move(warnings));
}

}  // namespace detail

/// Covariance flow dB/dt = L B. The exact method exponentiates the n^2 x n^2
/// generator once per step size (scaling-and-squaring Pade underneath).
inline OperatorTrajectory propagate_covariance(const Superoperator& l, const PositiveOperator& b0,
                                               const TimeGrid& grid,
                                               PropagationMethod method = PropagationMethod::exact) {
  if (b0.dim() != l.dim().value())
    throw DimensionMismatch("propagate_covariance: B0 dim vs generator dim");
  if (method == PropagationMethod::exact) {
    const ComplexMatrix stepper = ComplexMatrix(grid.dt() * l.matrix()).exp();
    const Eigen::Index n = b0.dim();
    return detail::walk_covariance(b0.matrix(), grid, [&](const ComplexMatrix& b) {
      return unvec(ComplexVector(stepper * vec(b)), n);
    });
  }
  auto field = [&](const ComplexMatrix& b) { return l.apply(b); };
  return detail::walk_covariance(b0.matrix(), grid,
                                 [&](const ComplexMatrix& b) { return rk4_step(field, b, grid.dt()); });
}

/// Affine flow dB/dt = L B + Sigma. Exact method uses the homogeneous
/// embedding on n^2 + 1 coordinates, reusing the matrix exponential.
inline OperatorTrajectory propagate_covariance(const AffineGenerator& gen,
                                               const PositiveOperator& b0, const TimeGrid& grid,
                                               PropagationMethod method = PropagationMethod::exact) {
  if (b0.dim() != gen.dim().value())
    throw DimensionMismatch("propagate_covariance: B0 dim vs generator dim");
  const Eigen::Index n = b0.dim();
  if (method == PropagationMethod::exact) {
    const Eigen::Index nn = n * n;
    ComplexMatrix embedded = ComplexMatrix::Zero(nn + 1, nn + 1);
    embedded.topLeftCorner(nn, nn) = gen.linear().matrix();
    embedded.block(0, nn, nn, 1) = vec(gen.sigma());
    const ComplexMatrix e = ComplexMatrix(grid.dt() * embedded).exp();
    const ComplexMatrix stepper = e.topLeftCorner(nn, nn);
    const ComplexVector inhom = e.block(0, nn, nn, 1);
    return detail::walk_covariance(b0.matrix(), grid, [&](const ComplexMatrix& b) {
      return unvec(ComplexVector(stepper * vec(b) + inhom), n);
    });
  }
  auto field = [&](const ComplexMatrix& b) { return gen.evaluate(b); };
  return detail::walk_covariance(b0.matrix(), grid,
                                 [&](const ComplexMatrix& b) { return rk4_step(field, b, grid.dt()); });
}

/// Density flow with quadratic nonlinearity: d rho/dt = L rho - rho Tr(L rho).
/// The continuous flow preserves the trace exactly; integrator drift is
/// monitored against kDensityDriftError, never silently corrected.
inline OperatorTrajectory propagate_density_nonlinear(const Superoperator& l,
                                                      const DensityOperator& rho0,
                                                      const TimeGrid& grid) {
  if (rho0.dim() != l.dim().value())
    throw DimensionMismatch("propagate_density_nonlinear: rho0 dim vs generator dim");
  auto field = [&](const ComplexMatrix& rho) {
    const ComplexMatrix lrho = l.apply(rho);
    return ComplexMatrix(lrho - lrho.trace() * rho);
  };
  std::vector<ComplexMatrix> values;
  values.reserve(static_cast<std::size_t>(grid.points()));
  std::vector<PositivityWarning> warnings;
  ComplexMatrix rho = rho0.matrix();
  values.push_back(rho);
  detail::record_positivity(warnings, rho, grid.t0);
  for (int k = 0; k < grid.steps; ++k) {
    rho = rk4_step(field, rho, grid.dt());
    const double drift = std::abs(rho.trace().real() - 1.0) + std::abs(rho.trace().imag());
    if (drift > kDensityDriftError)
      throw StepSizeError("propagate_density_nonlinear: trace drift " + std::to_string(drift) +
                          " at t = " + std::to_string(grid.time(k + 1)) +
                          "; reduce the step size");
    values.push_back(rho);
    detail::record_positivity(warnings, rho, grid.time(k + 1));
  }
  return OperatorTrajectory(grid, TrajectoryKind::density, std::move(values), std::move(warnings));
}

/// B_t = e^{At} B_0 e^{A^dagger t}, PSD by construction.
inline PositiveOperator closed_form_similarity(const ComplexMatrix& a, const PositiveOperator& b0,
                                               double t) {
  require_square_finite(a, "closed_form_similarity");
  if (a.rows() != b0.dim())
    throw DimensionMismatch("closed_form_similarity: A dim vs B0 dim");
  const ComplexMatrix e = ComplexMatrix(t * a).exp();
  ComplexMatrix b = e * b0.matrix() * e.adjoint();
  return PositiveOperator(0.5 * (b + b.adjoint()));
}

/// rho_t = (B_0 + Sigma t) / Tr(B_0 + Sigma t): the normalized Brownian
/// covariance flow.
inline DensityOperator brownian_density(const PositiveOperator& b0, const PositiveOperator& sigma,
                                        double t) {
  if (sigma.dim() != b0.dim()) throw DimensionMismatch("brownian_density: Sigma dim vs B0 dim");
  if (!(t >= 0.0)) throw Error("brownian_density: t must be >= 0");
  return normalize_trace(PositiveOperator(b0.matrix() + t * sigma.matrix())).density;
}

}  // namespace preq
